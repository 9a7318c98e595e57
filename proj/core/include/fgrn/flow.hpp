// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_FLOW_HPP
#define FGRN_FLOW_HPP

#include <utility>
#include <vector>

#include "fgrn/layers.hpp"
#include "fgrn/tensor.hpp"

namespace fgrn {

/// Five 3×3 conv layers with dense connectivity: layer i consumes the block
/// input concatenated with every previous layer output. The final layer is
/// zero-initialized, so a fresh block computes the zero function.
template <class Real>
struct DenseBlockT {
    std::vector<Conv2dT<Real>> convs; // 5 layers
    std::int64_t in_channels = 0;
    std::int64_t out_channels = 0;
    std::int64_t growth = 0;
    double lrelu_slope = 0.2;

    static DenseBlockT make(std::int64_t in_ch, std::int64_t out_ch, std::int64_t growth, Rng& rng);
    TensorT<Real> forward(const TensorT<Real>& x) const;
    void collect_params(const std::string& prefix, ParamMapT<Real>& out) const;
};

/// One invertible affine coupling cell on a 3-channel representation,
/// split C1=1 / C2=2. Scales are clamped to |s| <= lambda via tanh, which
/// keeps exp(s) bounded and the analytic log-determinant exact.
template <class Real>
struct CouplingCellT {
    DenseBlockT<Real> alpha; // C2 -> C1
    DenseBlockT<Real> beta;  // C1 -> C2
    DenseBlockT<Real> phi;   // C1 -> C2
    std::int64_t c1 = 1;
    std::int64_t c2 = 2;
    double lambda = 1.0;

    static CouplingCellT make(std::int64_t growth, double lambda, Rng& rng);

    /// l1' = l1 + alpha(l2); s = lambda*tanh(beta(l1')); l2' = l2*exp(s) + phi(l1').
    /// Returns (concat(l1',l2'), sum of s over all elements).
    std::pair<TensorT<Real>, TensorT<Real>> forward(const TensorT<Real>& l) const;
    /// Exact algebraic inverse of forward.
    TensorT<Real> inverse(const TensorT<Real>& lp) const;

    void collect_params(const std::string& prefix, ParamMapT<Real>& out) const;
};

/// F = f_1 ∘ f_2 ∘ … ∘ f_K. Forward applies cells in order and accumulates
/// the per-cell log-determinants; inverse applies the inverses in reverse.
template <class Real>
struct FlowModuleT {
    std::vector<CouplingCellT<Real>> cells;

    static FlowModuleT make(int num_cells, std::int64_t growth, double lambda, Rng& rng);

    std::pair<TensorT<Real>, TensorT<Real>> forward(const TensorT<Real>& x) const;
    TensorT<Real> inverse(const TensorT<Real>& xhat) const;

    void collect_params(const std::string& prefix, ParamMapT<Real>& out) const;
};

} // namespace fgrn

#endif // FGRN_FLOW_HPP
