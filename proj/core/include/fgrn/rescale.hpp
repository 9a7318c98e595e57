// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_RESCALE_HPP
#define FGRN_RESCALE_HPP

#include <vector>

#include "fgrn/layers.hpp"
#include "fgrn/tensor.hpp"

namespace fgrn {

/// conv -> leaky_relu -> conv with identity skip. No normalization, no
/// residual scaling; the all-zero block is the identity map.
template <class Real>
struct ResBlockT {
    Conv2dT<Real> conv1;
    Conv2dT<Real> conv2;
    double lrelu_slope = 0.2;

    static ResBlockT make(std::int64_t width, Rng& rng);
    TensorT<Real> forward(const TensorT<Real>& x) const;
    void collect_params(const std::string& prefix, ParamMapT<Real>& out) const;
};

/// Learned downscaler: squeeze(s) -> head conv (3s² -> w) -> R ResBlocks ->
/// tail conv (w -> 3). Maps N×3×sH×sW to the N×3×H×W representation; the
/// output range is unconstrained.
template <class Real>
struct DownscalerT {
    int scale = 2;
    Conv2dT<Real> head;
    std::vector<ResBlockT<Real>> body;
    Conv2dT<Real> tail;

    static DownscalerT make(int scale, std::int64_t width, int num_blocks, Rng& rng);
    TensorT<Real> forward(const TensorT<Real>& hr) const;
    void collect_params(const std::string& prefix, ParamMapT<Real>& out) const;
};

/// Learned upscaler: head conv (3 -> w) -> R ResBlocks -> tail conv
/// (w -> 3s²) -> pixel_shuffle(s). Maps N×3×H×W to N×3×sH×sW.
template <class Real>
struct UpscalerT {
    int scale = 2;
    Conv2dT<Real> head;
    std::vector<ResBlockT<Real>> body;
    Conv2dT<Real> tail;

    static UpscalerT make(int scale, std::int64_t width, int num_blocks, Rng& rng);
    TensorT<Real> forward(const TensorT<Real>& lr) const;
    void collect_params(const std::string& prefix, ParamMapT<Real>& out) const;
};

} // namespace fgrn

#endif // FGRN_RESCALE_HPP
