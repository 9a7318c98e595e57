// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_LAYERS_HPP
#define FGRN_LAYERS_HPP

#include <string>
#include <utility>
#include <vector>

#include "fgrn/rng.hpp"
#include "fgrn/tensor.hpp"

namespace fgrn {

template <class Real>
using ParamMapT = std::vector<std::pair<std::string, TensorT<Real>>>;

/// 3×3 (by default) convolution layer with bias.
template <class Real>
struct Conv2dT {
    TensorT<Real> weight; // O×I×k×k
    TensorT<Real> bias;   // O
    int stride = 1;
    int pad = 1;

    static Conv2dT make(std::int64_t in_ch, std::int64_t out_ch, int k, Rng& rng,
                        double weight_scale = 1.0, double bias_value = 0.0);
    static Conv2dT make_zero(std::int64_t in_ch, std::int64_t out_ch, int k);

    TensorT<Real> forward(const TensorT<Real>& x) const { return conv2d(x, weight, bias, stride, pad); }

    void collect_params(const std::string& prefix, ParamMapT<Real>& out) const {
        out.emplace_back(prefix + ".weight", weight);
        out.emplace_back(prefix + ".bias", bias);
    }
};

/// He-style normal init: stddev sqrt(2 / fan_in), optionally rescaled.
template <class Real>
Conv2dT<Real> Conv2dT<Real>::make(std::int64_t in_ch, std::int64_t out_ch, int k, Rng& rng,
                                  double weight_scale, double bias_value) {
    const std::int64_t fan_in = in_ch * k * k;
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in)) * weight_scale;
    std::vector<Real> w(static_cast<std::size_t>(out_ch * fan_in));
    for (auto& v : w) v = static_cast<Real>(rng.normal(0.0, stddev));
    Conv2dT c;
    c.weight = TensorT<Real>::param(Shape{out_ch, in_ch, k, k}, std::move(w));
    c.bias = TensorT<Real>::param(Shape{out_ch}, std::vector<Real>(static_cast<std::size_t>(out_ch),
                                                                   static_cast<Real>(bias_value)));
    return c;
}

template <class Real>
Conv2dT<Real> Conv2dT<Real>::make_zero(std::int64_t in_ch, std::int64_t out_ch, int k) {
    Conv2dT c;
    c.weight = TensorT<Real>::param_zeros(Shape{out_ch, in_ch, k, k});
    c.bias = TensorT<Real>::param_zeros(Shape{out_ch});
    return c;
}

} // namespace fgrn

#endif // FGRN_LAYERS_HPP
