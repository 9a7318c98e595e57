// SPDX-License-Identifier: Apache-2.0

#include "fgrn/rescale.hpp"

#include "fgrn/image_ops.hpp"

namespace fgrn {

template <class Real>
ResBlockT<Real> ResBlockT<Real>::make(std::int64_t width, Rng& rng) {
    ResBlockT b;
    b.conv1 = Conv2dT<Real>::make(width, width, 3, rng);
    b.conv2 = Conv2dT<Real>::make(width, width, 3, rng);
    return b;
}

template <class Real>
TensorT<Real> ResBlockT<Real>::forward(const TensorT<Real>& x) const {
    return add(x, conv2.forward(leaky_relu(conv1.forward(x), lrelu_slope)));
}

template <class Real>
void ResBlockT<Real>::collect_params(const std::string& prefix, ParamMapT<Real>& out) const {
    conv1.collect_params(prefix + ".conv1", out);
    conv2.collect_params(prefix + ".conv2", out);
}

// Tail convs start near zero with the given bias so the initial
// representation sits inside the quantizer's pass-through range.
static constexpr double kTailWeightScale = 0.1;

template <class Real>
DownscalerT<Real> DownscalerT<Real>::make(int scale, std::int64_t width, int num_blocks, Rng& rng) {
    DownscalerT d;
    d.scale = scale;
    d.head = Conv2dT<Real>::make(3 * scale * scale, width, 3, rng);
    for (int i = 0; i < num_blocks; ++i) d.body.push_back(ResBlockT<Real>::make(width, rng));
    d.tail = Conv2dT<Real>::make(width, 3, 3, rng, kTailWeightScale, 0.5);
    return d;
}

template <class Real>
TensorT<Real> DownscalerT<Real>::forward(const TensorT<Real>& hr) const {
    auto x = head.forward(squeeze(hr, scale));
    for (const auto& b : body) x = b.forward(x);
    return tail.forward(x);
}

template <class Real>
void DownscalerT<Real>::collect_params(const std::string& prefix, ParamMapT<Real>& out) const {
    head.collect_params(prefix + ".head", out);
    for (std::size_t i = 0; i < body.size(); ++i)
        body[i].collect_params(prefix + ".body" + std::to_string(i), out);
    tail.collect_params(prefix + ".tail", out);
}

template <class Real>
UpscalerT<Real> UpscalerT<Real>::make(int scale, std::int64_t width, int num_blocks, Rng& rng) {
    UpscalerT u;
    u.scale = scale;
    u.head = Conv2dT<Real>::make(3, width, 3, rng);
    for (int i = 0; i < num_blocks; ++i) u.body.push_back(ResBlockT<Real>::make(width, rng));
    u.tail = Conv2dT<Real>::make(width, 3 * scale * scale, 3, rng, kTailWeightScale, 0.0);
    return u;
}

template <class Real>
TensorT<Real> UpscalerT<Real>::forward(const TensorT<Real>& lr) const {
    if (lr.rank() != 4 || lr.dim(1) != 3)
        raise(ErrorCode::ShapeMismatch, "upscaler expects N×3×H×W, got " + shape_str(lr.shape()));
    auto x = head.forward(lr);
    for (const auto& b : body) x = b.forward(x);
    return pixel_shuffle(tail.forward(x), scale);
}

template <class Real>
void UpscalerT<Real>::collect_params(const std::string& prefix, ParamMapT<Real>& out) const {
    head.collect_params(prefix + ".head", out);
    for (std::size_t i = 0; i < body.size(); ++i)
        body[i].collect_params(prefix + ".body" + std::to_string(i), out);
    tail.collect_params(prefix + ".tail", out);
}

template struct ResBlockT<float>;
template struct ResBlockT<double>;
template struct DownscalerT<float>;
template struct DownscalerT<double>;
template struct UpscalerT<float>;
template struct UpscalerT<double>;

} // namespace fgrn
