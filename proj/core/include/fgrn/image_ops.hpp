// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_IMAGE_OPS_HPP
#define FGRN_IMAGE_OPS_HPP

#include <cstdint>
#include <vector>

#include "fgrn/tensor.hpp"

namespace fgrn {

/// 3-channel CHW float image, values in [0,1].
struct PlanarImage {
    static constexpr int kChannels = 3;
    int height = 0;
    int width = 0;
    std::vector<double> data; // CHW

    PlanarImage() = default;
    PlanarImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, 0.0) {}

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

/// Single-channel float plane.
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {}

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// ---- lossless space-to-depth permutations ----

/// N×C×sH×sW -> N×s²C×H×W. Output channel c·s² + dy·s + dx holds the input
/// pixel at block offset (dy,dx) of channel c. Inverse of pixel_shuffle.
template <class Real> TensorT<Real> squeeze(const TensorT<Real>& t, int s);

/// N×s²C×H×W -> N×C×sH×sW. Exact inverse of squeeze.
template <class Real> TensorT<Real> pixel_shuffle(const TensorT<Real>& t, int s);

/// Clamp to [0,1] then snap to the 8-bit grid round(v·255)/255, rounding
/// half away from zero. Backward passes gradients through unchanged where the
/// input lies in [0,1] and blocks them outside.
template <class Real> TensorT<Real> quantize_ste(const TensorT<Real>& t);

/// Rounding used for both quantize_ste and 8-bit image encoding.
inline int round_to_byte(double v) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<int>(c * 255.0 + 0.5); // half away from zero (v >= 0 here)
}

// ---- resampling ----

/// Keys cubic kernel, a = -0.5.
double keys_cubic(double x);

/// Separable Keys-cubic resampling with half-pixel center alignment. For
/// downscaling the kernel support widens by the scale ratio (anti-aliasing);
/// sample coordinates clamp at the edges. Values are clamped to [0,1] unless
/// clamp_output is false.
PlanarImage bicubic_resize(const PlanarImage& img, int out_h, int out_w, bool clamp_output = true);
Plane bicubic_resize_plane(const Plane& src, int out_h, int out_w);

/// Per-item bicubic downscale of an N×3×H×W batch by factor s. Returns a
/// plain leaf (no gradient path); used to build guidance targets.
template <class Real>
TensorT<Real> bicubic_downscale_batch(const TensorT<Real>& nchw, int s);

// ---- color conversion ----

/// ITU-R BT.601 studio-swing luma, output in [16/255, 235/255] for inputs in [0,1].
Plane rgb_to_y(const PlanarImage& img);

// ---- image <-> tensor ----

template <class Real> TensorT<Real> image_to_tensor(const PlanarImage& img);
/// Batch index n of an N×3×H×W tensor; values clamped to [0,1] when clamp is set.
template <class Real> PlanarImage tensor_to_image(const TensorT<Real>& t, std::int64_t n = 0, bool clamp = true);

/// 8-bit RGB interleaved bytes (the PNG payload), via round_to_byte.
std::vector<std::uint8_t> image_to_rgb8(const PlanarImage& img);
PlanarImage rgb8_to_image(const std::uint8_t* rgb, int height, int width);

} // namespace fgrn

#endif // FGRN_IMAGE_OPS_HPP
