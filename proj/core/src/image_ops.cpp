// SPDX-License-Identifier: Apache-2.0

#include "fgrn/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace fgrn {

namespace {

template <class Real>
bool grad_wanted(const detail::PayloadT<Real>& p) {
    return p.requires_grad || p.tape_out;
}

// Forward index map for squeeze: returns the flat source index in the
// N×C×sH×sW input for flat destination index `dst` of the N×s²C×H×W output.
struct SqueezeDims {
    std::int64_t n, c, h, w; // output-side dims (h,w are the small spatial dims)
    int s;
};

template <class Real>
std::vector<Real> squeeze_values(const std::vector<Real>& in, const SqueezeDims& d) {
    const std::int64_t s = d.s;
    const std::int64_t hw_in = (d.h * s) * (d.w * s);
    std::vector<Real> out(in.size());
    std::int64_t dst = 0;
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            for (std::int64_t dy = 0; dy < s; ++dy) {
                for (std::int64_t dx = 0; dx < s; ++dx) {
                    const Real* plane = in.data() + (n * d.c + c) * hw_in;
                    for (std::int64_t y = 0; y < d.h; ++y) {
                        const Real* line = plane + (y * s + dy) * (d.w * s) + dx;
                        for (std::int64_t x = 0; x < d.w; ++x) out[dst++] = line[x * s];
                    }
                }
            }
        }
    }
    return out;
}

template <class Real>
std::vector<Real> unsqueeze_values(const std::vector<Real>& in, const SqueezeDims& d) {
    const std::int64_t s = d.s;
    const std::int64_t hw_in = (d.h * s) * (d.w * s);
    std::vector<Real> out(in.size());
    std::int64_t src = 0;
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            for (std::int64_t dy = 0; dy < s; ++dy) {
                for (std::int64_t dx = 0; dx < s; ++dx) {
                    Real* plane = out.data() + (n * d.c + c) * hw_in;
                    for (std::int64_t y = 0; y < d.h; ++y) {
                        Real* line = plane + (y * s + dy) * (d.w * s) + dx;
                        for (std::int64_t x = 0; x < d.w; ++x) line[x * s] = in[src++];
                    }
                }
            }
        }
    }
    return out;
}

} // namespace

template <class Real>
TensorT<Real> squeeze(const TensorT<Real>& t, int s) {
    auto p = t.payload();
    if (p->shape.size() != 4) raise(ErrorCode::ShapeMismatch, "squeeze requires NCHW, got " + shape_str(p->shape));
    if (s < 1) raise(ErrorCode::NotDivisible, "squeeze factor must be >= 1");
    const auto& sh = p->shape;
    if (sh[2] % s != 0 || sh[3] % s != 0)
        raise(ErrorCode::NotDivisible, "spatial dims " + shape_str(sh) + " not divisible by " + std::to_string(s));
    SqueezeDims d{sh[0], sh[1], sh[2] / s, sh[3] / s, s};
    auto* g = t.graph();
    const bool record = g != nullptr && grad_wanted(*p);
    auto out = squeeze_values(p->values, d);
    auto result = make_op_result<Real>(g, Shape{d.n, d.c * s * s, d.h, d.w}, std::move(out), record);
    if (record) {
        auto po = result.payload();
        g->record([p, po, d]() {
            if (po->grad.empty() || !grad_wanted(*p)) return;
            p->ensure_grad();
            auto scattered = unsqueeze_values(po->grad, d);
            for (std::size_t i = 0; i < scattered.size(); ++i) p->grad[i] += scattered[i];
        }, po);
    }
    return result;
}

template <class Real>
TensorT<Real> pixel_shuffle(const TensorT<Real>& t, int s) {
    auto p = t.payload();
    if (p->shape.size() != 4) raise(ErrorCode::ShapeMismatch, "pixel_shuffle requires NCHW, got " + shape_str(p->shape));
    if (s < 1) raise(ErrorCode::NotDivisible, "pixel_shuffle factor must be >= 1");
    const auto& sh = p->shape;
    if (sh[1] % (static_cast<std::int64_t>(s) * s) != 0)
        raise(ErrorCode::NotDivisible, "channel count " + std::to_string(sh[1]) + " not divisible by s^2");
    SqueezeDims d{sh[0], sh[1] / (static_cast<std::int64_t>(s) * s), sh[2], sh[3], s};
    auto* g = t.graph();
    const bool record = g != nullptr && grad_wanted(*p);
    auto out = unsqueeze_values(p->values, d);
    auto result = make_op_result<Real>(g, Shape{d.n, d.c, d.h * s, d.w * s}, std::move(out), record);
    if (record) {
        auto po = result.payload();
        g->record([p, po, d]() {
            if (po->grad.empty() || !grad_wanted(*p)) return;
            p->ensure_grad();
            auto gathered = squeeze_values(po->grad, d);
            for (std::size_t i = 0; i < gathered.size(); ++i) p->grad[i] += gathered[i];
        }, po);
    }
    return result;
}

template <class Real>
TensorT<Real> quantize_ste(const TensorT<Real>& t) {
    auto p = t.payload();
    auto* g = t.graph();
    const bool record = g != nullptr && grad_wanted(*p);
    const std::size_t n = p->values.size();
    std::vector<Real> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Real v = p->values[i];
        v = v < Real(0) ? Real(0) : (v > Real(1) ? Real(1) : v);
        out[i] = std::round(v * Real(255)) / Real(255);
    }
    auto result = make_op_result<Real>(g, p->shape, std::move(out), record);
    if (record) {
        auto po = result.payload();
        g->record([p, po]() {
            if (po->grad.empty() || !grad_wanted(*p)) return;
            p->ensure_grad();
            const std::size_t n = po->grad.size();
            for (std::size_t i = 0; i < n; ++i) {
                const Real x = p->values[i];
                if (x >= Real(0) && x <= Real(1)) p->grad[i] += po->grad[i];
            }
        }, po);
    }
    return result;
}

// ---- bicubic resampling ----

double keys_cubic(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace {

struct ResampleAxis {
    // For each output coordinate: first source index plus normalized weights.
    std::vector<std::int64_t> start;
    std::vector<std::vector<double>> weights;
};

ResampleAxis build_axis(std::int64_t in_size, std::int64_t out_size) {
    ResampleAxis ax;
    ax.start.resize(static_cast<std::size_t>(out_size));
    ax.weights.resize(static_cast<std::size_t>(out_size));
    const double scale = static_cast<double>(out_size) / static_cast<double>(in_size);
    const double kscale = scale < 1.0 ? 1.0 / scale : 1.0; // widened support when downscaling
    const double support = 2.0 * kscale;
    for (std::int64_t o = 0; o < out_size; ++o) {
        const double center = (static_cast<double>(o) + 0.5) / scale - 0.5;
        const std::int64_t lo = static_cast<std::int64_t>(std::ceil(center - support));
        const std::int64_t hi = static_cast<std::int64_t>(std::floor(center + support));
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(hi - lo + 1));
        double total = 0.0;
        for (std::int64_t j = lo; j <= hi; ++j) {
            const double v = keys_cubic((static_cast<double>(j) - center) / kscale);
            w.push_back(v);
            total += v;
        }
        for (auto& v : w) v /= total;
        ax.start[static_cast<std::size_t>(o)] = lo;
        ax.weights[static_cast<std::size_t>(o)] = std::move(w);
    }
    return ax;
}

std::int64_t clamp_index(std::int64_t i, std::int64_t n) {
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

// One separable pass along the fastest (width) axis.
void resample_rows(const double* src, std::int64_t h, std::int64_t w,
                   const ResampleAxis& ax, std::int64_t out_w, double* dst) {
    for (std::int64_t y = 0; y < h; ++y) {
        const double* line = src + y * w;
        double* out = dst + y * out_w;
        for (std::int64_t x = 0; x < out_w; ++x) {
            const auto& wt = ax.weights[static_cast<std::size_t>(x)];
            const std::int64_t lo = ax.start[static_cast<std::size_t>(x)];
            double acc = 0.0;
            for (std::size_t j = 0; j < wt.size(); ++j)
                acc += wt[j] * line[clamp_index(lo + static_cast<std::int64_t>(j), w)];
            out[x] = acc;
        }
    }
}

std::vector<double> resample_plane(const double* src, std::int64_t h, std::int64_t w,
                                   std::int64_t oh, std::int64_t ow) {
    const ResampleAxis ax_w = build_axis(w, ow);
    const ResampleAxis ax_h = build_axis(h, oh);
    // width pass
    std::vector<double> tmp(static_cast<std::size_t>(h * ow));
    resample_rows(src, h, w, ax_w, ow, tmp.data());
    // height pass (via transpose-free column walk)
    std::vector<double> out(static_cast<std::size_t>(oh * ow));
    for (std::int64_t y = 0; y < oh; ++y) {
        const auto& wt = ax_h.weights[static_cast<std::size_t>(y)];
        const std::int64_t lo = ax_h.start[static_cast<std::size_t>(y)];
        double* line = out.data() + y * ow;
        std::fill(line, line + ow, 0.0);
        for (std::size_t j = 0; j < wt.size(); ++j) {
            const double* srow = tmp.data() + clamp_index(lo + static_cast<std::int64_t>(j), h) * ow;
            const double wj = wt[j];
            for (std::int64_t x = 0; x < ow; ++x) line[x] += wj * srow[x];
        }
    }
    return out;
}

} // namespace

PlanarImage bicubic_resize(const PlanarImage& img, int out_h, int out_w, bool clamp_output) {
    if (out_h < 1 || out_w < 1) raise(ErrorCode::ShapeMismatch, "bicubic_resize target dims must be positive");
    PlanarImage out(out_h, out_w);
    const std::int64_t hw_in = static_cast<std::int64_t>(img.height) * img.width;
    const std::int64_t hw_out = static_cast<std::int64_t>(out_h) * out_w;
    for (int c = 0; c < PlanarImage::kChannels; ++c) {
        auto plane = resample_plane(img.data.data() + c * hw_in, img.height, img.width, out_h, out_w);
        std::copy(plane.begin(), plane.end(), out.data.begin() + c * hw_out);
    }
    if (clamp_output) {
        for (auto& v : out.data) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

Plane bicubic_resize_plane(const Plane& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) raise(ErrorCode::ShapeMismatch, "bicubic_resize target dims must be positive");
    Plane out(out_h, out_w);
    out.data = resample_plane(src.data.data(), src.height, src.width, out_h, out_w);
    return out;
}

template <class Real>
TensorT<Real> bicubic_downscale_batch(const TensorT<Real>& nchw, int s) {
    const auto& sh = nchw.shape();
    if (sh.size() != 4) raise(ErrorCode::ShapeMismatch, "expected NCHW batch");
    if (sh[2] % s != 0 || sh[3] % s != 0)
        raise(ErrorCode::NotDivisible, "batch spatial dims not divisible by scale");
    const std::int64_t n = sh[0], c = sh[1], h = sh[2], w = sh[3];
    const std::int64_t oh = h / s, ow = w / s;
    std::vector<Real> out(static_cast<std::size_t>(n * c * oh * ow));
    std::vector<double> plane(static_cast<std::size_t>(h * w));
    const auto& v = nchw.values();
    for (std::int64_t i = 0; i < n * c; ++i) {
        for (std::int64_t j = 0; j < h * w; ++j) plane[static_cast<std::size_t>(j)] = static_cast<double>(v[i * h * w + j]);
        auto res = resample_plane(plane.data(), h, w, oh, ow);
        for (std::int64_t j = 0; j < oh * ow; ++j) {
            double x = res[static_cast<std::size_t>(j)];
            x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
            out[static_cast<std::size_t>(i * oh * ow + j)] = static_cast<Real>(x);
        }
    }
    return TensorT<Real>::from_values(Shape{n, c, oh, ow}, std::move(out));
}

// ---- color conversion ----

Plane rgb_to_y(const PlanarImage& img) {
    Plane y(img.height, img.width);
    const std::int64_t hw = static_cast<std::int64_t>(img.height) * img.width;
    for (std::int64_t i = 0; i < hw; ++i) {
        const double r = img.data[static_cast<std::size_t>(i)];
        const double g = img.data[static_cast<std::size_t>(hw + i)];
        const double b = img.data[static_cast<std::size_t>(2 * hw + i)];
        y.data[static_cast<std::size_t>(i)] = (65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0;
    }
    return y;
}

// ---- image <-> tensor ----

template <class Real>
TensorT<Real> image_to_tensor(const PlanarImage& img) {
    std::vector<Real> v(img.data.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<Real>(img.data[i]);
    return TensorT<Real>::from_values(Shape{1, 3, img.height, img.width}, std::move(v));
}

template <class Real>
PlanarImage tensor_to_image(const TensorT<Real>& t, std::int64_t n, bool clamp) {
    const auto& sh = t.shape();
    if (sh.size() != 4 || sh[1] != 3) raise(ErrorCode::ShapeMismatch, "expected N×3×H×W tensor");
    if (n < 0 || n >= sh[0]) raise(ErrorCode::ShapeMismatch, "batch index out of range");
    PlanarImage img(static_cast<int>(sh[2]), static_cast<int>(sh[3]));
    const std::int64_t chw = 3 * sh[2] * sh[3];
    const auto& v = t.values();
    for (std::int64_t i = 0; i < chw; ++i) {
        double x = static_cast<double>(v[static_cast<std::size_t>(n * chw + i)]);
        if (clamp) x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
        img.data[static_cast<std::size_t>(i)] = x;
    }
    return img;
}

std::vector<std::uint8_t> image_to_rgb8(const PlanarImage& img) {
    const std::int64_t hw = static_cast<std::int64_t>(img.height) * img.width;
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(3 * hw));
    for (std::int64_t i = 0; i < hw; ++i) {
        for (int c = 0; c < 3; ++c)
            rgb[static_cast<std::size_t>(3 * i + c)] =
                static_cast<std::uint8_t>(round_to_byte(img.data[static_cast<std::size_t>(c * hw + i)]));
    }
    return rgb;
}

PlanarImage rgb8_to_image(const std::uint8_t* rgb, int height, int width) {
    PlanarImage img(height, width);
    const std::int64_t hw = static_cast<std::int64_t>(height) * width;
    for (std::int64_t i = 0; i < hw; ++i) {
        for (int c = 0; c < 3; ++c)
            img.data[static_cast<std::size_t>(c * hw + i)] =
                static_cast<double>(rgb[static_cast<std::size_t>(3 * i + c)]) / 255.0;
    }
    return img;
}

#define FGRN_INSTANTIATE_IMAGE_OPS(Real)                                     \
    template TensorT<Real> squeeze<Real>(const TensorT<Real>&, int);         \
    template TensorT<Real> pixel_shuffle<Real>(const TensorT<Real>&, int);   \
    template TensorT<Real> quantize_ste<Real>(const TensorT<Real>&);         \
    template TensorT<Real> bicubic_downscale_batch<Real>(const TensorT<Real>&, int); \
    template TensorT<Real> image_to_tensor<Real>(const PlanarImage&);        \
    template PlanarImage tensor_to_image<Real>(const TensorT<Real>&, std::int64_t, bool);

FGRN_INSTANTIATE_IMAGE_OPS(float)
FGRN_INSTANTIATE_IMAGE_OPS(double)

} // namespace fgrn
