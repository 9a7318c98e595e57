// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>

#include <cmath>
#include <vector>

#include "fgrn/tensor.hpp"

namespace fgrn {

namespace {

struct ConvDims {
    std::int64_t n, ci, h, w;   // input
    std::int64_t co, k;         // weight
    std::int64_t oh, ow;        // output
    int stride, pad;
};

ConvDims conv_dims(const Shape& in, const Shape& wt, const Shape& bs, int stride, int pad) {
    if (in.size() != 4) raise(ErrorCode::ShapeMismatch, "conv2d input must be NCHW, got " + shape_str(in));
    if (wt.size() != 4) raise(ErrorCode::ShapeMismatch, "conv2d weight must be OIkk, got " + shape_str(wt));
    if (bs.size() != 1 || bs[0] != wt[0])
        raise(ErrorCode::ShapeMismatch, "conv2d bias must have one entry per output channel");
    if (wt[2] != wt[3] || wt[2] % 2 == 0)
        raise(ErrorCode::ShapeMismatch, "conv2d kernel must be square with odd size, got " + shape_str(wt));
    if (in[1] != wt[1])
        raise(ErrorCode::ShapeMismatch, "conv2d channel disagreement: input has " + std::to_string(in[1]) +
                                            ", weight expects " + std::to_string(wt[1]));
    if (stride < 1) raise(ErrorCode::ShapeMismatch, "conv2d stride must be >= 1");
    if (pad < 0) raise(ErrorCode::ShapeMismatch, "conv2d pad must be >= 0");
    ConvDims d;
    d.n = in[0]; d.ci = in[1]; d.h = in[2]; d.w = in[3];
    d.co = wt[0]; d.k = wt[2];
    d.stride = stride; d.pad = pad;
    d.oh = (d.h + 2 * pad - d.k) / stride + 1;
    d.ow = (d.w + 2 * pad - d.k) / stride + 1;
    if (d.oh < 1 || d.ow < 1) raise(ErrorCode::ShapeMismatch, "conv2d output would be empty");
    return d;
}

// Unpacks one batch item into a (ci*k*k) x (oh*ow) row-major patch matrix.
template <class Real>
void im2col(const Real* src, const ConvDims& d, Real* col) {
    const std::int64_t os = d.oh * d.ow;
    for (std::int64_t c = 0; c < d.ci; ++c) {
        const Real* plane = src + c * d.h * d.w;
        for (std::int64_t ky = 0; ky < d.k; ++ky) {
            for (std::int64_t kx = 0; kx < d.k; ++kx) {
                Real* row = col + ((c * d.k + ky) * d.k + kx) * os;
                for (std::int64_t oy = 0; oy < d.oh; ++oy) {
                    const std::int64_t iy = oy * d.stride - d.pad + ky;
                    Real* out = row + oy * d.ow;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(out, out + d.ow, Real(0));
                        continue;
                    }
                    const Real* line = plane + iy * d.w;
                    for (std::int64_t ox = 0; ox < d.ow; ++ox) {
                        const std::int64_t ix = ox * d.stride - d.pad + kx;
                        out[ox] = (ix >= 0 && ix < d.w) ? line[ix] : Real(0);
                    }
                }
            }
        }
    }
}

// Scatter-adds a patch-matrix gradient back onto the input gradient.
template <class Real>
void col2im_add(const Real* col, const ConvDims& d, Real* dst) {
    const std::int64_t os = d.oh * d.ow;
    for (std::int64_t c = 0; c < d.ci; ++c) {
        Real* plane = dst + c * d.h * d.w;
        for (std::int64_t ky = 0; ky < d.k; ++ky) {
            for (std::int64_t kx = 0; kx < d.k; ++kx) {
                const Real* row = col + ((c * d.k + ky) * d.k + kx) * os;
                for (std::int64_t oy = 0; oy < d.oh; ++oy) {
                    const std::int64_t iy = oy * d.stride - d.pad + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    Real* line = plane + iy * d.w;
                    const Real* in = row + oy * d.ow;
                    for (std::int64_t ox = 0; ox < d.ow; ++ox) {
                        const std::int64_t ix = ox * d.stride - d.pad + kx;
                        if (ix >= 0 && ix < d.w) line[ix] += in[ox];
                    }
                }
            }
        }
    }
}

template <class Real>
using MatRM = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Real>
bool grad_wanted(const detail::PayloadT<Real>& p) {
    return p.requires_grad || p.tape_out;
}

} // namespace

template <class Real>
TensorT<Real> conv2d(const TensorT<Real>& input, const TensorT<Real>& weight,
                     const TensorT<Real>& bias, int stride, int pad) {
    auto pi = input.payload();
    auto pw = weight.payload();
    auto pb = bias.payload();
    const ConvDims d = conv_dims(pi->shape, pw->shape, pb->shape, stride, pad);

    GraphT<Real>* g = nullptr;
    for (const TensorT<Real>* t : {&input, &weight, &bias}) {
        if (t->graph() == nullptr) continue;
        if (g != nullptr && g != t->graph()) raise(ErrorCode::Internal, "op inputs belong to different graphs");
        g = t->graph();
    }
    const bool record = g != nullptr &&
                        (grad_wanted(*pi) || grad_wanted(*pw) || grad_wanted(*pb));

    const std::int64_t os = d.oh * d.ow;
    const std::int64_t ck2 = d.ci * d.k * d.k;
    std::vector<Real> out(static_cast<std::size_t>(d.n * d.co * os));
    std::vector<Real> col(static_cast<std::size_t>(ck2 * os));

    Eigen::Map<const MatRM<Real>> wmat(pw->values.data(), d.co, ck2);
    for (std::int64_t n = 0; n < d.n; ++n) {
        im2col(pi->values.data() + n * d.ci * d.h * d.w, d, col.data());
        Eigen::Map<const MatRM<Real>> cmat(col.data(), ck2, os);
        Eigen::Map<MatRM<Real>> ymat(out.data() + n * d.co * os, d.co, os);
        ymat.noalias() = wmat * cmat;
        for (std::int64_t o = 0; o < d.co; ++o) ymat.row(o).array() += pb->values[static_cast<std::size_t>(o)];
    }

    auto result = make_op_result<Real>(g, Shape{d.n, d.co, d.oh, d.ow}, std::move(out), record);
    if (record) {
        auto po = result.payload();
        g->record([pi, pw, pb, po, d]() {
            if (po->grad.empty()) return;
            const bool wi = grad_wanted(*pi);
            const bool ww = grad_wanted(*pw);
            const bool wb = grad_wanted(*pb);
            if (!wi && !ww && !wb) return;
            const std::int64_t os = d.oh * d.ow;
            const std::int64_t ck2 = d.ci * d.k * d.k;
            if (wi) pi->ensure_grad();
            if (ww) pw->ensure_grad();
            if (wb) pb->ensure_grad();

            std::vector<Real> col(static_cast<std::size_t>(ck2 * os));
            std::vector<Real> gcol(wi ? static_cast<std::size_t>(ck2 * os) : 0);
            Eigen::Map<const MatRM<Real>> wmat(pw->values.data(), d.co, ck2);
            for (std::int64_t n = 0; n < d.n; ++n) {
                Eigen::Map<const MatRM<Real>> gy(po->grad.data() + n * d.co * os, d.co, os);
                if (wb) {
                    // plain sequential sum: bitwise deterministic regardless
                    // of buffer alignment, unlike a vectorized redux
                    const Real* gybase = po->grad.data() + n * d.co * os;
                    for (std::int64_t o = 0; o < d.co; ++o) {
                        Real acc = Real(0);
                        const Real* row = gybase + o * os;
                        for (std::int64_t i = 0; i < os; ++i) acc += row[i];
                        pb->grad[static_cast<std::size_t>(o)] += acc;
                    }
                }
                if (ww) {
                    im2col(pi->values.data() + n * d.ci * d.h * d.w, d, col.data());
                    Eigen::Map<const MatRM<Real>> cmat(col.data(), ck2, os);
                    Eigen::Map<MatRM<Real>> gw(pw->grad.data(), d.co, ck2);
                    gw.noalias() += gy * cmat.transpose();
                }
                if (wi) {
                    Eigen::Map<MatRM<Real>> gc(gcol.data(), ck2, os);
                    gc.noalias() = wmat.transpose() * gy;
                    col2im_add(gcol.data(), d, pi->grad.data() + n * d.ci * d.h * d.w);
                }
            }
        }, po);
    }
    return result;
}

template TensorT<float> conv2d<float>(const TensorT<float>&, const TensorT<float>&,
                                      const TensorT<float>&, int, int);
template TensorT<double> conv2d<double>(const TensorT<double>&, const TensorT<double>&,
                                        const TensorT<double>&, int, int);

} // namespace fgrn
