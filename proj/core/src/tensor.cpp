// SPDX-License-Identifier: Apache-2.0

#include "fgrn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace fgrn {

std::int64_t shape_size(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

void check_shape(const Shape& shape) {
    for (auto d : shape) {
        if (d <= 0) raise(ErrorCode::ShapeMismatch, "non-positive dimension in shape " + shape_str(shape));
    }
    if (shape.empty()) raise(ErrorCode::ShapeMismatch, "empty shape");
}

std::vector<std::int64_t> row_major_strides(const Shape& shape) {
    std::vector<std::int64_t> s(shape.size(), 1);
    for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
        s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i) + 1] * shape[static_cast<std::size_t>(i) + 1];
    return s;
}

Shape broadcast_shape_of(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        const std::int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        std::int64_t d;
        if (da == db) d = da;
        else if (da == 1) d = db;
        else if (db == 1) d = da;
        else raise(ErrorCode::ShapeMismatch, "cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        out[r - 1 - i] = d;
    }
    return out;
}

// Strides of `in` aligned to the rank of `out`, with 0 on broadcast dims.
std::vector<std::int64_t> aligned_strides(const Shape& in, const Shape& out) {
    const auto base = row_major_strides(in);
    std::vector<std::int64_t> s(out.size(), 0);
    const std::size_t off = out.size() - in.size();
    for (std::size_t i = 0; i < in.size(); ++i)
        s[off + i] = (in[i] == 1 && out[off + i] != 1) ? 0 : base[i];
    return s;
}

// Visits every element of the broadcast result, handing the callback the
// output index plus the mapped offsets into both inputs.
template <class Fn>
void for_each_bcast(const Shape& out, const std::vector<std::int64_t>& sa,
                    const std::vector<std::int64_t>& sb, Fn&& fn) {
    const std::int64_t n = shape_size(out);
    const int r = static_cast<int>(out.size());
    std::vector<std::int64_t> coord(out.size(), 0);
    std::int64_t ia = 0, ib = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        fn(i, ia, ib);
        for (int d = r - 1; d >= 0; --d) {
            coord[static_cast<std::size_t>(d)]++;
            ia += sa[static_cast<std::size_t>(d)];
            ib += sb[static_cast<std::size_t>(d)];
            if (coord[static_cast<std::size_t>(d)] < out[static_cast<std::size_t>(d)]) break;
            ia -= sa[static_cast<std::size_t>(d)] * out[static_cast<std::size_t>(d)];
            ib -= sb[static_cast<std::size_t>(d)] * out[static_cast<std::size_t>(d)];
            coord[static_cast<std::size_t>(d)] = 0;
        }
    }
}

} // namespace

// ---- TensorT -------------------------------------------------------------

template <class Real>
TensorT<Real> make_op_result(GraphT<Real>* graph, Shape shape, std::vector<Real> values, bool tape_out) {
    TensorT<Real> t;
    auto p = std::make_shared<detail::PayloadT<Real>>();
    p->shape = std::move(shape);
    p->values = std::move(values);
    p->tape_out = tape_out;
    t.payload_ = std::move(p);
    t.graph_ = graph;
    return t;
}

template <class Real>
TensorT<Real> TensorT<Real>::zeros(Shape shape) {
    check_shape(shape);
    const auto n = static_cast<std::size_t>(shape_size(shape));
    return make_op_result<Real>(nullptr, std::move(shape), std::vector<Real>(n, Real(0)), false);
}

template <class Real>
TensorT<Real> TensorT<Real>::full(Shape shape, Real value) {
    check_shape(shape);
    const auto n = static_cast<std::size_t>(shape_size(shape));
    return make_op_result<Real>(nullptr, std::move(shape), std::vector<Real>(n, value), false);
}

template <class Real>
TensorT<Real> TensorT<Real>::from_values(Shape shape, std::vector<Real> values) {
    check_shape(shape);
    if (shape_size(shape) != static_cast<std::int64_t>(values.size()))
        raise(ErrorCode::ShapeMismatch,
              "value count " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
    return make_op_result<Real>(nullptr, std::move(shape), std::move(values), false);
}

template <class Real>
TensorT<Real> TensorT<Real>::param(Shape shape, std::vector<Real> values) {
    auto t = from_values(std::move(shape), std::move(values));
    t.payload_->requires_grad = true;
    return t;
}

template <class Real>
TensorT<Real> TensorT<Real>::param_zeros(Shape shape) {
    auto t = zeros(std::move(shape));
    t.payload_->requires_grad = true;
    return t;
}

template <class Real>
Real TensorT<Real>::at(std::initializer_list<std::int64_t> idx) const {
    const auto& s = shape();
    if (idx.size() != s.size()) raise(ErrorCode::ShapeMismatch, "index rank mismatch");
    const auto strides = row_major_strides(s);
    std::int64_t flat = 0;
    std::size_t k = 0;
    for (auto i : idx) {
        if (i < 0 || i >= s[k]) raise(ErrorCode::ShapeMismatch, "index out of bounds");
        flat += i * strides[k];
        ++k;
    }
    return payload_->values[static_cast<std::size_t>(flat)];
}

template <class Real>
TensorT<Real> TensorT<Real>::detach() const {
    return make_op_result<Real>(nullptr, payload_->shape, payload_->values, false);
}

// ---- GraphT ---------------------------------------------------------------

template <class Real>
TensorT<Real> GraphT<Real>::attach(const TensorT<Real>& t) {
    if (t.graph_ != nullptr && t.graph_ != this)
        raise(ErrorCode::Internal, "tensor is already attached to a different graph");
    TensorT<Real> out = t;
    out.graph_ = this;
    return out;
}

template <class Real>
void GraphT<Real>::record(std::function<void()> backward_rule,
                          std::shared_ptr<detail::PayloadT<Real>> produced) {
    nodes_.push_back(Node{std::move(backward_rule)});
    produced_.push_back(std::move(produced));
}

template <class Real>
void GraphT<Real>::note_produced(std::shared_ptr<detail::PayloadT<Real>> produced) {
    produced_.push_back(std::move(produced));
}

template <class Real>
void GraphT<Real>::backward(const TensorT<Real>& loss) {
    if (!loss.defined() || loss.size() != 1)
        raise(ErrorCode::NotScalar, "backward() requires a scalar loss");
    if (loss.graph_ != this)
        raise(ErrorCode::NoGraph, "loss is not connected to this graph");
    for (auto& p : produced_) p->grad.clear();
    loss.payload()->grad.assign(1, Real(1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->run();
}

template <class Real>
void backward(const TensorT<Real>& loss) {
    if (!loss.defined() || loss.size() != 1)
        raise(ErrorCode::NotScalar, "backward() requires a scalar loss");
    if (loss.graph() == nullptr)
        raise(ErrorCode::NoGraph, "loss is not connected to a graph");
    loss.graph()->backward(loss);
}

// ---- op plumbing ----------------------------------------------------------

namespace {

template <class Real>
bool grad_wanted(const detail::PayloadT<Real>& p) {
    return p.requires_grad || p.tape_out;
}

template <class Real>
GraphT<Real>* merged_graph(std::initializer_list<const TensorT<Real>*> inputs) {
    GraphT<Real>* g = nullptr;
    for (const auto* t : inputs) {
        if (!t->defined()) raise(ErrorCode::Internal, "undefined tensor passed to op");
        if (t->graph() == nullptr) continue;
        if (g != nullptr && g != t->graph())
            raise(ErrorCode::Internal, "op inputs belong to different graphs");
        g = t->graph();
    }
    return g;
}

template <class Real>
bool any_grad_wanted(std::initializer_list<const TensorT<Real>*> inputs) {
    for (const auto* t : inputs)
        if (grad_wanted(*t->payload())) return true;
    return false;
}

} // namespace

// ---- elementwise binary ops ------------------------------------------------

namespace {

enum class BinKind { Add, Sub, Mul };

template <class Real>
TensorT<Real> binary_op(const TensorT<Real>& a, const TensorT<Real>& b, BinKind kind) {
    auto* g = merged_graph<Real>({&a, &b});
    const bool record = g != nullptr && any_grad_wanted<Real>({&a, &b});
    auto pa = a.payload();
    auto pb = b.payload();

    const bool same = pa->shape == pb->shape;
    Shape oshape = same ? pa->shape : broadcast_shape_of(pa->shape, pb->shape);
    const auto n = static_cast<std::size_t>(shape_size(oshape));
    std::vector<Real> out(n);

    if (same) {
        const Real* va = pa->values.data();
        const Real* vb = pb->values.data();
        switch (kind) {
            case BinKind::Add: for (std::size_t i = 0; i < n; ++i) out[i] = va[i] + vb[i]; break;
            case BinKind::Sub: for (std::size_t i = 0; i < n; ++i) out[i] = va[i] - vb[i]; break;
            case BinKind::Mul: for (std::size_t i = 0; i < n; ++i) out[i] = va[i] * vb[i]; break;
        }
    } else {
        const auto sa = aligned_strides(pa->shape, oshape);
        const auto sb = aligned_strides(pb->shape, oshape);
        const Real* va = pa->values.data();
        const Real* vb = pb->values.data();
        switch (kind) {
            case BinKind::Add:
                for_each_bcast(oshape, sa, sb, [&](std::int64_t i, std::int64_t ia, std::int64_t ib) {
                    out[static_cast<std::size_t>(i)] = va[ia] + vb[ib];
                });
                break;
            case BinKind::Sub:
                for_each_bcast(oshape, sa, sb, [&](std::int64_t i, std::int64_t ia, std::int64_t ib) {
                    out[static_cast<std::size_t>(i)] = va[ia] - vb[ib];
                });
                break;
            case BinKind::Mul:
                for_each_bcast(oshape, sa, sb, [&](std::int64_t i, std::int64_t ia, std::int64_t ib) {
                    out[static_cast<std::size_t>(i)] = va[ia] * vb[ib];
                });
                break;
        }
    }

    auto result = make_op_result<Real>(g, oshape, std::move(out), record);
    if (record) {
        auto po = result.payload();
        if (same) {
            g->record([pa, pb, po, kind]() {
                if (po->grad.empty()) return;
                const bool wa = grad_wanted(*pa);
                const bool wb = grad_wanted(*pb);
                if (!wa && !wb) return;
                const std::size_t n = po->grad.size();
                if (wa) pa->ensure_grad();
                if (wb) pb->ensure_grad();
                const Real* gout = po->grad.data();
                switch (kind) {
                    case BinKind::Add:
                        if (wa) for (std::size_t i = 0; i < n; ++i) pa->grad[i] += gout[i];
                        if (wb) for (std::size_t i = 0; i < n; ++i) pb->grad[i] += gout[i];
                        break;
                    case BinKind::Sub:
                        if (wa) for (std::size_t i = 0; i < n; ++i) pa->grad[i] += gout[i];
                        if (wb) for (std::size_t i = 0; i < n; ++i) pb->grad[i] -= gout[i];
                        break;
                    case BinKind::Mul:
                        if (wa) for (std::size_t i = 0; i < n; ++i) pa->grad[i] += gout[i] * pb->values[i];
                        if (wb) for (std::size_t i = 0; i < n; ++i) pb->grad[i] += gout[i] * pa->values[i];
                        break;
                }
            }, po);
        } else {
            const auto sa = aligned_strides(pa->shape, oshape);
            const auto sb = aligned_strides(pb->shape, oshape);
            g->record([pa, pb, po, sa, sb, oshape, kind]() {
                if (po->grad.empty()) return;
                const bool wa = grad_wanted(*pa);
                const bool wb = grad_wanted(*pb);
                if (!wa && !wb) return;
                if (wa) pa->ensure_grad();
                if (wb) pb->ensure_grad();
                const Real* gout = po->grad.data();
                // Broadcast dims have stride 0, so += here is exactly the
                // sum-reduction of the adjoint over broadcast dims.
                for_each_bcast(oshape, sa, sb, [&](std::int64_t i, std::int64_t ia, std::int64_t ib) {
                    const Real gv = gout[i];
                    switch (kind) {
                        case BinKind::Add:
                            if (wa) pa->grad[static_cast<std::size_t>(ia)] += gv;
                            if (wb) pb->grad[static_cast<std::size_t>(ib)] += gv;
                            break;
                        case BinKind::Sub:
                            if (wa) pa->grad[static_cast<std::size_t>(ia)] += gv;
                            if (wb) pb->grad[static_cast<std::size_t>(ib)] -= gv;
                            break;
                        case BinKind::Mul:
                            if (wa) pa->grad[static_cast<std::size_t>(ia)] += gv * pb->values[static_cast<std::size_t>(ib)];
                            if (wb) pb->grad[static_cast<std::size_t>(ib)] += gv * pa->values[static_cast<std::size_t>(ia)];
                            break;
                    }
                });
            }, po);
        }
    }
    return result;
}

} // namespace

template <class Real>
TensorT<Real> add(const TensorT<Real>& a, const TensorT<Real>& b) { return binary_op(a, b, BinKind::Add); }
template <class Real>
TensorT<Real> sub(const TensorT<Real>& a, const TensorT<Real>& b) { return binary_op(a, b, BinKind::Sub); }
template <class Real>
TensorT<Real> mul(const TensorT<Real>& a, const TensorT<Real>& b) { return binary_op(a, b, BinKind::Mul); }

// ---- elementwise unary ops --------------------------------------------------

namespace {

// fwd(x) -> y; bwd(x, y, g) -> dx contribution
template <class Real, class Fwd, class Bwd>
TensorT<Real> unary_op(const TensorT<Real>& a, Fwd fwd, Bwd bwd) {
    auto* g = merged_graph<Real>({&a});
    const bool record = g != nullptr && any_grad_wanted<Real>({&a});
    auto pa = a.payload();
    const auto n = pa->values.size();
    std::vector<Real> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(pa->values[i]);
    auto result = make_op_result<Real>(g, pa->shape, std::move(out), record);
    if (record) {
        auto po = result.payload();
        g->record([pa, po, bwd]() {
            if (po->grad.empty() || !grad_wanted(*pa)) return;
            pa->ensure_grad();
            const std::size_t n = po->grad.size();
            for (std::size_t i = 0; i < n; ++i)
                pa->grad[i] += bwd(pa->values[i], po->values[i], po->grad[i]);
        }, po);
    }
    return result;
}

} // namespace

template <class Real>
TensorT<Real> neg(const TensorT<Real>& a) {
    return unary_op(a, [](Real x) { return -x; },
                    [](Real, Real, Real g) { return -g; });
}

template <class Real>
TensorT<Real> scale(const TensorT<Real>& a, double c) {
    const Real rc = static_cast<Real>(c);
    return unary_op(a, [rc](Real x) { return x * rc; },
                    [rc](Real, Real, Real g) { return g * rc; });
}

template <class Real>
TensorT<Real> exp(const TensorT<Real>& a) {
    return unary_op(a, [](Real x) { return std::exp(x); },
                    [](Real, Real y, Real g) { return g * y; });
}

template <class Real>
TensorT<Real> tanh(const TensorT<Real>& a) {
    return unary_op(a, [](Real x) { return std::tanh(x); },
                    [](Real, Real y, Real g) { return g * (Real(1) - y * y); });
}

template <class Real>
TensorT<Real> leaky_relu(const TensorT<Real>& a, double slope) {
    const Real s = static_cast<Real>(slope);
    return unary_op(a, [s](Real x) { return x > Real(0) ? x : s * x; },
                    [s](Real x, Real, Real g) { return x > Real(0) ? g : s * g; });
}

// ---- channel concat / split --------------------------------------------------

namespace {

template <class Real>
void require_nchw(const detail::PayloadT<Real>& p, const char* op) {
    if (p.shape.size() != 4)
        raise(ErrorCode::ShapeMismatch, std::string(op) + " requires NCHW tensors, got " + shape_str(p.shape));
}

} // namespace

template <class Real>
TensorT<Real> concat_channels(const std::vector<TensorT<Real>>& parts) {
    if (parts.empty()) raise(ErrorCode::ShapeMismatch, "concat_channels of zero tensors");
    std::vector<const TensorT<Real>*> ptrs;
    GraphT<Real>* g = nullptr;
    bool want = false;
    for (const auto& t : parts) {
        require_nchw(*t.payload(), "concat_channels");
        if (t.graph() != nullptr) {
            if (g != nullptr && g != t.graph()) raise(ErrorCode::Internal, "op inputs belong to different graphs");
            g = t.graph();
        }
        want = want || grad_wanted(*t.payload());
    }
    const auto& s0 = parts[0].shape();
    std::int64_t ctotal = 0;
    for (const auto& t : parts) {
        const auto& s = t.shape();
        if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3])
            raise(ErrorCode::ShapeMismatch, "concat_channels parts disagree on N/H/W");
        ctotal += s[1];
    }
    const std::int64_t nbatch = s0[0], hw = s0[2] * s0[3];
    Shape oshape{nbatch, ctotal, s0[2], s0[3]};
    std::vector<Real> out(static_cast<std::size_t>(nbatch * ctotal * hw));
    std::int64_t coff = 0;
    for (const auto& t : parts) {
        const auto& pv = t.payload()->values;
        const std::int64_t c = t.shape()[1];
        for (std::int64_t n = 0; n < nbatch; ++n) {
            std::memcpy(out.data() + (n * ctotal + coff) * hw,
                        pv.data() + n * c * hw,
                        static_cast<std::size_t>(c * hw) * sizeof(Real));
        }
        coff += c;
    }
    const bool record = g != nullptr && want;
    auto result = make_op_result<Real>(g, std::move(oshape), std::move(out), record);
    if (record) {
        auto po = result.payload();
        std::vector<std::shared_ptr<detail::PayloadT<Real>>> srcs;
        for (const auto& t : parts) srcs.push_back(t.payload());
        g->record([srcs, po, nbatch, ctotal, hw]() {
            if (po->grad.empty()) return;
            std::int64_t coff = 0;
            for (const auto& ps : srcs) {
                const std::int64_t c = ps->shape[1];
                if (grad_wanted(*ps)) {
                    ps->ensure_grad();
                    for (std::int64_t n = 0; n < nbatch; ++n) {
                        const Real* gsrc = po->grad.data() + (n * ctotal + coff) * hw;
                        Real* gdst = ps->grad.data() + n * c * hw;
                        for (std::int64_t i = 0; i < c * hw; ++i) gdst[i] += gsrc[i];
                    }
                }
                coff += c;
            }
        }, po);
    }
    return result;
}

template <class Real>
std::vector<TensorT<Real>> split_channels(const TensorT<Real>& a, const std::vector<std::int64_t>& sizes) {
    require_nchw(*a.payload(), "split_channels");
    const auto& s = a.shape();
    std::int64_t total = 0;
    for (auto c : sizes) {
        if (c <= 0) raise(ErrorCode::ShapeMismatch, "split_channels size must be positive");
        total += c;
    }
    if (total != s[1])
        raise(ErrorCode::ShapeMismatch, "split_channels sizes sum to " + std::to_string(total) +
                                            ", tensor has " + std::to_string(s[1]) + " channels");
    auto* g = merged_graph<Real>({&a});
    const bool record = g != nullptr && any_grad_wanted<Real>({&a});
    auto pa = a.payload();
    const std::int64_t nbatch = s[0], ctotal = s[1], hw = s[2] * s[3];

    std::vector<TensorT<Real>> outs;
    std::int64_t coff = 0;
    for (auto c : sizes) {
        std::vector<Real> v(static_cast<std::size_t>(nbatch * c * hw));
        for (std::int64_t n = 0; n < nbatch; ++n) {
            std::memcpy(v.data() + n * c * hw,
                        pa->values.data() + (n * ctotal + coff) * hw,
                        static_cast<std::size_t>(c * hw) * sizeof(Real));
        }
        outs.push_back(make_op_result<Real>(g, Shape{nbatch, c, s[2], s[3]}, std::move(v), record));
        coff += c;
    }
    if (record) {
        std::vector<std::shared_ptr<detail::PayloadT<Real>>> pouts;
        for (auto& t : outs) pouts.push_back(t.payload());
        for (std::size_t i = 1; i < pouts.size(); ++i) g->note_produced(pouts[i]);
        g->record([pa, pouts, nbatch, ctotal, hw]() {
            bool any = false;
            for (const auto& p : pouts) any = any || !p->grad.empty();
            if (!any || !grad_wanted(*pa)) return;
            pa->ensure_grad();
            std::int64_t coff = 0;
            for (const auto& p : pouts) {
                const std::int64_t c = p->shape[1];
                if (!p->grad.empty()) {
                    for (std::int64_t n = 0; n < nbatch; ++n) {
                        const Real* gsrc = p->grad.data() + n * c * hw;
                        Real* gdst = pa->grad.data() + (n * ctotal + coff) * hw;
                        for (std::int64_t i = 0; i < c * hw; ++i) gdst[i] += gsrc[i];
                    }
                }
                coff += c;
            }
        }, pouts[0]);
    }
    return outs;
}

// ---- reductions ---------------------------------------------------------------

template <class Real>
TensorT<Real> sum(const TensorT<Real>& a) {
    auto* g = merged_graph<Real>({&a});
    const bool record = g != nullptr && any_grad_wanted<Real>({&a});
    auto pa = a.payload();
    Real acc = Real(0);
    for (auto v : pa->values) acc += v;
    auto result = make_op_result<Real>(g, Shape{1}, std::vector<Real>{acc}, record);
    if (record) {
        auto po = result.payload();
        g->record([pa, po]() {
            if (po->grad.empty() || !grad_wanted(*pa)) return;
            pa->ensure_grad();
            const Real gv = po->grad[0];
            for (auto& x : pa->grad) x += gv;
        }, po);
    }
    return result;
}

template <class Real>
TensorT<Real> l1_mean(const TensorT<Real>& a, const TensorT<Real>& b) {
    auto pa = a.payload();
    auto pb = b.payload();
    if (pa->shape != pb->shape)
        raise(ErrorCode::ShapeMismatch, "l1_mean shapes differ: " + shape_str(pa->shape) + " vs " + shape_str(pb->shape));
    auto* g = merged_graph<Real>({&a, &b});
    const bool record = g != nullptr && any_grad_wanted<Real>({&a, &b});
    const std::size_t n = pa->values.size();
    Real acc = Real(0);
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(pa->values[i] - pb->values[i]);
    acc /= static_cast<Real>(n);
    auto result = make_op_result<Real>(g, Shape{1}, std::vector<Real>{acc}, record);
    if (record) {
        auto po = result.payload();
        g->record([pa, pb, po, n]() {
            if (po->grad.empty()) return;
            const bool wa = grad_wanted(*pa);
            const bool wb = grad_wanted(*pb);
            if (!wa && !wb) return;
            if (wa) pa->ensure_grad();
            if (wb) pb->ensure_grad();
            const Real gv = po->grad[0] / static_cast<Real>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const Real d = pa->values[i] - pb->values[i];
                // subgradient at 0 is 0
                const Real sgn = d > Real(0) ? Real(1) : (d < Real(0) ? Real(-1) : Real(0));
                if (wa) pa->grad[i] += gv * sgn;
                if (wb) pb->grad[i] -= gv * sgn;
            }
        }, po);
    }
    return result;
}

// ---- explicit instantiations ---------------------------------------------------

#define FGRN_INSTANTIATE_TENSOR(Real)                                                            \
    template class TensorT<Real>;                                                                \
    template class GraphT<Real>;                                                                 \
    template TensorT<Real> make_op_result<Real>(GraphT<Real>*, Shape, std::vector<Real>, bool);  \
    template void backward<Real>(const TensorT<Real>&);                                          \
    template TensorT<Real> add<Real>(const TensorT<Real>&, const TensorT<Real>&);                \
    template TensorT<Real> sub<Real>(const TensorT<Real>&, const TensorT<Real>&);                \
    template TensorT<Real> mul<Real>(const TensorT<Real>&, const TensorT<Real>&);                \
    template TensorT<Real> neg<Real>(const TensorT<Real>&);                                      \
    template TensorT<Real> scale<Real>(const TensorT<Real>&, double);                            \
    template TensorT<Real> exp<Real>(const TensorT<Real>&);                                      \
    template TensorT<Real> tanh<Real>(const TensorT<Real>&);                                     \
    template TensorT<Real> leaky_relu<Real>(const TensorT<Real>&, double);                       \
    template TensorT<Real> concat_channels<Real>(const std::vector<TensorT<Real>>&);             \
    template std::vector<TensorT<Real>> split_channels<Real>(const TensorT<Real>&,               \
                                                             const std::vector<std::int64_t>&);  \
    template TensorT<Real> sum<Real>(const TensorT<Real>&);                                      \
    template TensorT<Real> l1_mean<Real>(const TensorT<Real>&, const TensorT<Real>&);

FGRN_INSTANTIATE_TENSOR(float)
FGRN_INSTANTIATE_TENSOR(double)

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NotDivisible: return "NotDivisible";
        case ErrorCode::NotScalar: return "NotScalar";
        case ErrorCode::NoGraph: return "NoGraph";
        case ErrorCode::ImageTooSmall: return "ImageTooSmall";
        case ErrorCode::TooSmall: return "TooSmall";
        case ErrorCode::DecodeError: return "DecodeError";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::NaNLoss: return "NaNLoss";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::Usage: return "Usage";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

} // namespace fgrn
