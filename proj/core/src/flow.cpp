// SPDX-License-Identifier: Apache-2.0

#include "fgrn/flow.hpp"

namespace fgrn {

// ---- DenseBlockT ----

template <class Real>
DenseBlockT<Real> DenseBlockT<Real>::make(std::int64_t in_ch, std::int64_t out_ch,
                                          std::int64_t growth, Rng& rng) {
    DenseBlockT b;
    b.in_channels = in_ch;
    b.out_channels = out_ch;
    b.growth = growth;
    for (int i = 0; i < 4; ++i)
        b.convs.push_back(Conv2dT<Real>::make(in_ch + i * growth, growth, 3, rng));
    b.convs.push_back(Conv2dT<Real>::make_zero(in_ch + 4 * growth, out_ch, 3));
    return b;
}

template <class Real>
TensorT<Real> DenseBlockT<Real>::forward(const TensorT<Real>& x) const {
    std::vector<TensorT<Real>> feats{x};
    for (std::size_t i = 0; i + 1 < convs.size(); ++i) {
        auto in = feats.size() == 1 ? feats[0] : concat_channels(feats);
        feats.push_back(leaky_relu(convs[i].forward(in), lrelu_slope));
    }
    return convs.back().forward(concat_channels(feats));
}

template <class Real>
void DenseBlockT<Real>::collect_params(const std::string& prefix, ParamMapT<Real>& out) const {
    for (std::size_t i = 0; i < convs.size(); ++i)
        convs[i].collect_params(prefix + ".conv" + std::to_string(i + 1), out);
}

// ---- CouplingCellT ----

template <class Real>
CouplingCellT<Real> CouplingCellT<Real>::make(std::int64_t growth, double lambda, Rng& rng) {
    CouplingCellT c;
    c.lambda = lambda;
    c.alpha = DenseBlockT<Real>::make(c.c2, c.c1, growth, rng);
    c.beta = DenseBlockT<Real>::make(c.c1, c.c2, growth, rng);
    c.phi = DenseBlockT<Real>::make(c.c1, c.c2, growth, rng);
    return c;
}

template <class Real>
std::pair<TensorT<Real>, TensorT<Real>> CouplingCellT<Real>::forward(const TensorT<Real>& l) const {
    if (l.rank() != 4 || l.dim(1) != c1 + c2)
        raise(ErrorCode::ShapeMismatch, "coupling cell expects " + std::to_string(c1 + c2) +
                                            " channels, got " + shape_str(l.shape()));
    auto parts = split_channels(l, {c1, c2});
    auto l1p = add(parts[0], alpha.forward(parts[1]));
    auto s = scale(tanh(beta.forward(l1p)), lambda);
    auto l2p = add(mul(parts[1], exp(s)), phi.forward(l1p));
    return {concat_channels<Real>({l1p, l2p}), sum(s)};
}

template <class Real>
TensorT<Real> CouplingCellT<Real>::inverse(const TensorT<Real>& lp) const {
    if (lp.rank() != 4 || lp.dim(1) != c1 + c2)
        raise(ErrorCode::ShapeMismatch, "coupling cell expects " + std::to_string(c1 + c2) +
                                            " channels, got " + shape_str(lp.shape()));
    auto parts = split_channels(lp, {c1, c2});
    auto s = scale(tanh(beta.forward(parts[0])), lambda);
    auto l2 = mul(sub(parts[1], phi.forward(parts[0])), exp(neg(s)));
    auto l1 = sub(parts[0], alpha.forward(l2));
    return concat_channels<Real>({l1, l2});
}

template <class Real>
void CouplingCellT<Real>::collect_params(const std::string& prefix, ParamMapT<Real>& out) const {
    alpha.collect_params(prefix + ".alpha", out);
    beta.collect_params(prefix + ".beta", out);
    phi.collect_params(prefix + ".phi", out);
}

// ---- FlowModuleT ----

template <class Real>
FlowModuleT<Real> FlowModuleT<Real>::make(int num_cells, std::int64_t growth, double lambda, Rng& rng) {
    FlowModuleT f;
    for (int i = 0; i < num_cells; ++i)
        f.cells.push_back(CouplingCellT<Real>::make(growth, lambda, rng));
    return f;
}

template <class Real>
std::pair<TensorT<Real>, TensorT<Real>> FlowModuleT<Real>::forward(const TensorT<Real>& x) const {
    TensorT<Real> cur = x;
    TensorT<Real> total = TensorT<Real>::scalar(Real(0));
    for (const auto& cell : cells) {
        auto [next, logdet] = cell.forward(cur);
        cur = next;
        total = add(total, logdet);
    }
    return {cur, total};
}

template <class Real>
TensorT<Real> FlowModuleT<Real>::inverse(const TensorT<Real>& xhat) const {
    TensorT<Real> cur = xhat;
    for (auto it = cells.rbegin(); it != cells.rend(); ++it) cur = it->inverse(cur);
    return cur;
}

template <class Real>
void FlowModuleT<Real>::collect_params(const std::string& prefix, ParamMapT<Real>& out) const {
    for (std::size_t i = 0; i < cells.size(); ++i)
        cells[i].collect_params(prefix + ".cell" + std::to_string(i), out);
}

template struct DenseBlockT<float>;
template struct DenseBlockT<double>;
template struct CouplingCellT<float>;
template struct CouplingCellT<double>;
template struct FlowModuleT<float>;
template struct FlowModuleT<double>;

} // namespace fgrn
