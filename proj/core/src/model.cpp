// SPDX-License-Identifier: Apache-2.0

#include "fgrn/model.hpp"

#include <sstream>

#include "fgrn/image_ops.hpp"

namespace fgrn {

void ModelConfig::validate() const {
    if (scale != 2 && scale != 4) raise(ErrorCode::BadConfig, "scale must be 2 or 4");
    if (width < 1) raise(ErrorCode::BadConfig, "width must be >= 1");
    if (resblocks < 0) raise(ErrorCode::BadConfig, "resblocks must be >= 0");
    if (flow_cells < 0) raise(ErrorCode::BadConfig, "flow_cells must be >= 0");
    if (dense_growth < 1) raise(ErrorCode::BadConfig, "dense_growth must be >= 1");
    if (clamp <= 0.0) raise(ErrorCode::BadConfig, "clamp must be positive");
}

template <class Real>
RescaleModelT<Real> RescaleModelT<Real>::create(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    RescaleModelT m;
    m.cfg = cfg;
    Rng root(seed);
    Rng rng_gd(root.fork());
    Rng rng_gu(root.fork());
    Rng rng_flow(root.fork());
    m.gd = DownscalerT<Real>::make(cfg.scale, cfg.width, cfg.resblocks, rng_gd);
    m.gu = UpscalerT<Real>::make(cfg.scale, cfg.width, cfg.resblocks, rng_gu);
    m.flow = FlowModuleT<Real>::make(cfg.flow_cells, cfg.dense_growth, cfg.clamp, rng_flow);
    return m;
}

template <class Real>
ParamMapT<Real> RescaleModelT<Real>::rescale_params() const {
    ParamMapT<Real> out;
    gd.collect_params("gd", out);
    gu.collect_params("gu", out);
    return out;
}

template <class Real>
ParamMapT<Real> RescaleModelT<Real>::flow_params() const {
    ParamMapT<Real> out;
    flow.collect_params("flow", out);
    return out;
}

template <class Real>
ParamMapT<Real> RescaleModelT<Real>::params() const {
    auto out = rescale_params();
    auto f = flow_params();
    out.insert(out.end(), f.begin(), f.end());
    return out;
}

template <class Real>
void RescaleModelT<Real>::zero_grad() {
    for (auto& [name, p] : params()) p.zero_grad();
}

template <class Real>
TensorT<Real> RescaleModelT<Real>::downscale_lr(const TensorT<Real>& hr) const {
    auto x = quantize_ste(gd.forward(hr));
    auto [xhat, logdet] = flow.forward(x);
    (void)logdet;
    return quantize_ste(xhat);
}

template <class Real>
TensorT<Real> RescaleModelT<Real>::upscale_hr(const TensorT<Real>& lr) const {
    return gu.forward(flow.inverse(lr));
}

template <class Real>
typename RescaleModelT<Real>::Summary RescaleModelT<Real>::summary() const {
    Summary s;
    for (const auto& [name, p] : rescale_params()) {
        if (name.rfind("gd", 0) == 0) s.gd += p.size();
        else s.gu += p.size();
    }
    for (const auto& [name, p] : flow_params()) s.flow += p.size();
    s.total = s.gd + s.gu + s.flow;
    return s;
}

template <class Real>
std::string summary_str(const typename RescaleModelT<Real>::Summary& s) {
    std::ostringstream os;
    os << "params: gd=" << s.gd << " gu=" << s.gu << " flow=" << s.flow << " total=" << s.total;
    return os.str();
}

template struct RescaleModelT<float>;
template struct RescaleModelT<double>;
template std::string summary_str<float>(const RescaleModelT<float>::Summary&);
template std::string summary_str<double>(const RescaleModelT<double>::Summary&);

} // namespace fgrn
