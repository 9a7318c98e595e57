// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_MODEL_HPP
#define FGRN_MODEL_HPP

#include <cstdint>
#include <string>

#include "fgrn/flow.hpp"
#include "fgrn/rescale.hpp"

namespace fgrn {

struct ModelConfig {
    int scale = 2;        // 2 or 4
    int width = 64;       // ResBlock width
    int resblocks = 8;    // per net
    int flow_cells = 4;   // K
    int dense_growth = 16;
    double clamp = 1.0;   // flow scale clamp lambda

    void validate() const;
};

/// The checkpointable unit: downscaler, upscaler and flow module. The
/// downscaler and upscaler share no parameters.
template <class Real>
struct RescaleModelT {
    ModelConfig cfg;
    DownscalerT<Real> gd;
    UpscalerT<Real> gu;
    FlowModuleT<Real> flow;

    static RescaleModelT create(const ModelConfig& cfg, std::uint64_t seed);

    ParamMapT<Real> params() const;          // gd + gu + flow, stable order
    ParamMapT<Real> rescale_params() const;  // gd + gu only
    ParamMapT<Real> flow_params() const;
    void zero_grad();

    /// Inference downscale: quantize(F(quantize(Gd(hr)))).
    TensorT<Real> downscale_lr(const TensorT<Real>& hr) const;
    /// Inference upscale: Gu(F^{-1}(lr)). Output is not clamped here.
    TensorT<Real> upscale_hr(const TensorT<Real>& lr) const;

    struct Summary {
        std::int64_t gd = 0;
        std::int64_t gu = 0;
        std::int64_t flow = 0;
        std::int64_t total = 0;
    };
    Summary summary() const;
};

template <class Real>
std::string summary_str(const typename RescaleModelT<Real>::Summary& s);

} // namespace fgrn

#endif // FGRN_MODEL_HPP
