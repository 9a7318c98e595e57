// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_TRAINING_HPP
#define FGRN_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fgrn/image_ops.hpp"
#include "fgrn/model.hpp"
#include "fgrn/rng.hpp"

namespace fgrn {

enum class GuidanceMode { none, bic, flow };

const char* guidance_mode_name(GuidanceMode m);
GuidanceMode parse_guidance_mode(const std::string& s);

/// Full training configuration. Defaults are desk scale; paper_scale() holds
/// the published protocol values (batch 36, 192×192 patches).
struct TrainConfig {
    ModelConfig model;

    int batch_size = 4;
    int hr_patch = 96;
    double lr0 = 3e-4;
    std::int64_t halve_every = 200000;
    double gamma = 1e-3;
    GuidanceMode mode = GuidanceMode::flow;
    std::int64_t total_iters = 2000;
    std::uint64_t seed = 0;
    /// When set, the flow output is quantized inside the guidance loss instead
    /// of only at export.
    bool quantize_flow_train = false;

    void validate() const;

    static TrainConfig paper_scale();

    /// Flat key=value serialization; parse rejects unknown keys.
    std::string to_text() const;
    static TrainConfig parse_text(const std::string& text);
    static TrainConfig parse_file(const std::string& path);
};

/// Bias-corrected Adam over a fixed parameter list.
template <class Real>
struct AdamT {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<std::vector<Real>> m;
    std::vector<std::vector<Real>> v;

    AdamT() = default;
    explicit AdamT(const ParamMapT<Real>& params);

    /// One update. Parameters with no accumulated gradient see g = 0, so
    /// their moments only decay.
    void step(ParamMapT<Real>& params, double lr);
};

double lr_at(std::int64_t iter, const TrainConfig& cfg);

/// Random hr_patch² crops with 0/90/180/270° rotation (uniform) and
/// horizontal flip (p = 0.5). Deterministic under the rng state.
template <class Real>
TensorT<Real> sample_batch(const std::vector<PlanarImage>& dataset, const TrainConfig& cfg, Rng& rng);

// ---- losses ----

/// L_rec = mean |y - Gu(Q(Gd(y)))|. Gradients reach Gd and Gu only.
template <class Real>
TensorT<Real> loss_rec(const TensorT<Real>& y, const RescaleModelT<Real>& model);

/// L_guide = mean|F(x) - y_bic| - gamma * total_logdet. The caller passes the
/// representation already detached from Gd.
template <class Real>
TensorT<Real> loss_guide(const TensorT<Real>& x, const TensorT<Real>& y_bic,
                         const FlowModuleT<Real>& flow, double gamma,
                         bool quantize_output = false);

/// Bicubic LR guidance baseline: mean |x - y_bic|.
template <class Real>
TensorT<Real> loss_bic_baseline(const TensorT<Real>& x, const TensorT<Real>& y_bic);

// ---- training loop ----

template <class Real>
struct TrainStateT {
    AdamT<Real> adam_rescale;
    AdamT<Real> adam_flow;
    std::int64_t iter = 0;

    static TrainStateT make(const RescaleModelT<Real>& model);
};

struct StepLosses {
    std::int64_t iter = 0;
    double lr = 0.0;
    double l_rec = 0.0;
    /// Value of the active guidance loss: 0 for mode=none, the bicubic L1 for
    /// mode=bic, L_guide for mode=flow.
    double l_guide = 0.0;
};

/// One optimization step: forward, guidance per mode, single backward over
/// the summed objective, Adam on the disjoint parameter groups.
template <class Real>
StepLosses train_step(RescaleModelT<Real>& model, const TensorT<Real>& hr_batch,
                      TrainStateT<Real>& state, const TrainConfig& cfg);

} // namespace fgrn

#endif // FGRN_TRAINING_HPP
