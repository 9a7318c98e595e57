// SPDX-License-Identifier: Apache-2.0

#include "fgrn/training.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fgrn {

const char* guidance_mode_name(GuidanceMode m) {
    switch (m) {
        case GuidanceMode::none: return "none";
        case GuidanceMode::bic: return "bic";
        case GuidanceMode::flow: return "flow";
    }
    return "?";
}

GuidanceMode parse_guidance_mode(const std::string& s) {
    if (s == "none") return GuidanceMode::none;
    if (s == "bic") return GuidanceMode::bic;
    if (s == "flow") return GuidanceMode::flow;
    raise(ErrorCode::BadConfig, "unknown guidance mode '" + s + "' (expected none|bic|flow)");
}

void TrainConfig::validate() const {
    model.validate();
    if (batch_size < 1) raise(ErrorCode::BadConfig, "batch_size must be >= 1");
    if (hr_patch < model.scale || hr_patch % model.scale != 0)
        raise(ErrorCode::BadConfig, "hr_patch must be a positive multiple of scale");
    if (lr0 <= 0.0) raise(ErrorCode::BadConfig, "lr0 must be positive");
    if (halve_every < 1) raise(ErrorCode::BadConfig, "halve_every must be >= 1");
    if (gamma <= 0.0) raise(ErrorCode::BadConfig, "gamma must be positive");
    if (total_iters < 0) raise(ErrorCode::BadConfig, "total_iters must be >= 0");
}

TrainConfig TrainConfig::paper_scale() {
    TrainConfig c;
    c.batch_size = 36;
    c.hr_patch = 192;
    c.total_iters = 500000;
    return c;
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "scale=" << model.scale << "\n"
       << "width=" << model.width << "\n"
       << "resblocks=" << model.resblocks << "\n"
       << "flow_cells=" << model.flow_cells << "\n"
       << "dense_growth=" << model.dense_growth << "\n"
       << "clamp=" << model.clamp << "\n"
       << "batch_size=" << batch_size << "\n"
       << "hr_patch=" << hr_patch << "\n"
       << "lr0=" << lr0 << "\n"
       << "halve_every=" << halve_every << "\n"
       << "gamma=" << gamma << "\n"
       << "guidance_mode=" << guidance_mode_name(mode) << "\n"
       << "total_iters=" << total_iters << "\n"
       << "seed=" << seed << "\n"
       << "quantize_flow_train=" << (quantize_flow_train ? 1 : 0) << "\n";
    return os.str();
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        raise(ErrorCode::BadConfig, "invalid integer for " + key + ": '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        raise(ErrorCode::BadConfig, "invalid number for " + key + ": '" + v + "'");
    }
}

} // namespace

TrainConfig TrainConfig::parse_text(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "scale") c.model.scale = static_cast<int>(parse_int(key, val));
        else if (key == "width") c.model.width = static_cast<int>(parse_int(key, val));
        else if (key == "resblocks") c.model.resblocks = static_cast<int>(parse_int(key, val));
        else if (key == "flow_cells") c.model.flow_cells = static_cast<int>(parse_int(key, val));
        else if (key == "dense_growth") c.model.dense_growth = static_cast<int>(parse_int(key, val));
        else if (key == "clamp") c.model.clamp = parse_double(key, val);
        else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(key, val));
        else if (key == "hr_patch") c.hr_patch = static_cast<int>(parse_int(key, val));
        else if (key == "lr0") c.lr0 = parse_double(key, val);
        else if (key == "halve_every") c.halve_every = parse_int(key, val);
        else if (key == "gamma") c.gamma = parse_double(key, val);
        else if (key == "guidance_mode") c.mode = parse_guidance_mode(val);
        else if (key == "total_iters") c.total_iters = parse_int(key, val);
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, val));
        else if (key == "quantize_flow_train") c.quantize_flow_train = parse_int(key, val) != 0;
        else raise(ErrorCode::BadConfig, "unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

TrainConfig TrainConfig::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::BadConfig, "cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

// ---- Adam ----

template <class Real>
AdamT<Real>::AdamT(const ParamMapT<Real>& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& [name, p] : params) {
        m.emplace_back(p.values().size(), Real(0));
        v.emplace_back(p.values().size(), Real(0));
    }
}

template <class Real>
void AdamT<Real>::step(ParamMapT<Real>& params, double lr) {
    if (params.size() != m.size())
        raise(ErrorCode::ShapeMismatch, "Adam state covers " + std::to_string(m.size()) +
                                            " tensors, got " + std::to_string(params.size()));
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k].second;
        auto& vals = p.mut_values();
        if (m[k].size() != vals.size())
            raise(ErrorCode::ShapeMismatch, "Adam moment shape mismatch for " + params[k].first);
        const bool has_g = p.has_grad();
        const auto& g = p.grad();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double gi = has_g ? static_cast<double>(g[i]) : 0.0;
            const double mi = beta1 * static_cast<double>(m[k][i]) + (1.0 - beta1) * gi;
            const double vi = beta2 * static_cast<double>(v[k][i]) + (1.0 - beta2) * gi * gi;
            m[k][i] = static_cast<Real>(mi);
            v[k][i] = static_cast<Real>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            vals[i] = static_cast<Real>(static_cast<double>(vals[i]) - lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

double lr_at(std::int64_t iter, const TrainConfig& cfg) {
    const std::int64_t halvings = iter / cfg.halve_every;
    return cfg.lr0 * std::pow(0.5, static_cast<double>(halvings));
}

// ---- batch sampling ----

template <class Real>
TensorT<Real> sample_batch(const std::vector<PlanarImage>& dataset, const TrainConfig& cfg, Rng& rng) {
    if (dataset.empty()) raise(ErrorCode::ImageTooSmall, "dataset is empty");
    const int p = cfg.hr_patch;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].height < p || dataset[i].width < p)
            raise(ErrorCode::ImageTooSmall, "image " + std::to_string(i) + " is smaller than hr_patch " +
                                                std::to_string(p));
    }
    const std::int64_t chw = static_cast<std::int64_t>(3) * p * p;
    std::vector<Real> out(static_cast<std::size_t>(cfg.batch_size) * chw);
    std::vector<double> patch(static_cast<std::size_t>(chw));
    std::vector<double> work(static_cast<std::size_t>(chw));
    for (int b = 0; b < cfg.batch_size; ++b) {
        const auto& img = dataset[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(dataset.size())))];
        const std::int64_t y0 = rng.uniform_int(img.height - p + 1);
        const std::int64_t x0 = rng.uniform_int(img.width - p + 1);
        const int rot = static_cast<int>(rng.uniform_int(4));
        const bool flip = rng.bernoulli(0.5);
        // crop
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x)
                    patch[(static_cast<std::size_t>(c) * p + y) * p + x] =
                        img.at(c, static_cast<int>(y0) + y, static_cast<int>(x0) + x);
        // rotate counter-clockwise by rot * 90 degrees
        if (rot != 0) {
            for (int c = 0; c < 3; ++c) {
                for (int y = 0; y < p; ++y) {
                    for (int x = 0; x < p; ++x) {
                        int sy = y, sx = x;
                        switch (rot) {
                            case 1: sy = x; sx = p - 1 - y; break;
                            case 2: sy = p - 1 - y; sx = p - 1 - x; break;
                            case 3: sy = p - 1 - x; sx = y; break;
                        }
                        work[(static_cast<std::size_t>(c) * p + y) * p + x] =
                            patch[(static_cast<std::size_t>(c) * p + sy) * p + sx];
                    }
                }
            }
            std::swap(patch, work);
        }
        if (flip) {
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < p; ++y)
                    for (int x = 0; x < p / 2; ++x)
                        std::swap(patch[(static_cast<std::size_t>(c) * p + y) * p + x],
                                  patch[(static_cast<std::size_t>(c) * p + y) * p + (p - 1 - x)]);
        }
        for (std::int64_t i = 0; i < chw; ++i)
            out[static_cast<std::size_t>(b * chw + i)] = static_cast<Real>(patch[static_cast<std::size_t>(i)]);
    }
    return TensorT<Real>::from_values(Shape{cfg.batch_size, 3, p, p}, std::move(out));
}

// ---- losses ----

namespace {

template <class Real>
void check_finite(const TensorT<Real>& loss, const char* which) {
    const double v = static_cast<double>(loss.item());
    if (std::isnan(v) || std::isinf(v))
        raise(ErrorCode::NaNLoss, std::string(which) + " is not finite");
}

} // namespace

template <class Real>
TensorT<Real> loss_rec(const TensorT<Real>& y, const RescaleModelT<Real>& model) {
    auto x = model.gd.forward(y);
    auto yhat = model.gu.forward(quantize_ste(x));
    auto l = l1_mean(y, yhat);
    check_finite(l, "l_rec");
    return l;
}

template <class Real>
TensorT<Real> loss_guide(const TensorT<Real>& x, const TensorT<Real>& y_bic,
                         const FlowModuleT<Real>& flow, double gamma, bool quantize_output) {
    auto [xhat, logdet] = flow.forward(x);
    auto pred = quantize_output ? quantize_ste(xhat) : xhat;
    // Both terms are normalized per element of x. The likelihood balances an
    // element-summed L1 against the summed log-determinant; with the L1
    // reduced to a mean, the log-det term is divided by the same element
    // count so gamma keeps its published meaning.
    const double per_elem = gamma / static_cast<double>(x.size());
    auto l = sub(l1_mean(pred, y_bic), scale(logdet, per_elem));
    check_finite(l, "l_guide");
    return l;
}

template <class Real>
TensorT<Real> loss_bic_baseline(const TensorT<Real>& x, const TensorT<Real>& y_bic) {
    auto l = l1_mean(x, y_bic);
    check_finite(l, "l_bic");
    return l;
}

// ---- train step ----

template <class Real>
TrainStateT<Real> TrainStateT<Real>::make(const RescaleModelT<Real>& model) {
    TrainStateT s;
    auto rp = model.rescale_params();
    auto fp = model.flow_params();
    s.adam_rescale = AdamT<Real>(rp);
    s.adam_flow = AdamT<Real>(fp);
    return s;
}

template <class Real>
StepLosses train_step(RescaleModelT<Real>& model, const TensorT<Real>& hr_batch,
                      TrainStateT<Real>& state, const TrainConfig& cfg) {
    GraphT<Real> graph;
    auto y = graph.attach(hr_batch);

    auto x = model.gd.forward(y);
    auto yhat = model.gu.forward(quantize_ste(x));
    auto l_rec = l1_mean(y, yhat);
    check_finite(l_rec, "l_rec");

    StepLosses out;
    out.iter = state.iter;
    out.lr = lr_at(state.iter, cfg);
    out.l_rec = static_cast<double>(l_rec.item());

    auto total = l_rec;
    if (cfg.mode != GuidanceMode::none) {
        auto y_bic = graph.attach(bicubic_downscale_batch(hr_batch, cfg.model.scale));
        if (cfg.mode == GuidanceMode::bic) {
            auto l_bic = loss_bic_baseline(x, y_bic);
            out.l_guide = static_cast<double>(l_bic.item());
            total = add(total, l_bic);
        } else {
            // The representation enters the guidance branch detached, so the
            // flow adapts to Gd's output without constraining it. It is
            // quantized first, matching what the flow consumes at inference.
            auto x_det = quantize_ste(graph.attach(x.detach()));
            auto l_g = loss_guide(x_det, y_bic, model.flow, cfg.gamma, cfg.quantize_flow_train);
            out.l_guide = static_cast<double>(l_g.item());
            total = add(total, l_g);
        }
    }

    model.zero_grad();
    backward(total);

    auto rp = model.rescale_params();
    state.adam_rescale.step(rp, out.lr);
    if (cfg.mode == GuidanceMode::flow) {
        auto fp = model.flow_params();
        state.adam_flow.step(fp, out.lr);
    }
    ++state.iter;
    return out;
}

#define FGRN_INSTANTIATE_TRAINING(Real)                                                             \
    template struct AdamT<Real>;                                                                    \
    template struct TrainStateT<Real>;                                                              \
    template TensorT<Real> sample_batch<Real>(const std::vector<PlanarImage>&, const TrainConfig&,  \
                                              Rng&);                                               \
    template TensorT<Real> loss_rec<Real>(const TensorT<Real>&, const RescaleModelT<Real>&);        \
    template TensorT<Real> loss_guide<Real>(const TensorT<Real>&, const TensorT<Real>&,             \
                                            const FlowModuleT<Real>&, double, bool);               \
    template TensorT<Real> loss_bic_baseline<Real>(const TensorT<Real>&, const TensorT<Real>&);     \
    template StepLosses train_step<Real>(RescaleModelT<Real>&, const TensorT<Real>&,                \
                                         TrainStateT<Real>&, const TrainConfig&);

FGRN_INSTANTIATE_TRAINING(float)
FGRN_INSTANTIATE_TRAINING(double)

} // namespace fgrn
