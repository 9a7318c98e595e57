// SPDX-License-Identifier: Apache-2.0

#include "verify_suites.hpp"

#include <cmath>
#include <functional>

#include "fgrn/metrics.hpp"
#include "fgrn/rng.hpp"

namespace fgrn {

namespace {

double rel_err(double a, double b) {
    const double den = std::max({std::abs(a), std::abs(b), 1e-3});
    return std::abs(a - b) / den;
}

template <class Real>
TensorT<Real> random_tensor(Shape shape, Rng& rng, double lo, double hi, bool param = false) {
    const auto n = static_cast<std::size_t>(shape_size(shape));
    std::vector<Real> v(n);
    for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
    return param ? TensorT<Real>::param(std::move(shape), std::move(v))
                 : TensorT<Real>::from_values(std::move(shape), std::move(v));
}

template <class Real>
void randomize_final(DenseBlockT<Real>& b, Rng& rng) {
    auto& last = b.convs.back();
    const auto& sh = last.weight.shape();
    const double stddev = 0.5 * std::sqrt(2.0 / static_cast<double>(sh[1] * sh[2] * sh[3]));
    for (auto& v : last.weight.mut_values()) v = static_cast<Real>(rng.normal(0.0, stddev));
    for (auto& v : last.bias.mut_values()) v = static_cast<Real>(rng.uniform(-0.2, 0.2));
}

template <class Real>
FlowModuleT<Real> random_flow(int k, std::int64_t growth, double lambda, Rng& rng) {
    auto flow = FlowModuleT<Real>::make(k, growth, lambda, rng);
    for (auto& cell : flow.cells) {
        randomize_final(cell.alpha, rng);
        randomize_final(cell.beta, rng);
        randomize_final(cell.phi, rng);
    }
    return flow;
}

template <class Real>
double max_abs_diff(const std::vector<Real>& a, const std::vector<Real>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

// central finite differences over the given parameters
double fd_grad_err(const std::function<TensorT<double>(GraphT<double>&)>& make_loss,
                   std::vector<TensorT<double>*> params, double eps = 1e-5) {
    for (auto* p : params) p->zero_grad();
    {
        GraphT<double> g;
        backward(make_loss(g));
    }
    std::vector<std::vector<double>> analytic;
    for (auto* p : params)
        analytic.push_back(p->has_grad() ? p->grad() : std::vector<double>(p->values().size(), 0.0));
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& vals = params[k]->mut_values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double v0 = vals[i];
            vals[i] = v0 + eps;
            double fp;
            {
                GraphT<double> g;
                fp = make_loss(g).item();
            }
            vals[i] = v0 - eps;
            double fm;
            {
                GraphT<double> g;
                fm = make_loss(g).item();
            }
            vals[i] = v0;
            worst = std::max(worst, rel_err(analytic[k][i], (fp - fm) / (2.0 * eps)));
        }
    }
    return worst;
}

// log|det| of a small dense matrix via partial-pivot LU
double logdet_lu(std::vector<double> m, int n) {
    double acc = 0.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[static_cast<std::size_t>(r * n + col)]) >
                std::abs(m[static_cast<std::size_t>(piv * n + col)]))
                piv = r;
        if (piv != col)
            for (int c = 0; c < n; ++c)
                std::swap(m[static_cast<std::size_t>(col * n + c)], m[static_cast<std::size_t>(piv * n + c)]);
        const double d = m[static_cast<std::size_t>(col * n + col)];
        acc += std::log(std::abs(d));
        for (int r = col + 1; r < n; ++r) {
            const double f = m[static_cast<std::size_t>(r * n + col)] / d;
            for (int c = col; c < n; ++c)
                m[static_cast<std::size_t>(r * n + c)] -= f * m[static_cast<std::size_t>(col * n + c)];
        }
    }
    return acc;
}

double fd_jacobian_logdet(const CouplingCellT<double>& cell, TensorT<double> x, double eps = 1e-5) {
    const int n = static_cast<int>(x.size());
    std::vector<double> jac(static_cast<std::size_t>(n) * n);
    auto& vals = x.mut_values();
    for (int j = 0; j < n; ++j) {
        const double v0 = vals[static_cast<std::size_t>(j)];
        vals[static_cast<std::size_t>(j)] = v0 + eps;
        auto fp = cell.forward(x).first.values();
        vals[static_cast<std::size_t>(j)] = v0 - eps;
        auto fm = cell.forward(x).first.values();
        vals[static_cast<std::size_t>(j)] = v0;
        for (int i = 0; i < n; ++i)
            jac[static_cast<std::size_t>(i * n + j)] =
                (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]) / (2.0 * eps);
    }
    return logdet_lu(std::move(jac), n);
}

} // namespace

std::vector<SuiteResult> run_verify_suites(int trials, const RescaleModelT<float>* model) {
    std::vector<SuiteResult> out;
    Rng rng(20240901);

    {
        SuiteResult r{"squeeze/pixel_shuffle round trip", 0.0, 0.0, false};
        for (int t = 0; t < trials; ++t) {
            const int s = 1 + static_cast<int>(rng.uniform_int(3));
            Shape shape{1, 1 + rng.uniform_int(4), s * (1 + rng.uniform_int(5)), s * (1 + rng.uniform_int(5))};
            auto x = random_tensor<double>(shape, rng, -2.0, 2.0);
            auto rt = pixel_shuffle(squeeze(x, s), s);
            r.max_err = std::max(r.max_err, max_abs_diff(rt.values(), x.values()));
        }
        r.pass = r.max_err == 0.0;
        out.push_back(r);
    }

    {
        // 32-bit grid values widen to doubles within 255*ulp of the integer
        SuiteResult r{"quantize idempotence and 8-bit grid", 0.0, 1e-4, false};
        auto x = random_tensor<float>({4096}, rng, -0.5, 1.5);
        auto q = quantize_ste(x);
        auto qq = quantize_ste(q);
        r.max_err = max_abs_diff(q.values(), qq.values());
        for (auto v : q.values()) {
            const double scaled = static_cast<double>(v) * 255.0;
            r.max_err = std::max(r.max_err, std::abs(scaled - std::round(scaled)));
            if (v < 0.0f || v > 1.0f) r.max_err = std::max(r.max_err, 1.0);
        }
        r.pass = r.max_err < r.threshold;
        out.push_back(r);
    }

    {
        SuiteResult r{"rgb_to_y studio-swing range", 0.0, 1e-9, false};
        PlanarImage img(8, 8);
        for (int t = 0; t < std::max(1, trials / 10); ++t) {
            for (auto& v : img.data) v = rng.uniform();
            auto y = rgb_to_y(img);
            for (auto v : y.data) {
                r.max_err = std::max(r.max_err, std::max(16.0 / 255.0 - v, v - 235.0 / 255.0));
            }
        }
        r.max_err = std::max(r.max_err, 0.0);
        r.pass = r.max_err < r.threshold;
        out.push_back(r);
    }

    {
        SuiteResult r{"gradient checks (64-bit central differences)", 0.0, 1e-4, false};
        auto x = random_tensor<double>({1, 3, 4, 4}, rng, 0.1, 0.9, true);
        auto w = random_tensor<double>({2, 3, 3, 3}, rng, -0.4, 0.4, true);
        auto b = random_tensor<double>({2}, rng, -0.1, 0.1, true);
        auto t2 = random_tensor<double>({1, 2, 4, 4}, rng, 0.0, 1.0);
        r.max_err = std::max(r.max_err, fd_grad_err(
            [&](GraphT<double>& g) {
                auto h = leaky_relu(conv2d(g.attach(x), w, b, 1, 1), 0.2);
                return l1_mean(h, t2);
            },
            {&x, &w, &b}));
        auto a = random_tensor<double>({2, 4}, rng, -1.0, 1.0, true);
        r.max_err = std::max(r.max_err, fd_grad_err(
            [&](GraphT<double>& g) {
                auto at = g.attach(a);
                return sum(mul(fgrn::exp(scale(at, 0.3)), fgrn::tanh(at)));
            },
            {&a}));
        auto sq = random_tensor<double>({1, 2, 4, 4}, rng, -1.0, 1.0, true);
        r.max_err = std::max(r.max_err, fd_grad_err(
            [&](GraphT<double>& g) {
                auto parts = split_channels(squeeze(g.attach(sq), 2), {3, 5});
                return sub(sum(parts[1]), sum(neg(parts[0])));
            },
            {&sq}));
        r.pass = r.max_err < r.threshold;
        out.push_back(r);
    }

    {
        SuiteResult r32{"flow invertibility (32-bit)", 0.0, 1e-4, false};
        SuiteResult r64{"flow invertibility (64-bit)", 0.0, 1e-9, false};
        for (int t = 0; t < trials; ++t) {
            const int k = 1 + static_cast<int>(rng.uniform_int(4));
            const std::int64_t growth = 4 + 4 * rng.uniform_int(3);
            auto f32 = random_flow<float>(k, growth, 1.0, rng);
            auto x32 = random_tensor<float>({1, 3, 8, 8}, rng, -2.0, 2.0);
            r32.max_err = std::max(r32.max_err,
                                   max_abs_diff(f32.inverse(f32.forward(x32).first).values(), x32.values()));
            auto f64 = random_flow<double>(k, growth, 1.0, rng);
            auto x64 = random_tensor<double>({1, 3, 8, 8}, rng, -2.0, 2.0);
            r64.max_err = std::max(r64.max_err,
                                   max_abs_diff(f64.inverse(f64.forward(x64).first).values(), x64.values()));
        }
        r32.pass = r32.max_err < r32.threshold;
        r64.pass = r64.max_err < r64.threshold;
        out.push_back(r32);
        out.push_back(r64);
    }

    {
        SuiteResult r{"flow log-det vs numeric Jacobian", 0.0, 1e-3, false};
        const int n = std::min(trials, 20);
        for (int t = 0; t < n; ++t) {
            auto cell = CouplingCellT<double>::make(4, 1.0, rng);
            randomize_final(cell.alpha, rng);
            randomize_final(cell.beta, rng);
            randomize_final(cell.phi, rng);
            auto x = random_tensor<double>({1, 3, 2, 2}, rng, -1.0, 1.0);
            const double analytic = cell.forward(x).second.item();
            const double numeric = fd_jacobian_logdet(cell, x);
            r.max_err = std::max(r.max_err, rel_err(analytic, numeric));
        }
        r.pass = r.max_err < r.threshold;
        out.push_back(r);
    }

    if (model != nullptr) {
        SuiteResult r{"checkpoint flow invertibility (32-bit)", 0.0, 1e-4, false};
        for (int t = 0; t < std::max(1, trials / 10); ++t) {
            auto x = random_tensor<float>({1, 3, 8, 8}, rng, -1.0, 2.0);
            r.max_err = std::max(
                r.max_err, max_abs_diff(model->flow.inverse(model->flow.forward(x).first).values(), x.values()));
        }
        r.pass = r.max_err < r.threshold;
        out.push_back(r);
    }

    {
        SuiteResult r{"metric identity and symmetry", 0.0, 0.0, false};
        for (int t = 0; t < std::max(1, trials / 10); ++t) {
            PlanarImage a(16, 16), b(16, 16);
            for (auto& v : a.data) v = rng.uniform();
            for (auto& v : b.data) v = rng.uniform();
            r.max_err = std::max(r.max_err, std::abs(psnr_y(a, b, 0) - psnr_y(b, a, 0)));
            r.max_err = std::max(r.max_err, std::abs(ssim_y(a, b, 0) - ssim_y(b, a, 0)));
            r.max_err = std::max(r.max_err, std::abs(ssim_y(a, a, 0) - 1.0));
            if (!std::isinf(psnr_y(a, a, 0))) r.max_err = std::max(r.max_err, 1.0);
        }
        r.pass = r.max_err == 0.0;
        out.push_back(r);
    }

    return out;
}

} // namespace fgrn
