// SPDX-License-Identifier: Apache-2.0

#include "fgrn/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fgrn {

Plane luma255(const PlanarImage& img) {
    Plane y = rgb_to_y(img);
    for (auto& v : y.data) v *= 255.0;
    return y;
}

namespace {

void check_same_dims(const Plane& a, const Plane& b, const char* op) {
    if (a.height != b.height || a.width != b.width)
        raise(ErrorCode::ShapeMismatch, std::string(op) + ": plane dims differ");
}

Plane crop_border(const Plane& p, int crop) {
    if (crop <= 0) return p;
    if (p.height <= 2 * crop || p.width <= 2 * crop)
        raise(ErrorCode::TooSmall, "border crop leaves no pixels");
    Plane out(p.height - 2 * crop, p.width - 2 * crop);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(y, x) = p.at(y + crop, x + crop);
    return out;
}

void check_same_images(const PlanarImage& a, const PlanarImage& b, const char* op) {
    if (a.height != b.height || a.width != b.width)
        raise(ErrorCode::ShapeMismatch, std::string(op) + ": image dims differ");
}

} // namespace

double psnr_plane(const Plane& a, const Plane& b) {
    check_same_dims(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim_plane(const Plane& a, const Plane& b) {
    check_same_dims(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
    if (a.height < kWin || a.width < kWin)
        raise(ErrorCode::TooSmall, "ssim requires planes of at least 11x11");

    // normalized 11-tap Gaussian
    double w1d[kWin];
    double total = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = static_cast<double>(i - kWin / 2);
        w1d[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += w1d[i];
    }
    for (auto& w : w1d) w /= total;

    const int oh = a.height - kWin + 1;
    const int ow = a.width - kWin + 1;
    double acc = 0.0;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double mu_a = 0.0, mu_b = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int wy = 0; wy < kWin; ++wy) {
                for (int wx = 0; wx < kWin; ++wx) {
                    const double w = w1d[wy] * w1d[wx];
                    const double va = a.at(y + wy, x + wx);
                    const double vb = b.at(y + wy, x + wx);
                    mu_a += w * va;
                    mu_b += w * vb;
                    saa += w * (va * va);
                    sbb += w * (vb * vb);
                    // grouped so the value is bitwise symmetric in (a, b)
                    sab += w * (va * vb);
                }
            }
            const double var_a = saa - mu_a * mu_a;
            const double var_b = sbb - mu_b * mu_b;
            const double cov = sab - mu_a * mu_b;
            const double num = (2.0 * (mu_a * mu_b) + kC1) * (2.0 * cov + kC2);
            const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
            acc += num / den;
        }
    }
    return acc / (static_cast<double>(oh) * static_cast<double>(ow));
}

double psnr_y(const PlanarImage& a, const PlanarImage& b, int border_crop) {
    check_same_images(a, b, "psnr_y");
    return psnr_plane(crop_border(luma255(a), border_crop), crop_border(luma255(b), border_crop));
}

double ssim_y(const PlanarImage& a, const PlanarImage& b, int border_crop) {
    check_same_images(a, b, "ssim_y");
    return ssim_plane(crop_border(luma255(a), border_crop), crop_border(luma255(b), border_crop));
}

double MetricReport::mean_psnr() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.psnr_db;
    return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

double MetricReport::mean_ssim() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.ssim;
    return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "file,psnr_db,ssim\n";
    for (const auto& r : rows) os << r.file << "," << r.psnr_db << "," << r.ssim << "\n";
    os << "mean," << mean_psnr() << "," << mean_ssim() << "\n";
    return os.str();
}

} // namespace fgrn
