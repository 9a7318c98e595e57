// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_METRICS_HPP
#define FGRN_METRICS_HPP

#include <string>
#include <vector>

#include "fgrn/image_ops.hpp"

namespace fgrn {

/// Luma plane on the 0..255 scale (studio swing: 16..235 for in-range RGB).
Plane luma255(const PlanarImage& img);

/// PSNR between two 0..255 planes: 10·log10(255²/MSE). Identical planes give
/// the +infinity sentinel.
double psnr_plane(const Plane& a, const Plane& b);

/// Single-scale SSIM between two 0..255 planes: 11×11 Gaussian window
/// (sigma 1.5), K1=0.01, K2=0.03, L=255, averaged over the valid (no padding)
/// window map. Planes must be at least 11×11.
double ssim_plane(const Plane& a, const Plane& b);

/// Y-channel metrics with a symmetric border crop (default convention:
/// crop = scale factor).
double psnr_y(const PlanarImage& a, const PlanarImage& b, int border_crop);
double ssim_y(const PlanarImage& a, const PlanarImage& b, int border_crop);

struct MetricReport {
    struct Row {
        std::string file;
        double psnr_db = 0.0;
        double ssim = 0.0;
    };
    std::vector<Row> rows;

    double mean_psnr() const;
    double mean_ssim() const;
    /// CSV with header "file,psnr_db,ssim" and a trailing mean row.
    std::string to_csv() const;
};

} // namespace fgrn

#endif // FGRN_METRICS_HPP
