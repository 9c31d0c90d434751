#include "sf/render/env_sampler.h"

#include "sf/core/error.h"

#include <algorithm>
#include <cmath>

namespace sf {

EnvSampler::EnvSampler(const EnvironmentMap &env) : height_(env.height()), width_(env.width()) {
    const int H = height_, W = width_;
    row_cdf_.assign(H + 1, 0.0);
    col_cdf_.assign(static_cast<std::size_t>(H) * (W + 1), 0.0);
    bin_pdf_.assign(env.bin_count(), 0.0);
    std::vector<double> lum(env.bin_count());
    for (std::size_t b = 0; b < env.bin_count(); ++b) {
        const Vec3 v = env.radiance(b);
        lum[b] = (v.x + v.y + v.z) / 3.0;
    }
    double total = 0;
    for (int i = 0; i < H; ++i) {
        const double omega = bin_solid_angle(i, H, W);
        double *cdf = &col_cdf_[static_cast<std::size_t>(i) * (W + 1)];
        for (int j = 0; j < W; ++j)
            cdf[j + 1] = cdf[j] + lum[static_cast<std::size_t>(i) * W + j] * omega;
        row_cdf_[i + 1] = row_cdf_[i] + cdf[W];
        total = row_cdf_[i + 1];
    }
    if (!(total > 0) || !std::isfinite(total))
        fail(ErrorKind::InvalidInput, "environment has zero energy");
    for (std::size_t b = 0; b < env.bin_count(); ++b)
        bin_pdf_[b] = lum[b] / total;
}

namespace {

// Index k with cdf[k] <= x < cdf[k+1], skipping empty intervals.
int find_interval(const double *cdf, int n, double x) {
    const double *it = std::upper_bound(cdf, cdf + n + 1, x);
    int k = static_cast<int>(it - cdf) - 1;
    k = std::clamp(k, 0, n - 1);
    while (k > 0 && cdf[k + 1] == cdf[k])
        --k;
    while (k < n - 1 && cdf[k + 1] == cdf[k])
        ++k;
    return k;
}

} // namespace

EnvSampler::Sample EnvSampler::sample(double u1, double u2) const {
    const int H = height_, W = width_;
    const double total = row_cdf_[H];
    const double x = u1 * total;
    const int i = find_interval(row_cdf_.data(), H, x);
    const double row_w = row_cdf_[i + 1] - row_cdf_[i];
    const double fr = std::clamp((x - row_cdf_[i]) / row_w, 0.0, 1.0);
    const double *cdf = &col_cdf_[static_cast<std::size_t>(i) * (W + 1)];
    const double y = u2 * cdf[W];
    const int j = find_interval(cdf, W, y);
    const double col_w = cdf[j + 1] - cdf[j];
    const double fc = std::clamp((y - cdf[j]) / col_w, 0.0, 1.0);
    // Uniform in solid angle inside the bin: linear in cos(polar) and azimuth.
    const double t0 = kPi * i / H, t1 = kPi * (i + 1) / H;
    const double cos_t = std::cos(t0) + fr * (std::cos(t1) - std::cos(t0));
    const double el = 0.5 * kPi - std::acos(std::clamp(cos_t, -1.0, 1.0));
    const double az = 2 * kPi * (j + fc) / W;
    const std::size_t bin = static_cast<std::size_t>(i) * W + j;
    return {direction_from_angles(el, az), bin_pdf_[bin], bin};
}

double EnvSampler::pdf(Vec3 dir) const {
    const auto b = bin_from_direction(dir, height_, width_);
    return bin_pdf_[static_cast<std::size_t>(b.row) * width_ + b.col];
}

} // namespace sf
