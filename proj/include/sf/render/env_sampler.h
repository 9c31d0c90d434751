#pragma once

#include "sf/core/vec.h"
#include "sf/lighting/environment.h"

#include <vector>

namespace sf {

// Piecewise-constant importance sampler over lat-long bins. A bin is chosen
// with probability proportional to mean(RGB) times its solid angle and the
// direction is uniform in solid angle inside the bin, so pdf = mean(RGB) / sum.
class EnvSampler {
public:
    EnvSampler() = default;
    explicit EnvSampler(const EnvironmentMap &env);

    struct Sample {
        Vec3 dir;
        double pdf;
        std::size_t bin;
    };
    Sample sample(double u1, double u2) const;
    double pdf(Vec3 dir) const;
    double pdf_bin(std::size_t bin) const { return bin_pdf_[bin]; }
    int height() const { return height_; }
    int width() const { return width_; }

private:
    int height_ = 0, width_ = 0;
    std::vector<double> row_cdf_;   // H+1
    std::vector<double> col_cdf_;   // H*(W+1)
    std::vector<double> bin_pdf_;   // per solid angle
};

} // namespace sf
