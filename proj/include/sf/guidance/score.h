#pragma once

#include "sf/core/image.h"
#include "sf/core/vec.h"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sf {

// Per-pixel gradient of the guidance loss with respect to the rendered linear
// RGB image, plus the noise-level metadata the provider used.
struct GradientImage {
    Image gradient; // H x W x 3
    double t = 0;
    double alpha_t = 1;
    double w_t = 1;
};

enum class GuidanceMode { Local, GlobalInpaint };
std::string_view to_string(GuidanceMode mode);

struct InjectionSettings {
    bool enabled = false;
    double s_c = 0.0;
    double p = 1.0;
};

struct GuidanceContext {
    std::string prompt;
    std::string negative_prompt;
    int t_min = 500, t_max = 990;
    double cfg_scale = 7.5;
    double lambda = 1.0;
    InjectionSettings injection;
    std::vector<double> class_embedding;
    GuidanceMode mode = GuidanceMode::Local;
    std::optional<Vec3> solid_background;

    void validate() const;
};

// eps_phi - (lambda * eps_psi + (1 - lambda) * eps)
std::vector<double> interpolate_scores(std::span<const double> eps_phi, std::span<const double> eps_psi,
                                       std::span<const double> eps, double lambda);

// Both sides of the residual identity: the interpolated noise residual and the
// same residual written through the denoised estimates x_hat.
struct ScoreIdentity {
    std::vector<double> lhs, rhs;
};
ScoreIdentity eq2_equivalence(std::span<const double> x0, std::span<const double> eps, std::span<const double> eps_phi,
                              std::span<const double> eps_psi, double alpha_t, double lambda);

// Linear from 1 at the first iteration to lambda_end at the last.
double anneal_lambda(int iteration, int total_iterations, double lambda_end);

Image grazing_weight(const Image &view_dot_normal);
// Multiplies every channel of `grad` by the per-pixel weight.
void apply_pixel_weight(Image &grad, const Image &weight);

// Gradient of 0.5 * ||render - target||^2.
GradientImage photometric_oracle(const Image &render, const Image &target);

} // namespace sf
