#include "sf/guidance/score.h"

#include "sf/core/error.h"

#include <algorithm>
#include <cmath>

namespace sf {

std::string_view to_string(GuidanceMode mode) { return mode == GuidanceMode::Local ? "local" : "global-inpaint"; }

void GuidanceContext::validate() const {
    require(t_min >= 1 && t_max <= 1000 && t_min <= t_max, "t range must lie within [1, 1000]");
    require(lambda >= 0 && lambda <= 1, "lambda must lie in [0, 1]");
    require(injection.s_c >= 0 && injection.s_c <= 1 && injection.p >= 0 && injection.p <= 1,
            "injection weights must lie in [0, 1]");
    require(cfg_scale >= 0 && std::isfinite(cfg_scale), "cfg scale must be finite and non-negative");
}

std::vector<double> interpolate_scores(std::span<const double> eps_phi, std::span<const double> eps_psi,
                                       std::span<const double> eps, double lambda) {
    require(eps_phi.size() == eps_psi.size() && eps_phi.size() == eps.size(), "score shape mismatch");
    std::vector<double> r(eps.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = eps_phi[i] - (lambda * eps_psi[i] + (1.0 - lambda) * eps[i]);
    return r;
}

ScoreIdentity eq2_equivalence(std::span<const double> x0, std::span<const double> eps, std::span<const double> eps_phi,
                              std::span<const double> eps_psi, double alpha_t, double lambda) {
    require(x0.size() == eps.size(), "score shape mismatch");
    require(alpha_t > 0 && alpha_t < 1, "alpha_t must lie in (0, 1)");
    ScoreIdentity out;
    out.lhs = interpolate_scores(eps_phi, eps_psi, eps, lambda);
    const double sa = std::sqrt(alpha_t), sb = std::sqrt(1.0 - alpha_t);
    const double k = std::sqrt(alpha_t / (1.0 - alpha_t));
    out.rhs.resize(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double xt = sa * x0[i] + sb * eps[i];
        const double xhat_phi = (xt - sb * eps_phi[i]) / sa;
        const double xhat_psi = (xt - sb * eps_psi[i]) / sa;
        out.rhs[i] = k * ((x0[i] - xhat_phi) - lambda * (x0[i] - xhat_psi));
    }
    return out;
}

double anneal_lambda(int iteration, int total_iterations, double lambda_end) {
    if (total_iterations <= 1)
        return lambda_end;
    const double f = static_cast<double>(iteration) / (total_iterations - 1);
    if (iteration >= total_iterations - 1)
        return lambda_end;
    return 1.0 + (lambda_end - 1.0) * f;
}

Image grazing_weight(const Image &view_dot_normal) {
    Image w = view_dot_normal;
    for (double &v : w.data())
        v = std::clamp(v, 0.0, 1.0);
    return w;
}

void apply_pixel_weight(Image &grad, const Image &weight) {
    require(grad.width() == weight.width() && grad.height() == weight.height() && weight.channels() == 1,
            "gradient shape mismatch: pixel weight");
    for (int y = 0; y < grad.height(); ++y)
        for (int x = 0; x < grad.width(); ++x)
            for (int c = 0; c < grad.channels(); ++c)
                grad.at(x, y, c) *= weight.at(x, y);
}

GradientImage photometric_oracle(const Image &render, const Image &target) {
    require(render.same_shape(target), "gradient shape mismatch: render and target differ");
    GradientImage g;
    g.gradient = render;
    for (std::size_t i = 0; i < g.gradient.data().size(); ++i)
        g.gradient.data()[i] = render.data()[i] - target.data()[i];
    g.t = 0;
    g.alpha_t = 1;
    g.w_t = 1;
    return g;
}

} // namespace sf
