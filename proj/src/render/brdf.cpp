#include "sf/render/brdf.h"

namespace sf {

BrdfSample sample_brdf(const MaterialT<double> &m, Vec3 n, Vec3 wo, bool specular, double u_lobe, double u1,
                       double u2) {
    const double p_spec = specular_lobe_probability(m, specular);
    const Frame frame(n);
    Vec3 wi;
    if (u_lobe < p_spec) {
        const double alpha = m.roughness * m.roughness;
        const double tan2 = alpha * alpha * u1 / std::max(1e-300, 1.0 - u1);
        const double cos_t = 1.0 / std::sqrt(1.0 + tan2);
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        const double phi = 2 * kPi * u2;
        const Vec3 h = frame.to_world({sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t});
        wi = h * (2 * dot(wo, h)) - wo;
    } else {
        const double r = std::sqrt(u1), phi = 2 * kPi * u2;
        wi = frame.to_world({r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1))});
    }
    wi = normalize(wi);
    if (dot(wi, n) <= 0)
        return {wi, 0.0};
    return {wi, brdf_pdf(m, n, wi, wo, specular)};
}

double brdf_pdf(const MaterialT<double> &m, Vec3 n, Vec3 wi, Vec3 wo, bool specular) {
    const double ci = dot(n, wi);
    if (ci <= 0 || dot(n, wo) <= 0)
        return 0.0;
    const double p_spec = specular_lobe_probability(m, specular);
    double pdf = (1 - p_spec) * ci * kInvPi;
    if (p_spec > 0) {
        const Vec3 h = normalize(wi + wo);
        const double ch = dot(n, h), oh = dot(wo, h);
        if (ch > 0 && oh > 0) {
            const double alpha = m.roughness * m.roughness;
            pdf += p_spec * ggx_d(alpha, ch) * ch / (4 * oh);
        }
    }
    return pdf;
}

} // namespace sf
