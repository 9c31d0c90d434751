#pragma once

#include "sf/core/pbr.h"
#include "sf/core/vec.h"
#include "sf/render/dual.h"

#include <array>
#include <cmath>

namespace sf {

// Material channels in any scalar type (double or Dual).
template <class T> struct MaterialT {
    std::array<T, 3> base;
    T roughness, metalness;
};

inline MaterialT<double> to_material(const PbrSample &s) {
    return {{s[kDiffuseR], s[kDiffuseG], s[kDiffuseB]}, s[kRoughness], s[kMetalness]};
}
inline MaterialT<Dual<kPbrChannels>> to_dual_material(const PbrSample &s) {
    using D = Dual<kPbrChannels>;
    return {{D::variable(s[0], 0), D::variable(s[1], 1), D::variable(s[2], 2)}, D::variable(s[3], 3),
            D::variable(s[4], 4)};
}

// GGX normal distribution with alpha = roughness^2, as a function of <n,h>.
template <class T> T ggx_d(const T &alpha, double cos_h) {
    const T a2 = alpha * alpha;
    const double c2 = cos_h * cos_h;
    const T k = a2 * c2 + (1.0 - c2);
    return a2 / (kPi * k * k);
}

template <class T> T smith_lambda(const T &alpha, double cos_t) {
    const double c2 = cos_t * cos_t;
    const double tan2 = std::max(0.0, 1.0 - c2) / c2;
    return (sqrt(1.0 + alpha * alpha * tan2) - 1.0) * 0.5;
}

// Lambert (1-k_m)k_d/pi plus GGX D F G / (4 <n,wi><n,wo>) with Schlick
// F0 = mix(0.04, k_d, k_m) and height-correlated Smith G. Directions are unit
// vectors in the frame of n; zero outside the upper hemisphere.
template <class T>
std::array<T, 3> eval_brdf(const MaterialT<T> &m, Vec3 n, Vec3 wi, Vec3 wo, bool specular = true) {
    std::array<T, 3> out{T(0.0), T(0.0), T(0.0)};
    const double ci = dot(n, wi), co = dot(n, wo);
    if (ci <= 0 || co <= 0)
        return out;
    const T diffuse_w = (1.0 - m.metalness) * kInvPi;
    for (int c = 0; c < 3; ++c)
        out[c] = diffuse_w * m.base[c];
    if (!specular)
        return out;
    const Vec3 h = normalize(wi + wo);
    const double ch = dot(n, h), vh = std::max(0.0, dot(wi, h));
    const T alpha = m.roughness * m.roughness;
    const T D = ggx_d(alpha, ch);
    const T G = 1.0 / (1.0 + smith_lambda(alpha, ci) + smith_lambda(alpha, co));
    const double schlick = std::pow(1.0 - vh, 5.0);
    const T common = D * G / (4.0 * ci * co);
    for (int c = 0; c < 3; ++c) {
        const T f0 = 0.04 * (1.0 - m.metalness) + m.base[c] * m.metalness;
        const T F = f0 + (1.0 - f0) * schlick;
        out[c] = out[c] + F * common;
    }
    return out;
}

// Probability of choosing the specular lobe when sampling the BRDF.
inline double specular_lobe_probability(const MaterialT<double> &m, bool specular) {
    return specular ? 0.25 + 0.5 * m.metalness : 0.0;
}

struct BrdfSample {
    Vec3 wi;
    double pdf = 0; // solid angle; 0 when the draw leaves the hemisphere
};

// Mixture of cosine-weighted diffuse and GGX half-vector sampling.
BrdfSample sample_brdf(const MaterialT<double> &m, Vec3 n, Vec3 wo, bool specular, double u_lobe, double u1,
                       double u2);
double brdf_pdf(const MaterialT<double> &m, Vec3 n, Vec3 wi, Vec3 wo, bool specular);

} // namespace sf
