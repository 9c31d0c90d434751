#include "sf/geometry/camera.h"

#include "sf/core/error.h"
#include "sf/core/rng.h"

#include <cmath>
#include <string>

namespace sf {

namespace {
constexpr double kDeg = kPi / 180.0;
}

FovForm parse_fov_form(std::string_view text) {
    if (text == "atan" || text == "half-angle-atan" || text == "default")
        return FovForm::HalfAngleAtan;
    if (text == "paper-literal")
        return FovForm::PaperLiteral;
    fail(ErrorKind::InvalidInput, "unknown fov form: " + std::string(text));
}

std::string_view to_string(FovForm form) { return form == FovForm::PaperLiteral ? "paper-literal" : "atan"; }

double fov_from_multiplier(double multiplier, double radius, double distance, FovForm form) {
    require(multiplier >= 0, "fov multiplier must be non-negative");
    require(distance > 0, "camera distance must be positive");
    const double ratio = radius * multiplier / distance;
    return form == FovForm::PaperLiteral ? std::tanh(ratio) : 2.0 * std::atan(ratio);
}

double Camera::fov() const {
    return fov_override ? *fov_override : fov_from_multiplier(fov_multiplier, 0.5, distance, fov_form);
}

Vec3 Camera::position() const {
    const double az = azimuth_deg * kDeg, el = elevation_deg * kDeg;
    return look_at + Vec3{std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)} * distance;
}

Vec3 Camera::forward() const { return normalize(look_at - position()); }

Vec3 Camera::right() const {
    Vec3 f = forward();
    Vec3 r = cross(f, Vec3{0, 1, 0});
    if (length(r) < 1e-9) {
        // Looking straight up or down: keep the azimuth-0 right vector rotated by azimuth.
        const double az = azimuth_deg * kDeg;
        return {std::cos(az), 0, -std::sin(az)};
    }
    return normalize(r);
}

Vec3 Camera::up() const { return cross(right(), forward()); }

Ray Camera::generate_ray(double px, double py, int width, int height) const {
    const double tan_half = std::tan(0.5 * fov());
    const double pixel = 2.0 * tan_half / width;
    const double x = (px - 0.5 * width) * pixel;
    const double y = (0.5 * height - py) * pixel;
    return {position(), normalize(forward() + right() * x + up() * y)};
}

std::optional<Vec2> Camera::project(Vec3 p, int width, int height) const {
    const Vec3 d = p - position();
    const double z = dot(d, forward());
    if (z <= 0)
        return std::nullopt;
    const double tan_half = std::tan(0.5 * fov());
    const double pixel = 2.0 * tan_half / width;
    return Vec2{dot(d, right()) / z / pixel + 0.5 * width, 0.5 * height - dot(d, up()) / z / pixel};
}

std::vector<double> Camera::extrinsic() const {
    const Vec3 r = right(), u = up(), b = -forward(), p = position();
    return {r.x, u.x, b.x, p.x, r.y, u.y, b.y, p.y, r.z, u.z, b.z, p.z, 0, 0, 0, 1};
}

void Camera::validate(double scene_radius) const {
    require(distance > scene_radius, "camera distance must exceed the scene radius");
    const double f = fov();
    require(f > 0 && f < kPi, "camera field of view must lie in (0, pi)");
    require(resolution >= 1, "camera resolution must be positive");
}

std::vector<Camera> sample_cameras(const CameraSamplingConfig &config, std::uint64_t seed) {
    require(config.count >= 1, "camera count must be at least 1");
    if (config.elevations.empty())
        fail(ErrorKind::InvalidInput, "no elevations");
    require(config.fov_multiplier_min > 0 && config.fov_multiplier_max >= config.fov_multiplier_min,
            "fov multiplier range must lie in (0, inf)");
    Rng rng(seed);
    std::vector<Camera> cams;
    cams.reserve(config.count);
    for (int i = 0; i < config.count; ++i) {
        Camera c;
        double az = 360.0 * i / config.count + rng.uniform(-config.azimuth_jitter_deg, config.azimuth_jitter_deg);
        az = std::fmod(az, 360.0);
        if (az < 0)
            az += 360.0;
        c.azimuth_deg = az;
        c.elevation_deg = config.elevations[rng.index(config.elevations.size())];
        c.fov_multiplier = rng.uniform(config.fov_multiplier_min, config.fov_multiplier_max);
        c.distance = config.distance;
        c.resolution = config.resolution;
        c.fov_form = config.fov_form;
        cams.push_back(c);
    }
    return cams;
}

} // namespace sf
