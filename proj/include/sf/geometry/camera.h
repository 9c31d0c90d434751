#pragma once

#include "sf/core/vec.h"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace sf {

// `HalfAngleAtan` reads the multiplier rule as 2*atan(r*lambda/d) (the full
// pinhole FOV subtending the framed radius); `PaperLiteral` returns
// tanh(r*lambda/d) verbatim.
enum class FovForm { HalfAngleAtan, PaperLiteral };

FovForm parse_fov_form(std::string_view text);
std::string_view to_string(FovForm form);

double fov_from_multiplier(double multiplier, double radius, double distance, FovForm form = FovForm::HalfAngleAtan);

struct Ray {
    Vec3 origin;
    Vec3 dir;
};

// Orbit camera. Right-handed, +Y up; at azimuth 0 the camera sits on +Z and
// looks toward -Z. Positive elevation raises the camera above the look-at point.
struct Camera {
    double azimuth_deg = 0;
    double elevation_deg = 0;
    double distance = 2.0;
    double fov_multiplier = 1.0;
    int resolution = 64;
    Vec3 look_at{};
    FovForm fov_form = FovForm::HalfAngleAtan;
    // Full field of view override in radians (used for scene photographs whose
    // intrinsics do not come from the multiplier rule).
    std::optional<double> fov_override;

    double fov() const;
    Vec3 position() const;
    Vec3 forward() const;
    // Camera-to-world rotation columns.
    Vec3 right() const;
    Vec3 up() const;

    // Ray through continuous raster coordinates (x right, y down, pixel centers
    // at integer + 0.5) of a width x height image sharing this camera's FOV on
    // its horizontal axis.
    Ray generate_ray(double px, double py, int width, int height) const;
    Ray generate_ray(double px, double py) const { return generate_ray(px, py, resolution, resolution); }
    // Projects a world point to raster coordinates; nullopt behind the camera.
    std::optional<Vec2> project(Vec3 p, int width, int height) const;

    // Row-major 4x4 camera-to-world matrix.
    std::vector<double> extrinsic() const;

    void validate(double scene_radius = 0.5) const;
};

struct CameraSamplingConfig {
    int count = 24;
    std::vector<double> elevations{30.0};
    double fov_multiplier_min = 1.0;
    double fov_multiplier_max = 1.21;
    double azimuth_jitter_deg = 2.5;
    double distance = 2.0;
    int resolution = 64;
    FovForm fov_form = FovForm::HalfAngleAtan;
};

// Azimuths uniformly spaced over [0, 360) with uniform jitter, elevation drawn
// from the given set and FOV multiplier drawn uniformly from the range.
std::vector<Camera> sample_cameras(const CameraSamplingConfig &config, std::uint64_t seed);

} // namespace sf
