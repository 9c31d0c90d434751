#pragma once

#include "sf/core/image.h"
#include "sf/core/pbr.h"
#include "sf/geometry/camera.h"
#include "sf/geometry/mesh.h"
#include "sf/lighting/environment.h"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace sf {

// Default bright-area thresholds.
struct LightThresholds {
    double tau_far = 0.8;
    double tau_near = 0.95;
    double tau_outdoor = 0.9;
    double tau_depth = std::numeric_limits<double>::infinity();
};

// Outdoor rule: far = upper half of the panorama or intensity >= tau_o; near
// is always empty.
LightRegions outdoor_regions(const EnvironmentMap &ldr, double tau_outdoor);

// Indoor rule over a per-bin depth grid (unseen bins carry +inf):
// far = depth >= tau_d and I >= tau_f, near = depth < tau_d and I >= tau_n.
LightRegions indoor_regions(const EnvironmentMap &ldr, const std::vector<double> &depth_env, double tau_far,
                            double tau_near, double tau_depth);

// Multiplies far/near bins by their scales and returns an HDR map with the
// scales baked in.
EnvironmentMap apply_light_scales(const EnvironmentMap &ldr, const LightRegions &regions, const LightScales &scales);

struct RegionIntensityMeans {
    double background = 0; // bins outside both regions
    double lights = 0;     // bins in either region
};
RegionIntensityMeans region_intensity_means(const EnvironmentMap &env);

struct IndoorLdrOptions {
    int height = 256;
    int width = 512;
    double bright_threshold = 0.8;
    // Bright connected components smaller than this are removed. A value < 1
    // is a fraction of the bin count.
    double min_region_area = 0.001;
    int hole_close_radius = 2;
};

struct IndoorLdrResult {
    EnvironmentMap map;               // LDR
    std::vector<double> depth;        // per-bin distance from the anchor, +inf when unseen
    std::vector<std::uint8_t> written; // splatted or hole-filled bins
};

// Lifts every scene pixel to 3D with its planar depth, re-centers on the
// anchor pixel's lifted point and splats the directions into a lat-long map.
// Holes inside the covered area are diffused from neighbours; bins never
// reached take the scene's mean linear color.
IndoorLdrResult indoor_ldr(const Image &scene_srgb, const Image &depth, const Camera &camera, Vec2 anchor_pixel,
                           const IndoorLdrOptions &options = {});

// Isotropic spherical Gaussian: b_v + c_v * exp((<d, mu> - 1) / c_r), with
// mu at equirect coordinates (c_x, c_y). c_x = 0.25 is azimuth 0 and c_y = 0 the
// zenith. c_r <= 0 disables the lobe.
struct SphericalGaussianParams {
    double c_x = 0.25;
    double c_y = 0.0;
    double c_r = 0.08;
    double c_v = 12.0;
    double b_v = 0.8;

    std::vector<double> embedding() const { return {c_x, c_y, c_r, c_v, b_v}; }
};
Vec3 sg_center_direction(double c_x, double c_y);
EnvironmentMap synthesize_sg_envmap(const SphericalGaussianParams &params, int height, int width);

// Second scene rendered next to the object during light estimation: a white
// diffuse sphere of radius 0.5 at the origin, resting on its own floor plane.
// Each step renders `object_views` object views and one sphere view.
struct ApparatusScene {
    TriangleMesh sphere;
    PbrSample material{1.0, 1.0, 1.0, 1.0, 0.0};
    bool specular = false;
    std::string prompt;
    int object_views = 3;
    std::array<double, 4> loss_weights{1.0 / 6, 1.0 / 6, 1.0 / 6, 0.5}; // object views first
};

ApparatusScene build_apparatus_scene(const TriangleMesh &object, const ChannelBounds &bounds = {});

} // namespace sf
