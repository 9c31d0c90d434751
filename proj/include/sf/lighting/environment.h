#pragma once

#include "sf/core/image.h"
#include "sf/core/vec.h"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace sf {

// Lat-long convention: row 0 is the zenith (+90 deg elevation), rows advance
// downward to the nadir; column 0 starts at azimuth 0 and azimuth grows toward
// +X. Azimuth 0 at the horizon is the -Z direction (what an azimuth-0 camera
// looks at).
Vec3 direction_from_angles(double elevation_rad, double azimuth_rad);
void angles_from_direction(Vec3 dir, double &elevation_rad, double &azimuth_rad);

struct BinIndex {
    int row = 0, col = 0;
};

BinIndex bin_from_direction(Vec3 dir, int height, int width);
Vec3 bin_center_direction(int row, int col, int height, int width);
double bin_solid_angle(int row, int height, int width);
// Angular half-width of a bin along elevation and azimuth (radians).
double bin_half_extent(int height, int width);

// L2 norm of a linear RGB triple; the intensity measure used by every
// threshold in the lighting and compositing code.
double intensity(double r, double g, double b);

enum class MapKind { Ldr, Hdr };

struct LightRegions {
    std::vector<std::uint8_t> far_mask;
    std::vector<std::uint8_t> near_mask;
    double tau_far = 0.8;
    double tau_near = 0.95;
    double tau_outdoor = 0.9;
    double tau_depth = std::numeric_limits<double>::infinity();

    bool empty() const { return far_mask.empty() && near_mask.empty(); }
    std::size_t far_count() const;
    std::size_t near_count() const;
};

struct LightScales {
    double far = 1.0;
    double near = 1.0;

    bool operator==(const LightScales &) const = default;
};

enum class RegionId : std::uint8_t { None = 0, Far = 1, Near = 2 };

class EnvironmentMap {
public:
    EnvironmentMap() = default;
    EnvironmentMap(int height, int width, MapKind kind = MapKind::Ldr, double fill = 0.0);
    static EnvironmentMap constant(int height, int width, double value, MapKind kind = MapKind::Hdr);
    static EnvironmentMap from_image(const Image &rgb, MapKind kind);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t bin_count() const { return static_cast<std::size_t>(height_) * width_; }
    MapKind kind() const { return kind_; }
    void set_kind(MapKind kind) { kind_ = kind; }

    // Base values as stored (LDR values for LDR maps, final radiance for HDR).
    Vec3 base(std::size_t bin) const { return {grid_[3 * bin], grid_[3 * bin + 1], grid_[3 * bin + 2]}; }
    Vec3 base(int row, int col) const { return base(static_cast<std::size_t>(row) * width_ + col); }
    void set_base(std::size_t bin, Vec3 v);
    std::vector<double> &grid() { return grid_; }
    const std::vector<double> &grid() const { return grid_; }

    const LightRegions &regions() const { return regions_; }
    void set_regions(LightRegions r);
    const LightScales &scales() const { return scales_; }
    void set_scales(LightScales s) { scales_ = s; }

    RegionId region(std::size_t bin) const;
    // Emitted radiance: LDR maps apply the learnable region scales on the fly,
    // HDR maps are returned as stored.
    Vec3 radiance(std::size_t bin) const;
    Vec3 radiance(Vec3 dir) const;
    double scale_for(RegionId id) const;

    double intensity(std::size_t bin) const;
    Image to_image() const;          // stored grid as H x W x 3
    Image radiance_image() const;    // emitted radiance as H x W x 3

    // Throws "NaN in parameters" style errors for non-finite or negative data.
    void validate() const;

private:
    int height_ = 0, width_ = 0;
    MapKind kind_ = MapKind::Ldr;
    std::vector<double> grid_;
    LightRegions regions_;
    LightScales scales_;
};

} // namespace sf
