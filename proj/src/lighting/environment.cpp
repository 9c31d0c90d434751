#include "sf/lighting/environment.h"

#include "sf/core/error.h"

#include <algorithm>
#include <cmath>

namespace sf {

Vec3 direction_from_angles(double el, double az) {
    return {std::cos(el) * std::sin(az), std::sin(el), -std::cos(el) * std::cos(az)};
}

void angles_from_direction(Vec3 d, double &el, double &az) {
    el = std::asin(std::clamp(d.y, -1.0, 1.0));
    az = std::atan2(d.x, -d.z);
    if (az < 0)
        az += 2 * kPi;
}

BinIndex bin_from_direction(Vec3 dir, int height, int width) {
    double el, az;
    angles_from_direction(dir, el, az);
    int row = static_cast<int>(std::floor((0.5 * kPi - el) / kPi * height));
    int col = static_cast<int>(std::floor(az / (2 * kPi) * width));
    return {std::clamp(row, 0, height - 1), ((col % width) + width) % width};
}

Vec3 bin_center_direction(int row, int col, int height, int width) {
    const double el = 0.5 * kPi - kPi * (row + 0.5) / height;
    const double az = 2 * kPi * (col + 0.5) / width;
    return direction_from_angles(el, az);
}

double bin_solid_angle(int row, int height, int width) {
    // Polar angle from the zenith spans [row, row+1] * pi / H.
    const double t0 = kPi * row / height, t1 = kPi * (row + 1) / height;
    return (std::cos(t0) - std::cos(t1)) * (2 * kPi / width);
}

double bin_half_extent(int height, int width) { return 0.5 * std::max(kPi / height, 2 * kPi / width); }

double intensity(double r, double g, double b) { return std::sqrt(r * r + g * g + b * b); }

std::size_t LightRegions::far_count() const { return std::count(far_mask.begin(), far_mask.end(), 1); }
std::size_t LightRegions::near_count() const { return std::count(near_mask.begin(), near_mask.end(), 1); }

EnvironmentMap::EnvironmentMap(int height, int width, MapKind kind, double fill)
    : height_(height), width_(width), kind_(kind), grid_(static_cast<std::size_t>(height) * width * 3, fill) {
    require(height >= 1 && width >= 1, "environment map must be non-empty");
}

EnvironmentMap EnvironmentMap::constant(int height, int width, double value, MapKind kind) {
    return EnvironmentMap(height, width, kind, value);
}

EnvironmentMap EnvironmentMap::from_image(const Image &rgb, MapKind kind) {
    require(rgb.channels() >= 3, "environment image needs RGB channels");
    EnvironmentMap env(rgb.height(), rgb.width(), kind);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            env.set_base(static_cast<std::size_t>(y) * rgb.width() + x, {rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2)});
    return env;
}

void EnvironmentMap::set_base(std::size_t bin, Vec3 v) {
    grid_[3 * bin] = v.x;
    grid_[3 * bin + 1] = v.y;
    grid_[3 * bin + 2] = v.z;
}

void EnvironmentMap::set_regions(LightRegions r) {
    if (!r.far_mask.empty())
        require(r.far_mask.size() == bin_count(), "far mask does not match map dimensions");
    if (!r.near_mask.empty())
        require(r.near_mask.size() == bin_count(), "near mask does not match map dimensions");
    regions_ = std::move(r);
}

RegionId EnvironmentMap::region(std::size_t bin) const {
    if (!regions_.far_mask.empty() && regions_.far_mask[bin])
        return RegionId::Far;
    if (!regions_.near_mask.empty() && regions_.near_mask[bin])
        return RegionId::Near;
    return RegionId::None;
}

double EnvironmentMap::scale_for(RegionId id) const {
    switch (id) {
    case RegionId::Far: return scales_.far;
    case RegionId::Near: return scales_.near;
    case RegionId::None: break;
    }
    return 1.0;
}

Vec3 EnvironmentMap::radiance(std::size_t bin) const {
    if (kind_ == MapKind::Hdr)
        return base(bin);
    return base(bin) * scale_for(region(bin));
}

Vec3 EnvironmentMap::radiance(Vec3 dir) const {
    auto b = bin_from_direction(dir, height_, width_);
    return radiance(static_cast<std::size_t>(b.row) * width_ + b.col);
}

double EnvironmentMap::intensity(std::size_t bin) const {
    Vec3 v = base(bin);
    return sf::intensity(v.x, v.y, v.z);
}

Image EnvironmentMap::to_image() const {
    Image img(width_, height_, 3);
    std::copy(grid_.begin(), grid_.end(), img.data().begin());
    return img;
}

Image EnvironmentMap::radiance_image() const {
    Image img(width_, height_, 3);
    for (std::size_t b = 0; b < bin_count(); ++b) {
        Vec3 v = radiance(b);
        img.data()[3 * b] = v.x;
        img.data()[3 * b + 1] = v.y;
        img.data()[3 * b + 2] = v.z;
    }
    return img;
}

void EnvironmentMap::validate() const {
    for (double v : grid_)
        if (!std::isfinite(v) || v < 0)
            fail(ErrorKind::Numeric, "NaN in parameters: environment map must be finite and non-negative");
    if (!std::isfinite(scales_.far) || !std::isfinite(scales_.near) || scales_.far < 0 || scales_.near < 0)
        fail(ErrorKind::Numeric, "NaN in parameters: light scales must be finite and non-negative");
}

} // namespace sf
