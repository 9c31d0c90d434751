#include "sf/pipeline/pipeline.h"

#include "sf/core/error.h"

#include <algorithm>
#include <cmath>

namespace sf {

Rng step_rng(std::uint64_t seed, int iteration) {
    return Rng(SampleStream::mix(seed ^ SampleStream::mix(static_cast<std::uint64_t>(iteration) + 0x5f0e1d2c3b4a5968ULL)));
}

Vec3 pick_background(Rng &rng, const BackgroundConfig &config) {
    // Both draws happen every time so the stream position does not depend on
    // the outcome.
    const double u = rng.uniform();
    const Vec3 random{rng.uniform(), rng.uniform(), rng.uniform()};
    return u < config.augment_probability ? random : config.color;
}

PixelRect global_crop(int index, int scene_width, int scene_height, PixelRect object, const CropConfig &config,
                      Rng &rng) {
    require(scene_width > 0 && scene_height > 0, "scene image is empty");
    const PixelRect full{0, 0, scene_width, scene_height};
    // Draws are taken for every index so later crops keep their stream slots.
    const double scale = rng.uniform(config.scale_min, config.scale_max);
    const double ux = rng.uniform(), uy = rng.uniform();
    object.x0 = std::clamp(object.x0, 0, scene_width);
    object.x1 = std::clamp(object.x1, 0, scene_width);
    object.y0 = std::clamp(object.y0, 0, scene_height);
    object.y1 = std::clamp(object.y1, 0, scene_height);
    if (index == 0 || object.empty())
        return full;
    const int bw = object.x1 - object.x0, bh = object.y1 - object.y0;
    const int side = static_cast<int>(std::ceil(scale * std::max(bw, bh)));
    const int cw = std::clamp(side, bw, scene_width), ch = std::clamp(side, bh, scene_height);
    // x0 in [max(0, x1 - cw), min(obj.x0, W - cw)].
    const int xlo = std::max(0, object.x1 - cw), xhi = std::min(object.x0, scene_width - cw);
    const int ylo = std::max(0, object.y1 - ch), yhi = std::min(object.y0, scene_height - ch);
    const int x0 = xlo + std::min(xhi - xlo, static_cast<int>(ux * (xhi - xlo + 1)));
    const int y0 = ylo + std::min(yhi - ylo, static_cast<int>(uy * (yhi - ylo + 1)));
    return {x0, y0, x0 + cw, y0 + ch};
}

Image crop_image(const Image &img, const PixelRect &r) {
    require(!r.empty() && r.x0 >= 0 && r.y0 >= 0 && r.x1 <= img.width() && r.y1 <= img.height(),
            "crop outside the image");
    Image out(r.x1 - r.x0, r.y1 - r.y0, img.channels());
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x)
            for (int c = 0; c < img.channels(); ++c)
                out.at(x - r.x0, y - r.y0, c) = img.at(x, y, c);
    return out;
}

Image uncrop_image(const Image &crop, const PixelRect &r, int width, int height) {
    require(crop.width() == r.x1 - r.x0 && crop.height() == r.y1 - r.y0, "crop does not match its rectangle");
    Image out(width, height, crop.channels());
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x)
            for (int c = 0; c < crop.channels(); ++c)
                out.at(x, y, c) = crop.at(x - r.x0, y - r.y0, c);
    return out;
}

std::vector<double> ambient_light_embedding() { return {0.25, 0.0, 0.0, 1.0, 1.0}; }

Camera placement_camera(const Placement &placement, double fov_multiplier, int resolution) {
    Camera cam;
    cam.azimuth_deg = 0;
    cam.elevation_deg = placement.elevation;
    cam.distance = 2.0;
    cam.fov_multiplier = fov_multiplier;
    cam.resolution = resolution;
    return cam;
}

} // namespace sf
