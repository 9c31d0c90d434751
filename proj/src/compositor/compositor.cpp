#include "sf/compositor/compositor.h"

#include "sf/core/error.h"
#include "sf/lighting/environment.h"

#include <algorithm>
#include <cmath>
#include <optional>

namespace sf {

void Placement::validate(int scene_width, int scene_height) const {
    require(size > 0 && std::isfinite(size), "placement size must be positive");
    require(position.x >= 0 && position.x <= scene_width && position.y >= 0 && position.y <= scene_height,
            "placement position outside the scene image");
}

namespace {

constexpr double kMatteQuantum = 0x1.0p-24;

double pixel_intensity(const Image &img, int x, int y) {
    return intensity(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
}

// Scene pixel -> render raster mapping of a placement.
struct Warp {
    double scale;  // scene pixels per render pixel
    double ax, ay; // render-space anchor (bottom-center of the alpha bounds)
    Vec2 pos;
    int res;

    Vec2 to_render(double sx, double sy) const { return {(sx - pos.x) / scale + ax, (sy - pos.y) / scale + ay}; }
    Vec2 to_scene(double rx, double ry) const { return {(rx - ax) * scale + pos.x, (ry - ay) * scale + pos.y}; }
};

Warp make_warp(const RenderOutput &object, const Placement &placement) {
    const PixelRect b = alpha_bounds(object.alpha);
    if (b.empty())
        fail(ErrorKind::InvalidInput, "object not visible in render");
    const double h = b.y1 - b.y0;
    return {placement.size / h, 0.5 * (b.x0 + b.x1), static_cast<double>(b.y1), placement.position,
            object.alpha.width()};
}

// Bilinear tap of channel c with zero outside the image.
double tap(const Image &img, double rx, double ry, int c) {
    const double fx = rx - 0.5, fy = ry - 0.5;
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    double v = 0;
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            const int x = x0 + dx, y = y0 + dy;
            if (x < 0 || y < 0 || x >= img.width() || y >= img.height())
                continue;
            v += (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * img.at(x, y, c);
        }
    return v;
}

} // namespace

PixelRect alpha_bounds(const Image &alpha) {
    PixelRect r{alpha.width(), alpha.height(), 0, 0};
    for (int y = 0; y < alpha.height(); ++y)
        for (int x = 0; x < alpha.width(); ++x)
            if (alpha.at(x, y) > 0) {
                r.x0 = std::min(r.x0, x);
                r.y0 = std::min(r.y0, y);
                r.x1 = std::max(r.x1, x + 1);
                r.y1 = std::max(r.y1, y + 1);
            }
    if (r.x1 == 0)
        return PixelRect{};
    return r;
}

ShadowMatte extract_shadow_matte(const Image &floor_radiance, const Image *floor_alpha, double threshold) {
    require(floor_radiance.channels() == 3, "floor pass must be RGB");
    require(threshold > 0 && threshold < 1, "shadow threshold must lie in (0, 1)");
    if (floor_alpha)
        require(floor_alpha->width() == floor_radiance.width() && floor_alpha->height() == floor_radiance.height(),
                "floor coverage does not match the floor pass");
    const int W = floor_radiance.width(), H = floor_radiance.height();
    auto coverage = [&](int x, int y) { return floor_alpha ? floor_alpha->at(x, y) : 1.0; };

    // Coverage-normalized floor intensity.
    Image level(W, H, 1, -1.0);
    double peak = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double a = coverage(x, y);
            if (a <= 0)
                continue;
            level.at(x, y) = pixel_intensity(floor_radiance, x, y) / a;
            peak = std::max(peak, level.at(x, y));
        }
    const double cut = threshold * peak;
    double lit_sum = 0;
    std::size_t lit_n = 0;
    for (double v : level.data())
        if (v >= 0 && v >= cut && peak > 0) {
            lit_sum += v;
            ++lit_n;
        }
    if (lit_n == 0)
        fail(ErrorKind::InvalidInput, "no lit reference region");
    const double lit_mean = lit_sum / static_cast<double>(lit_n);

    ShadowMatte m{Image(W, H, 1)};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double v = level.at(x, y);
            if (v < 0 || v >= cut)
                continue;
            const double o = std::clamp(1.0 - v / lit_mean, 0.0, 1.0) * coverage(x, y);
            m.opacity.at(x, y) = std::round(o / kMatteQuantum) * kMatteQuantum;
        }
    return m;
}

PixelRect placed_bounds(const RenderOutput &object, const Placement &placement) {
    const Warp w = make_warp(object, placement);
    const Vec2 lo = w.to_scene(0, 0), hi = w.to_scene(w.res, w.res);
    return {static_cast<int>(std::floor(lo.x)), static_cast<int>(std::floor(lo.y)),
            static_cast<int>(std::ceil(hi.x)), static_cast<int>(std::ceil(hi.y))};
}

namespace {

// Scene pixels reached by the warped render and the supersampling rate.
struct Footprint {
    Warp warp;
    int n = 1;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

void check_layers(const Image &scene, const RenderOutput &object, const ShadowMatte *matte) {
    require(scene.channels() == 3, "scene image must be RGB");
    require(object.radiance.channels() == 3 && object.alpha.same_shape(Image(object.radiance.width(),
                                                                               object.radiance.height(), 1)),
            "object render buffers disagree");
    if (matte)
        require(matte->opacity.empty() || (matte->opacity.width() == object.alpha.width() &&
                                           matte->opacity.height() == object.alpha.height()),
                "shadow matte does not match the object render");
}

// Empty optional when the render has no coverage.
std::optional<Footprint> make_footprint(int scene_w, int scene_h, const RenderOutput &object,
                                        const Placement &placement) {
    placement.validate(scene_w, scene_h);
    if (alpha_bounds(object.alpha).empty())
        return std::nullopt;
    Footprint f;
    f.warp = make_warp(object, placement);
    const PixelRect r = placed_bounds(object, placement);
    f.x0 = std::max(r.x0, 0);
    f.y0 = std::max(r.y0, 0);
    f.x1 = std::min(r.x1, scene_w);
    f.y1 = std::min(r.y1, scene_h);
    const PixelRect obj = alpha_bounds(object.alpha);
    const Vec2 olo = f.warp.to_scene(obj.x0, obj.y0), ohi = f.warp.to_scene(obj.x1, obj.y1);
    if (ohi.x <= 0 || ohi.y <= 0 || olo.x >= scene_w || olo.y >= scene_h)
        fail(ErrorKind::InvalidInput, "object out of frame");
    // Box-filtered when shrinking: n x n bilinear taps per scene pixel.
    f.n = std::max(1, static_cast<int>(std::ceil(1.0 / f.warp.scale)));
    return f;
}

// Adjoint of tap(): scatters g into `img` channel c.
void tap_adjoint(Image &img, double rx, double ry, int c, double g) {
    const double fx = rx - 0.5, fy = ry - 0.5;
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            const int x = x0 + dx, y = y0 + dy;
            if (x < 0 || y < 0 || x >= img.width() || y >= img.height())
                continue;
            img.at(x, y, c) += (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * g;
        }
}

struct Layers {
    double a = 0, o = 0;
    double rgb[3] = {0, 0, 0};
};

Layers sample_layers(const Footprint &f, const RenderOutput &object, const ShadowMatte *matte, int x, int y) {
    Layers l;
    const int n = f.n;
    for (int sy = 0; sy < n; ++sy)
        for (int sx = 0; sx < n; ++sx) {
            const Vec2 p = f.warp.to_render(x + (sx + 0.5) / n, y + (sy + 0.5) / n);
            l.a += tap(object.alpha, p.x, p.y, 0);
            if (matte && !matte->opacity.empty())
                l.o += tap(matte->opacity, p.x, p.y, 0);
            for (int c = 0; c < 3; ++c)
                l.rgb[c] += tap(object.radiance, p.x, p.y, c);
        }
    const double inv = 1.0 / (n * n);
    l.a = std::clamp(l.a * inv, 0.0, 1.0);
    l.o = std::clamp(l.o * inv, 0.0, 1.0);
    for (double &v : l.rgb)
        v *= inv;
    return l;
}

} // namespace

Image composite(const Image &scene_srgb, const RenderOutput &object, const ShadowMatte &matte,
                const Placement &placement) {
    check_layers(scene_srgb, object, &matte);
    const auto f = make_footprint(scene_srgb.width(), scene_srgb.height(), object, placement);
    if (!f)
        return scene_srgb;
    if (f->warp.scale > 1.0)
        log_warning("placement upsamples the object render; render at a higher resolution");
    Image out = scene_srgb;
    for (int y = f->y0; y < f->y1; ++y)
        for (int x = f->x0; x < f->x1; ++x) {
            const Layers l = sample_layers(*f, object, &matte, x, y);
            if (l.a == 0 && l.o == 0)
                continue;
            for (int c = 0; c < 3; ++c) {
                const double bg = srgb_to_linear(scene_srgb.at(x, y, c)) * (1.0 - l.o);
                out.at(x, y, c) = linear_to_srgb(std::max(0.0, l.rgb[c] + (1.0 - l.a) * bg));
            }
        }
    return out;
}

Image composite_linear(const Image &scene_linear, const RenderOutput &object, const ShadowMatte &matte,
                       const Placement &placement) {
    check_layers(scene_linear, object, &matte);
    const auto f = make_footprint(scene_linear.width(), scene_linear.height(), object, placement);
    Image out = scene_linear;
    if (!f)
        return out;
    for (int y = f->y0; y < f->y1; ++y)
        for (int x = f->x0; x < f->x1; ++x) {
            const Layers l = sample_layers(*f, object, &matte, x, y);
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = l.rgb[c] + (1.0 - l.a) * (1.0 - l.o) * scene_linear.at(x, y, c);
        }
    return out;
}

Image composite_linear_backward(const Image &grad_scene, const RenderOutput &object, const Placement &placement) {
    check_layers(grad_scene, object, nullptr);
    Image grad(object.radiance.width(), object.radiance.height(), 3);
    const auto f = make_footprint(grad_scene.width(), grad_scene.height(), object, placement);
    if (!f)
        return grad;
    const int n = f->n;
    const double inv = 1.0 / (n * n);
    for (int y = f->y0; y < f->y1; ++y)
        for (int x = f->x0; x < f->x1; ++x)
            for (int sy = 0; sy < n; ++sy)
                for (int sx = 0; sx < n; ++sx) {
                    const Vec2 p = f->warp.to_render(x + (sx + 0.5) / n, y + (sy + 0.5) / n);
                    for (int c = 0; c < 3; ++c)
                        tap_adjoint(grad, p.x, p.y, c, grad_scene.at(x, y, c) * inv);
                }
    return grad;
}

Image placed_coverage(int scene_width, int scene_height, const RenderOutput &object, const ShadowMatte &matte,
                      const Placement &placement) {
    check_layers(Image(scene_width, scene_height, 3), object, &matte);
    Image mask(scene_width, scene_height, 1);
    const auto f = make_footprint(scene_width, scene_height, object, placement);
    if (!f)
        return mask;
    for (int y = f->y0; y < f->y1; ++y)
        for (int x = f->x0; x < f->x1; ++x) {
            const Layers l = sample_layers(*f, object, &matte, x, y);
            mask.at(x, y) = std::max(l.a, l.o);
        }
    return mask;
}

} // namespace sf
