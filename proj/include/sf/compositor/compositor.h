#pragma once

#include "sf/core/image.h"
#include "sf/core/vec.h"
#include "sf/render/renderer.h"

namespace sf {

struct Placement {
    Vec2 position;          // scene pixel receiving the object's bottom-center
    double size = 0;        // object height in scene pixels
    double elevation = 0;   // render-view elevation in degrees
    void validate(int scene_width, int scene_height) const;
};

inline constexpr double kDefaultShadowThreshold = 0.8;

struct ShadowMatte {
    Image opacity; // H x W x 1
};

// Floor intensity below `threshold` times the brightest covered floor pixel is
// shadow, the rest is the lit reference. Shadow pixels get
// 1 - intensity / mean(lit intensity), clamped, weighted by floor coverage and
// rounded to multiples of 2^-24.
ShadowMatte extract_shadow_matte(const Image &floor_radiance, const Image *floor_alpha = nullptr,
                                 double threshold = kDefaultShadowThreshold);

// Composites in linear RGB: the scene is darkened by the matte, then the
// premultiplied object layer goes over it. Pixels untouched by either layer
// are copied from `scene_srgb` unchanged; so is everything when the render has
// no coverage.
Image composite(const Image &scene_srgb, const RenderOutput &object, const ShadowMatte &matte,
                const Placement &placement);

// Same blend with a linear scene and no transfer function; every pixel of the
// footprint is rewritten.
Image composite_linear(const Image &scene_linear, const RenderOutput &object, const ShadowMatte &matte,
                       const Placement &placement);

// Adjoint of composite_linear with respect to object.radiance, the matte and
// coverage held fixed. Returns a render-shaped RGB gradient.
Image composite_linear_backward(const Image &grad_scene, const RenderOutput &object, const Placement &placement);

// Scene-sized max(object coverage, shadow opacity); the inpainting mask of a
// global view.
Image placed_coverage(int scene_width, int scene_height, const RenderOutput &object, const ShadowMatte &matte,
                      const Placement &placement);

struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // half-open
    bool empty() const { return x1 <= x0 || y1 <= y0; }
};

PixelRect alpha_bounds(const Image &alpha);

// Scene-space rectangle covered by the placed render.
PixelRect placed_bounds(const RenderOutput &object, const Placement &placement);

} // namespace sf
