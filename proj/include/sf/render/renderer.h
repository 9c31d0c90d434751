#pragma once

#include "sf/core/image.h"
#include "sf/core/pbr.h"
#include "sf/geometry/camera.h"
#include "sf/geometry/mesh.h"
#include "sf/lighting/environment.h"
#include "sf/render/env_sampler.h"
#include "sf/render/scene_geometry.h"
#include "sf/texture/neural_texture.h"
#include "sf/texture/texture_map.h"

#include <cstdint>
#include <vector>

namespace sf {

struct RenderSettings {
    int spp = 128;
    int resolution = 0; // 0: camera resolution
    std::uint64_t seed = 0;
    bool include_floor = false;

    void validate() const;
};

struct ObjectMaterial {
    const TextureMap *texture = nullptr; // null: `constant` everywhere
    PbrSample constant{0.5, 0.5, 0.5, 0.5, 0.0};
    bool specular = true;
    // Material that drives lobe selection and MIS weights. Null means the
    // shaded material. Holding it fixed makes the estimator linear in the
    // texel values for a fixed seed.
    const TextureMap *sampling_texture = nullptr;
};

struct RenderScene {
    const SceneGeometry *geometry = nullptr;
    std::vector<ObjectMaterial> materials; // one per geometry instance
    const EnvironmentMap *env = nullptr;
    // Importance sampler for `env`. Null builds one from the current radiance.
    const EnvSampler *sampler = nullptr;
};

struct RenderOutput {
    Image radiance;        // H x W x 3, linear
    Image alpha;           // H x W x 1, fraction of samples hitting an object
    Image normal;          // H x W x 3, shading normal at the pixel-center hit
    Image view_dot_normal; // H x W x 1
    Image floor_radiance;  // H x W x 3, floor-only pass (empty without floor)
    Image floor_alpha;     // H x W x 1
};

// Direct lighting with multiple importance sampling (environment and BRDF
// draws, power heuristic) and shadow rays. The floor is a white Lambertian
// plane at the lowest object point; it occludes in the object pass and is the
// only visible surface in the floor pass.
RenderOutput render(const RenderScene &scene, const Camera &camera, const RenderSettings &settings);

// Radiance split by environment region. For a fixed seed and sampler the
// render under scales s equals ambient + s.far * far + s.near * near, so light
// scales can be optimized without re-tracing.
struct LightBasis {
    RenderOutput ambient; // bins outside both regions; carries alpha and aux buffers
    Image far, near;      // unit-scale region contributions
    Image floor_far, floor_near;

    RenderOutput combine(const LightScales &scales) const;
};

// Needs an LDR environment. The sampler (given or built from the current
// radiance) is shared by the three passes.
LightBasis render_light_basis(const RenderScene &scene, const Camera &camera, const RenderSettings &settings);

struct RenderGradients {
    std::vector<Image> texture; // per object: dL/dtexel, texture-shaped, empty without a texture
    LightScales scales{0.0, 0.0};
};

// L = sum over pixels of <upstream_radiance, radiance> + <upstream_floor,
// floor_radiance>. Replays the exact samples of render(); visibility and the
// sampling guides are held constant.
RenderGradients render_gradients(const RenderScene &scene, const Camera &camera, const RenderSettings &settings,
                                 const Image &upstream_radiance, const Image *upstream_floor = nullptr);

// Single textured mesh convenience layer: bakes `tex` over `uvpos`.
struct TexturedObject {
    const TriangleMesh *mesh = nullptr;
    const NeuralTexture *texture = nullptr;
    const UvPositionMap *uvpos = nullptr;
    bool specular = true;
};

RenderOutput render(const TexturedObject &object, const EnvironmentMap &env, const Camera &camera,
                    const RenderSettings &settings, const TextureMap *sampling_map = nullptr,
                    const EnvSampler *sampler = nullptr);

struct TexturedGradients {
    TextureGradient texture;
    LightScales scales{0.0, 0.0};
};

// `sampling_map` and `sampler` pin the sampling guides (see ObjectMaterial);
// null uses the current texture and environment.
TexturedGradients render_with_gradients(const TexturedObject &object, const EnvironmentMap &env, const Camera &camera,
                                        const RenderSettings &settings, const Image &upstream_radiance,
                                        const Image *upstream_floor = nullptr, const TextureMap *sampling_map = nullptr,
                                        const EnvSampler *sampler = nullptr);

} // namespace sf
