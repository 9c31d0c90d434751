#pragma once

#include "sf/compositor/compositor.h"
#include "sf/core/rng.h"
#include "sf/geometry/mesh.h"
#include "sf/lighting/environment.h"
#include "sf/pipeline/checkpoint.h"
#include "sf/pipeline/config.h"
#include "sf/pipeline/guide.h"
#include "sf/texture/neural_texture.h"
#include "sf/texture/texture_map.h"

#include <cstdint>
#include <string>
#include <vector>

namespace sf {

// Object being inserted. Without a neural texture the constant material is
// used everywhere.
struct ObjectAsset {
    const TriangleMesh *mesh = nullptr;
    const UvPositionMap *uvpos = nullptr;
    const NeuralTexture *texture = nullptr;
    PbrSample constant{0.5, 0.5, 0.5, 0.5, 0.0};
    bool specular = true;
};

// Photograph receiving the object. Without an image no global views are
// produced.
struct SceneContext {
    const Image *scene_linear = nullptr;
    Placement placement;
};

// Random stream of one optimizer step.
Rng step_rng(std::uint64_t seed, int iteration);

// Default color, or with the configured probability a uniform random color.
Vec3 pick_background(Rng &rng, const BackgroundConfig &config);

// Crop 0 is the whole scene. Other crops are squares (clipped to the scene)
// with side scale * max(object width, height), scale uniform in the configured
// range, placed uniformly among the positions that contain the object box.
PixelRect global_crop(int index, int scene_width, int scene_height, PixelRect object, const CropConfig &config,
                      Rng &rng);

Image crop_image(const Image &img, const PixelRect &r);
// Adjoint of crop_image: the crop pasted into a zero image of the full size.
Image uncrop_image(const Image &crop, const PixelRect &r, int width, int height);

// Class embedding of the default ambient light (c_x, c_y, c_r, c_v, b_v).
std::vector<double> ambient_light_embedding();

// Placement render camera: azimuth 0 at the placement elevation, framed with
// the light-estimation FOV multiplier.
Camera placement_camera(const Placement &placement, double fov_multiplier, int resolution);

struct LightEstimationInputs {
    const EnvironmentMap *ldr = nullptr; // LDR map with regions
    ObjectAsset object;
    SceneContext scene;
    std::string object_prompt;
    LightScales init{1.0, 1.0};
};

struct LightEstimationResult {
    LightScales scales;
    EnvironmentMap hdr;
    bool dark = false;
    std::string object_prompt; // as sent to the guide
    double final_loss = 0;
    int iterations_done = 0;
};

// Adam on (s_far, s_near) with three object workers and one apparatus worker.
// Renders are linear in the scales for a fixed seed, so each pool view is
// traced once into a light basis and recombined every step.
LightEstimationResult run_light_estimation(const LightEstimationInputs &inputs, const LightConfig &config,
                                           const GuidanceConfig &guidance, Guide &guide, std::uint64_t seed,
                                           const RunControl &control = {});

struct TextureAdaptationInputs {
    const TriangleMesh *mesh = nullptr;
    const UvPositionMap *uvpos = nullptr;
    NeuralTexture texture;                // initial parameters
    const EnvironmentMap *env = nullptr;  // null: unit ambient light
    bool specular = true;
    SceneContext scene;
    std::string prompt;
};

struct TextureRunResult {
    NeuralTexture texture;
    double final_loss = 0;
    int iterations_done = 0;
    std::vector<double> loss_history;
};

// Local views from a fixed camera pool (one render seed per view) and, for
// remote guides with a scene, global views through the placement camera.
TextureRunResult run_texture_adaptation(const TextureAdaptationInputs &inputs, const TextureConfig &config,
                                        const GuidanceConfig &guidance, Guide &guide,
                                        std::uint64_t seed, const RunControl &control = {});

struct GenerationInputs {
    const TriangleMesh *mesh = nullptr;
    const UvPositionMap *uvpos = nullptr;
    std::string prompt;
    bool specular = true;
    NeuralTextureConfig texture_config;
};

// Coarse-to-fine schedule from a fresh texture; every view draws its camera
// and, with probability sg_probability, a spherical-Gaussian environment.
TextureRunResult run_scene_agnostic_generation(const GenerationInputs &inputs, const GenerationConfig &config,
                                               const GuidanceConfig &guidance, Guide &guide, std::uint64_t seed,
                                               const RunControl &control = {});

} // namespace sf
