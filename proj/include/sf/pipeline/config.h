#pragma once

#include "sf/core/vec.h"
#include "sf/geometry/camera.h"
#include "sf/guidance/score.h"
#include "sf/texture/neural_texture.h"
#include "sf/texture/texture_map.h"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sf {

inline constexpr int kConfigVersion = 1;

struct StageConfig {
    double fraction = 1.0;
    int resolution = 512;
    int spp = 128;
    int t_min = 500, t_max = 990;

    bool operator==(const StageConfig &) const = default;
};

struct BackgroundConfig {
    Vec3 color{0.5, 0.5, 0.5};
    double augment_probability = 0.5; // chance of a uniformly random solid color
};

struct CropConfig {
    int count = 2; // crop 0 is the full scene
    double scale_min = 1.0, scale_max = 2.0; // crop side over the object's bounding-box side
};

struct ScheduleConfig {
    std::vector<StageConfig> stages{StageConfig{}};
    double lr = 0.001;
    double lr_end = 0.001; // linear from lr at the first step to lr_end at the last
    int total_iterations = 4000;
    int workers = 4;
    std::vector<double> loss_weights{0.25, 0.25, 0.25, 0.25}; // one per worker
    BackgroundConfig background;
    CropConfig global_crops;
    double lambda_end = 1.0;
    bool anneal_t = false; // upper noise bound shrinks linearly to t_min

    void validate() const;
    // Index of the stage owning `iteration`; stage k starts at
    // floor(total * sum of the preceding fractions).
    int stage_index(int iteration) const;
    int stage_start(int stage) const;
    double learning_rate(int iteration) const;
    double lambda(int iteration) const;
    // Noise interval used at `iteration`.
    std::pair<int, int> t_range(int iteration) const;
};

ScheduleConfig texture_adaptation_schedule();
ScheduleConfig light_estimation_schedule();
ScheduleConfig generation_schedule();

struct RenderConfig {
    int spp = 128;
    int resolution = 512;
    std::uint64_t seed = 0;
    bool include_floor = false;
    int eval_spp = 1024;
};

struct LightConfig {
    double tau_f = 0.8;
    double tau_n = 0.95;
    double tau_o = 0.9;
    double tau_d = std::numeric_limits<double>::infinity();
    int envmap_height = 256, envmap_width = 512;
    double min_region_area = 0.001;
    double fov_multiplier = 1.65;
    int object_views = 24; // camera pool for the object workers
    int sphere_views = 8;
    ScheduleConfig schedule = light_estimation_schedule();
};

struct TextureConfig {
    CameraSamplingConfig cameras; // 24 views, lambda_FOV in [1.0, 1.21]
    bool use_estimated_light = false;
    ScheduleConfig schedule = texture_adaptation_schedule();
};

// 72 views over elevations {20, 30, 45}, lambda_FOV in [0.6, 1.21].
CameraSamplingConfig generation_cameras();

struct GenerationConfig {
    CameraSamplingConfig cameras = generation_cameras();
    double sg_probability = 0.5;
    double sg_c_r = 0.08;
    double sg_c_v_min = 12.0, sg_c_v_max = 15.0;
    double sg_b_v = 0.8;
    double sg_c_y_max = 0.5;
    int envmap_height = 32, envmap_width = 64;
    ScheduleConfig schedule = generation_schedule();
};

struct FitConfig {
    FitSchedule schedule; // 1000 iterations, lr 0.02 -> 0.001
    int texture_size = 512;
};

struct ComposeConfig {
    std::optional<Vec2> position;
    double size = 0;
    double elevation = 0;
    double shadow_threshold = 0.8;
};

struct GuidanceConfig {
    std::string prompt;
    std::string negative_prompt;
    double cfg_scale = 7.5;
    InjectionSettings injection{true, 0.0, 1.0};
    double lora_lr = 1e-4; // applied by the service; recorded for the run
    std::string service_url;
};

struct RunConfig {
    int version = kConfigVersion;
    RenderConfig render;
    LightConfig light;
    TextureConfig texture;
    GenerationConfig generation;
    FitConfig fit;
    ComposeConfig compose;
    GuidanceConfig guidance;
    NeuralTextureConfig neural_texture;

    void validate() const;
};

RunConfig default_run_config();
// Keys missing from the document keep their defaults; unknown keys and a
// version other than kConfigVersion are rejected.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path &path);
std::string dump_run_config(const RunConfig &config);

} // namespace sf
