#pragma once

#include "sf/lighting/environment.h"
#include "sf/texture/neural_texture.h"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class RunKind : std::uint32_t { LightEstimation = 1, TextureAdaptation = 2, Generation = 3 };
std::string_view to_string(RunKind kind);

struct AdamState {
    std::vector<double> m, v;
    std::uint64_t t = 0;
    bool operator==(const AdamState &) const = default;
};

// Complete optimizer state after `iteration` finished steps. Per-step random
// streams are derived from (seed, iteration), so no generator state is kept.
struct Checkpoint {
    RunKind kind = RunKind::TextureAdaptation;
    std::uint64_t iteration = 0;
    std::uint64_t total = 0;
    std::uint64_t seed = 0;
    LightScales scales;
    AdamState light_adam;
    AdamState texture_adam;
    std::optional<NeuralTexture> texture;
};

// Layout: "SFCK", u32 version, body, u32 CRC32 of everything before it.
std::string serialize_checkpoint(const Checkpoint &ck);
// Bad magic, truncation or CRC mismatch -> "checkpoint corrupt"; a different
// version is refused with the version numbers in the message.
Checkpoint deserialize_checkpoint(std::string_view bytes);

// Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ck);
Checkpoint load_checkpoint(const std::filesystem::path &path);

struct StepLog {
    RunKind kind = RunKind::TextureAdaptation;
    int iteration = 0;
    int total = 0;
    double loss = 0;
    double lambda = 1;
    int t_min = 0, t_max = 0;
    double lr = 0;
    std::vector<double> weights;
    std::string extra; // driver-specific fields, already formatted
};

std::string format_step_log(const StepLog &log);

struct RunControl {
    std::filesystem::path checkpoint; // empty: no checkpoints
    int every = 0;                    // checkpoint period in steps, 0: only at the end
    int stop_after = -1;              // stop once this many steps are done (for interruption tests)
    bool resume = false;              // continue from `checkpoint` when it exists
    std::function<void(const StepLog &)> on_step;
};

} // namespace sf
