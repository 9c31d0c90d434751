#pragma once

#include "sf/pipeline/checkpoint.h"
#include "sf/pipeline/guide.h"
#include "sf/texture/texture_map.h"

#include <functional>
#include <vector>

namespace sf::detail {

// Thrown by a step before it mutates state.
struct NonFiniteLoss {
    int iteration;
};

struct LoopHooks {
    std::function<Checkpoint(int done)> snapshot;
    // Performs one step (guide calls, optimizer update, step_done) and returns
    // its log record.
    std::function<StepLog(int iteration)> step;
};

// Runs iterations [start, total); returns the number of finished steps.
// Checkpoints every `control.every` steps, at `stop_after` and at the end; a
// non-finite loss saves the pre-step state and raises a numeric error.
int run_loop(int start, int total, const RunControl &control, const LoopHooks &hooks);

// Guide calls for one step; remote guides are queried concurrently. Results
// are in query order.
std::vector<GuideStep> score_views(Guide &guide, const std::vector<ViewQuery> &queries);

// Restores a checkpoint after checking it belongs to this run.
Checkpoint resume_checkpoint(const RunControl &control, RunKind kind, std::uint64_t seed, int total);

bool all_finite(const Image &img);

// 1x1 map at the bound midpoints. Used as the lobe-selection and MIS
// material so every render stays linear in the texels for a fixed seed.
TextureMap sampling_material(const ChannelBounds &bounds);

} // namespace sf::detail
