#include "run_loop.h"

#include "sf/core/error.h"

#include <cmath>
#include <filesystem>
#include <future>

namespace sf::detail {

int run_loop(int start, int total, const RunControl &control, const LoopHooks &hooks) {
    const bool saving = !control.checkpoint.empty();
    int done = start;
    while (done < total) {
        if (control.stop_after >= 0 && done >= control.stop_after)
            break;
        StepLog log;
        try {
            log = hooks.step(done);
        } catch (const NonFiniteLoss &e) {
            if (saving)
                save_checkpoint(control.checkpoint, hooks.snapshot(done));
            fail(ErrorKind::Numeric, "non-finite loss at iteration " + std::to_string(e.iteration) +
                                         (saving ? "; state saved to " + control.checkpoint.string() : ""));
        }
        ++done;
        if (control.on_step)
            control.on_step(log);
        if (saving && control.every > 0 && done % control.every == 0 && done < total)
            save_checkpoint(control.checkpoint, hooks.snapshot(done));
    }
    if (saving)
        save_checkpoint(control.checkpoint, hooks.snapshot(done));
    return done;
}

std::vector<GuideStep> score_views(Guide &guide, const std::vector<ViewQuery> &queries) {
    std::vector<GuideStep> out(queries.size());
    if (!guide.remote()) {
        for (std::size_t i = 0; i < queries.size(); ++i)
            out[i] = guide.gradient(queries[i]);
        return out;
    }
    std::vector<std::future<GuideStep>> pending;
    pending.reserve(queries.size());
    for (const ViewQuery &q : queries)
        pending.push_back(std::async(std::launch::async, [&guide, &q] { return guide.gradient(q); }));
    // Every future is drained before the first error is rethrown.
    std::exception_ptr first;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        try {
            out[i] = pending[i].get();
        } catch (...) {
            if (!first)
                first = std::current_exception();
        }
    }
    if (first)
        std::rethrow_exception(first);
    return out;
}

Checkpoint resume_checkpoint(const RunControl &control, RunKind kind, std::uint64_t seed, int total) {
    Checkpoint ck = load_checkpoint(control.checkpoint);
    require(ck.kind == kind, "checkpoint belongs to " + std::string(to_string(ck.kind)) + ", not " +
                                 std::string(to_string(kind)));
    require(ck.seed == seed, "checkpoint seed differs from the run seed");
    require(ck.total == static_cast<std::uint64_t>(total), "checkpoint iteration count differs from the schedule");
    require(ck.iteration <= ck.total, "checkpoint iteration beyond the schedule");
    return ck;
}

bool all_finite(const Image &img) {
    for (double v : img.data())
        if (!std::isfinite(v))
            return false;
    return true;
}

TextureMap sampling_material(const ChannelBounds &bounds) {
    PbrSample mid{};
    for (int c = 0; c < kPbrChannels; ++c)
        mid[c] = bounds.mid(c);
    return TextureMap::constant(1, 1, mid, bounds);
}

} // namespace sf::detail
