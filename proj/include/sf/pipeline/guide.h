#pragma once

#include "sf/core/image.h"
#include "sf/geometry/camera.h"
#include "sf/guidance/provider.h"
#include "sf/guidance/score.h"
#include "sf/lighting/environment.h"
#include "sf/render/env_sampler.h"
#include "sf/render/renderer.h"
#include "sf/texture/texture_map.h"

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

namespace sf {

enum class ViewRole { Object, Apparatus, Global };
std::string_view to_string(ViewRole role);

// One rendered view handed to a guide. `image` is what the guide scores:
// the render over its solid background for local views, a crop of the
// composited scene for global views.
struct ViewQuery {
    int iteration = 0;
    int worker = 0;
    ViewRole role = ViewRole::Object;
    int view = -1; // index into the driver's camera pool, -1 when drawn fresh
    Camera camera;
    RenderSettings settings;
    const EnvironmentMap *env = nullptr;
    const EnvSampler *sampler = nullptr;
    const TextureMap *sampling_map = nullptr;
    Vec3 background{0.5, 0.5, 0.5};
    Image image;
    Image alpha;
    Image view_dot_normal;
    GuidanceContext context;
    std::optional<Image> reference;
    std::optional<Image> mask;
};

struct GuideStep {
    Image gradient; // d loss / d image
    double loss = 0;
};

class Guide {
public:
    virtual ~Guide() = default;
    virtual GuideStep gradient(const ViewQuery &query) = 0;
    // Called once after every optimizer step.
    virtual void step_done(int /*iteration*/) {}
    // Remote guides receive global views, reference renders and grazing
    // weights; the oracle only scores local views.
    virtual bool remote() const = 0;
};

// Photometric oracle: 0.5 * ||image - target||^2 against a render supplied by
// `target_fn`. The target is composed over the query's background with the
// query alpha's complement. Targets of pool views are cached per
// (role, view); those views must keep a fixed camera and seed.
class OracleGuide : public Guide {
public:
    using TargetFn = std::function<RenderOutput(const ViewQuery &)>;
    explicit OracleGuide(TargetFn target_fn) : target_fn_(std::move(target_fn)) {}

    GuideStep gradient(const ViewQuery &query) override;
    bool remote() const override { return false; }

private:
    TargetFn target_fn_;
    std::mutex mutex_;
    std::map<std::pair<int, int>, RenderOutput> cache_;
};

// Score-distillation guide backed by a ScoreProvider. The reported loss is
// 0.5 * mean squared gradient, a progress indicator only.
class RemoteGuide : public Guide {
public:
    RemoteGuide(ScoreProvider &provider, std::string run_id) : provider_(provider), run_id_(std::move(run_id)) {}

    GuideStep gradient(const ViewQuery &query) override;
    void step_done(int iteration) override;
    bool remote() const override { return true; }

    std::string request_id(int iteration, int worker) const;

private:
    ScoreProvider &provider_;
    std::string run_id_;
};

// Guide that returns zero gradients; used to check that an optimization
// without signal leaves its parameters alone.
class NullGuide : public Guide {
public:
    GuideStep gradient(const ViewQuery &query) override;
    bool remote() const override { return false; }
};

// image = radiance + (1 - alpha) * background
Image over_background(const Image &radiance, const Image &alpha, Vec3 background);

} // namespace sf
