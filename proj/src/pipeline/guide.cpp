#include "sf/pipeline/guide.h"

#include "sf/core/error.h"

namespace sf {

std::string_view to_string(ViewRole role) {
    switch (role) {
    case ViewRole::Object:
        return "object";
    case ViewRole::Apparatus:
        return "apparatus";
    case ViewRole::Global:
        return "global";
    }
    return "object";
}

Image over_background(const Image &radiance, const Image &alpha, Vec3 background) {
    require(radiance.channels() == 3 && alpha.channels() == 1 && radiance.width() == alpha.width() &&
                radiance.height() == alpha.height(),
            "render buffers disagree");
    Image out = radiance;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const double t = 1.0 - alpha.at(x, y);
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) += t * background[c];
        }
    return out;
}

namespace {

double half_squared_norm(const Image &g) {
    double s = 0;
    for (double v : g.data())
        s += v * v;
    return 0.5 * s;
}

} // namespace

GuideStep OracleGuide::gradient(const ViewQuery &query) {
    require(query.role != ViewRole::Global, "the photometric oracle scores local views only");
    const RenderOutput *target = nullptr;
    RenderOutput fresh;
    if (query.view >= 0) {
        const std::pair<int, int> key{static_cast<int>(query.role), query.view};
        std::unique_lock lock(mutex_);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            lock.unlock();
            RenderOutput r = target_fn_(query);
            lock.lock();
            it = cache_.emplace(key, std::move(r)).first;
        }
        target = &it->second;
    } else {
        fresh = target_fn_(query);
        target = &fresh;
    }
    const Image goal = over_background(target->radiance, query.alpha, query.background);
    GuideStep step;
    step.gradient = photometric_oracle(query.image, goal).gradient;
    step.loss = half_squared_norm(step.gradient);
    return step;
}

std::string RemoteGuide::request_id(int iteration, int worker) const {
    return run_id_ + "-" + std::to_string(iteration) + "-" + std::to_string(worker);
}

GuideStep RemoteGuide::gradient(const ViewQuery &query) {
    ScoreRequest req;
    req.request_id = request_id(query.iteration, query.worker);
    req.run_id = run_id_;
    req.image = query.image;
    req.context = query.context;
    req.reference_image = query.reference;
    req.inpaint_mask = query.mask;
    GradientImage g = provider_.score(req);
    GuideStep step;
    step.gradient = std::move(g.gradient);
    step.loss = half_squared_norm(step.gradient) / static_cast<double>(std::max<std::size_t>(1, step.gradient.data().size()));
    return step;
}

void RemoteGuide::step_done(int iteration) { provider_.lora_step(request_id(iteration, 0)); }

GuideStep NullGuide::gradient(const ViewQuery &query) {
    GuideStep step;
    step.gradient = Image(query.image.width(), query.image.height(), query.image.channels());
    return step;
}

} // namespace sf
