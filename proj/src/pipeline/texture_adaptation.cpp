#include "sf/pipeline/pipeline.h"

#include "run_loop.h"

#include "sf/core/adam.h"
#include "sf/core/error.h"
#include "sf/guidance/prompt.h"
#include "sf/render/renderer.h"

#include <cmath>
#include <map>
#include <optional>

namespace sf {

namespace {

void add_into(Image &dst, const Image &src) {
    if (dst.empty()) {
        dst = src;
        return;
    }
    for (std::size_t i = 0; i < dst.data().size(); ++i)
        dst.data()[i] += src.data()[i];
}

void scale_image(Image &img, double s) {
    for (double &v : img.data())
        v *= s;
}

std::string view_prompt(const std::string &text, std::optional<double> azimuth) {
    if (text.empty())
        return {};
    PromptRequest r;
    r.object_text = text;
    if (azimuth)
        r.azimuth_deg = *azimuth > 180 ? *azimuth - 360 : *azimuth;
    return build_prompt(r);
}

} // namespace

TextureRunResult run_texture_adaptation(const TextureAdaptationInputs &in, const TextureConfig &config,
                                        const GuidanceConfig &guidance, Guide &guide, std::uint64_t seed,
                                        const RunControl &control) {
    require(in.mesh && in.uvpos, "texture adaptation needs a mesh and its UV position map");
    require(in.texture.param_count() > 0, "texture adaptation needs an initialized neural texture");
    const ScheduleConfig &sched = config.schedule;
    sched.validate();
    const int total = sched.total_iterations;

    const EnvironmentMap ambient = EnvironmentMap::constant(16, 32, 1.0);
    const EnvironmentMap &env = in.env ? *in.env : ambient;
    const EnvSampler sampler(env);
    const TextureMap sampling_map = detail::sampling_material(in.texture.bounds());
    const SceneGeometry geo({{in.mesh, {}}}, false);
    const LightScales light = env.kind() == MapKind::Ldr ? env.scales() : LightScales{1.0, 1.0};

    CameraSamplingConfig cc = config.cameras;
    std::vector<Camera> pool = sample_cameras(cc, seed);
    auto view_settings = [&](int v, const StageConfig &stage) {
        RenderSettings rs;
        rs.spp = stage.spp;
        rs.resolution = stage.resolution;
        rs.seed = SampleStream::mix(seed + 1 + static_cast<std::uint64_t>(v));
        return rs;
    };

    const bool global = guide.remote() && in.scene.scene_linear;
    const bool with_reference = guide.remote() && guidance.injection.enabled;
    if (global)
        in.scene.placement.validate(in.scene.scene_linear->width(), in.scene.scene_linear->height());
    const SceneGeometry floor_geo({{in.mesh, {}}}, true);

    // Reference renders of the initial texture, per pool view.
    const TextureMap initial_map = with_reference ? bake_texture_map(in.texture, *in.uvpos) : TextureMap{};
    std::map<std::pair<int, int>, Image> references;

    NeuralTexture tex = in.texture;
    Adam adam(tex.param_count());
    int start = 0;
    if (control.resume && !control.checkpoint.empty() && std::filesystem::exists(control.checkpoint)) {
        Checkpoint ck = detail::resume_checkpoint(control, RunKind::TextureAdaptation, seed, total);
        require(ck.texture && ck.texture->param_count() == tex.param_count() && ck.texture->config() == tex.config(),
                "checkpoint texture does not match the run's texture");
        require(ck.texture_adam.m.size() == tex.param_count(), "checkpoint texture optimizer state has the wrong size");
        tex = std::move(*ck.texture);
        adam.restore(std::move(ck.texture_adam.m), std::move(ck.texture_adam.v), ck.texture_adam.t);
        start = static_cast<int>(ck.iteration);
    }

    TextureRunResult result;
    detail::LoopHooks hooks;
    hooks.snapshot = [&](int done) {
        Checkpoint ck;
        ck.kind = RunKind::TextureAdaptation;
        ck.iteration = done;
        ck.total = total;
        ck.seed = seed;
        ck.scales = light;
        ck.texture_adam = {adam.first_moment(), adam.second_moment(), adam.steps()};
        ck.texture = tex;
        return ck;
    };
    hooks.step = [&](int it) {
        Rng rng = step_rng(seed, it);
        const StageConfig &stage = sched.stages[sched.stage_index(it)];
        const auto [t_min, t_max] = sched.t_range(it);
        const double lambda = sched.lambda(it);
        const TextureMap map = bake_texture_map(tex, *in.uvpos);
        ObjectMaterial mat;
        mat.texture = &map;
        mat.specular = in.specular;
        mat.sampling_texture = &sampling_map;
        const RenderScene scene{&geo, {mat}, &env, &sampler};

        auto base_context = [&]() {
            GuidanceContext ctx;
            ctx.negative_prompt = guidance.negative_prompt;
            ctx.t_min = t_min;
            ctx.t_max = t_max;
            ctx.cfg_scale = guidance.cfg_scale;
            ctx.lambda = lambda;
            ctx.injection = guidance.injection;
            ctx.class_embedding = {light.far, light.near};
            return ctx;
        };

        const int workers = sched.workers;
        std::vector<ViewQuery> queries;
        std::vector<double> weights;
        std::vector<PixelRect> crops;
        for (int k = 0; k < workers; ++k) {
            const int v = static_cast<int>(rng.index(pool.size()));
            const Vec3 bg = pick_background(rng, sched.background);
            ViewQuery q;
            q.iteration = it;
            q.worker = k;
            q.role = ViewRole::Object;
            q.view = v;
            q.camera = pool[v];
            q.camera.resolution = stage.resolution;
            q.settings = view_settings(v, stage);
            q.env = &env;
            q.sampler = &sampler;
            q.sampling_map = &sampling_map;
            q.background = bg;
            const RenderOutput out = render(scene, q.camera, q.settings);
            q.image = over_background(out.radiance, out.alpha, bg);
            q.alpha = out.alpha;
            q.view_dot_normal = out.view_dot_normal;
            q.context = base_context();
            q.context.prompt = view_prompt(guidance.prompt, q.camera.azimuth_deg);
            q.context.solid_background = bg;
            const auto ext = q.camera.extrinsic();
            q.context.class_embedding.insert(q.context.class_embedding.end(), ext.begin(), ext.end());
            if (with_reference) {
                const std::pair<int, int> key{v, stage.resolution};
                auto ref = references.find(key);
                if (ref == references.end()) {
                    ObjectMaterial m0 = mat;
                    m0.texture = &initial_map;
                    const RenderOutput r0 = render({&geo, {m0}, &env, &sampler}, q.camera, q.settings);
                    ref = references.emplace(key, r0.radiance).first;
                }
                Image reference = ref->second;
                // The reference shares the view's background.
                reference = over_background(reference, out.alpha, bg);
                q.reference = std::move(reference);
            }
            queries.push_back(std::move(q));
            weights.push_back(sched.loss_weights[k] * (global ? 0.5 : 1.0));
            crops.push_back({});
        }

        std::optional<RenderOutput> placed;
        Camera placed_cam;
        RenderSettings placed_settings;
        if (global) {
            const Image &scene_img = *in.scene.scene_linear;
            placed_cam = placement_camera(in.scene.placement, 1.65, stage.resolution);
            placed_settings.spp = stage.spp;
            placed_settings.resolution = stage.resolution;
            placed_settings.seed = SampleStream::mix(seed ^ 0x91ace91ace91aceULL);
            placed_settings.include_floor = true;
            const RenderScene floor_scene{&floor_geo, {mat}, &env, &sampler};
            placed = render(floor_scene, placed_cam, placed_settings);
            ShadowMatte matte;
            try {
                matte = extract_shadow_matte(placed->floor_radiance, &placed->floor_alpha);
            } catch (const Error &) {
                // No lit floor: the view carries no shadow.
            }
            const Image composed = composite_linear(scene_img, *placed, matte, in.scene.placement);
            const Image coverage =
                placed_coverage(scene_img.width(), scene_img.height(), *placed, matte, in.scene.placement);
            const PixelRect box = alpha_bounds(coverage);
            for (int k = 0; k < workers; ++k) {
                const PixelRect crop = global_crop(k % sched.global_crops.count, scene_img.width(), scene_img.height(),
                                                   box, sched.global_crops, rng);
                ViewQuery q;
                q.iteration = it;
                q.worker = workers + k;
                q.role = ViewRole::Global;
                q.camera = placed_cam;
                q.settings = placed_settings;
                q.env = &env;
                q.sampler = &sampler;
                q.sampling_map = &sampling_map;
                q.image = crop_image(composed, crop);
                q.alpha = crop_image(coverage, crop);
                q.mask = q.alpha;
                q.context = base_context();
                q.context.prompt = view_prompt(guidance.prompt, std::nullopt);
                q.context.mode = GuidanceMode::GlobalInpaint;
                q.context.injection.enabled = false;
                const auto ext = placed_cam.extrinsic();
                q.context.class_embedding.insert(q.context.class_embedding.end(), ext.begin(), ext.end());
                queries.push_back(std::move(q));
                weights.push_back(sched.loss_weights[k] * 0.5);
                crops.push_back(crop);
            }
        }

        const std::vector<GuideStep> steps = detail::score_views(guide, queries);
        double loss = 0;
        for (std::size_t k = 0; k < queries.size(); ++k) {
            require(steps[k].gradient.same_shape(queries[k].image), "gradient shape mismatch: guide returned " +
                                                                        std::to_string(steps[k].gradient.width()) + "x" +
                                                                        std::to_string(steps[k].gradient.height()));
            if (!detail::all_finite(steps[k].gradient) || !std::isfinite(steps[k].loss))
                throw detail::NonFiniteLoss{it};
            loss += weights[k] * steps[k].loss;
        }
        if (!std::isfinite(loss))
            throw detail::NonFiniteLoss{it};

        // Texel-space gradient summed in query order, then one pass through the bake.
        Image grid_grad;
        for (std::size_t k = 0; k < queries.size(); ++k) {
            Image g = steps[k].gradient;
            const ViewQuery &q = queries[k];
            RenderGradients rg;
            if (q.role == ViewRole::Global) {
                const Image &scene_img = *in.scene.scene_linear;
                g = composite_linear_backward(uncrop_image(g, crops[k], scene_img.width(), scene_img.height()),
                                              *placed, in.scene.placement);
                scale_image(g, weights[k]);
                rg = render_gradients({&floor_geo, {mat}, &env, &sampler}, q.camera, q.settings, g);
            } else {
                if (guide.remote())
                    apply_pixel_weight(g, grazing_weight(q.view_dot_normal));
                scale_image(g, weights[k]);
                rg = render_gradients(scene, q.camera, q.settings, g);
            }
            add_into(grid_grad, rg.texture[0]);
        }
        TextureGradient grad;
        grad.reset(tex.param_count());
        bake_backward(tex, *in.uvpos, grid_grad, grad);
        const double lr = sched.learning_rate(it);
        adam.step_sparse(tex.params(), grad.values, grad.touched, lr);
        guide.step_done(it);
        result.loss_history.push_back(loss);
        result.final_loss = loss;

        StepLog log;
        log.kind = RunKind::TextureAdaptation;
        log.iteration = it;
        log.total = total;
        log.loss = loss;
        log.lambda = lambda;
        log.t_min = t_min;
        log.t_max = t_max;
        log.lr = lr;
        log.weights = weights;
        return log;
    };

    result.iterations_done = detail::run_loop(start, total, control, hooks);
    result.texture = std::move(tex);
    return result;
}

} // namespace sf
