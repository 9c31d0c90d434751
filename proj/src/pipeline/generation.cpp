#include "sf/pipeline/pipeline.h"

#include "run_loop.h"

#include "sf/core/adam.h"
#include "sf/core/error.h"
#include "sf/guidance/prompt.h"
#include "sf/lighting/light_model.h"
#include "sf/render/renderer.h"

#include <cmath>
#include <memory>

namespace sf {

namespace {

void scale_image(Image &img, double s) {
    for (double &v : img.data())
        v *= s;
}

struct WorkerLight {
    std::unique_ptr<EnvironmentMap> env;
    std::unique_ptr<EnvSampler> sampler;
    std::vector<double> embedding;
    bool sg = false;
};

} // namespace

TextureRunResult run_scene_agnostic_generation(const GenerationInputs &in, const GenerationConfig &config,
                                               const GuidanceConfig &guidance, Guide &guide, std::uint64_t seed,
                                               const RunControl &control) {
    require(in.mesh && in.uvpos, "generation needs a mesh and its UV position map");
    const ScheduleConfig &sched = config.schedule;
    sched.validate();
    require(config.sg_probability >= 0 && config.sg_probability <= 1, "sg probability must lie in [0, 1]");
    require(!config.cameras.elevations.empty(), "generation needs at least one elevation");
    const int total = sched.total_iterations;

    NeuralTexture tex(in.texture_config, seed);
    const TextureMap sampling_map = detail::sampling_material(tex.bounds());
    const SceneGeometry geo({{in.mesh, {}}}, false);
    const SphericalGaussianParams ambient_params{0.25, 0.0, 0.0, 1.0, 1.0};
    const EnvironmentMap ambient = synthesize_sg_envmap(ambient_params, config.envmap_height, config.envmap_width);
    const EnvSampler ambient_sampler(ambient);

    Adam adam(tex.param_count());
    int start = 0;
    if (control.resume && !control.checkpoint.empty() && std::filesystem::exists(control.checkpoint)) {
        Checkpoint ck = detail::resume_checkpoint(control, RunKind::Generation, seed, total);
        require(ck.texture && ck.texture->config() == tex.config(), "checkpoint texture does not match the run's texture");
        require(ck.texture_adam.m.size() == tex.param_count(), "checkpoint texture optimizer state has the wrong size");
        tex = std::move(*ck.texture);
        adam.restore(std::move(ck.texture_adam.m), std::move(ck.texture_adam.v), ck.texture_adam.t);
        start = static_cast<int>(ck.iteration);
    }

    TextureRunResult result;
    detail::LoopHooks hooks;
    hooks.snapshot = [&](int done) {
        Checkpoint ck;
        ck.kind = RunKind::Generation;
        ck.iteration = done;
        ck.total = total;
        ck.seed = seed;
        ck.texture_adam = {adam.first_moment(), adam.second_moment(), adam.steps()};
        ck.texture = tex;
        return ck;
    };
    hooks.step = [&](int it) {
        Rng rng = step_rng(seed, it);
        const int stage_id = sched.stage_index(it);
        const StageConfig &stage = sched.stages[stage_id];
        const auto [t_min, t_max] = sched.t_range(it);
        const double lambda = sched.lambda(it);
        const TextureMap map = bake_texture_map(tex, *in.uvpos);
        ObjectMaterial mat;
        mat.texture = &map;
        mat.specular = in.specular;
        mat.sampling_texture = &sampling_map;

        const int workers = sched.workers;
        std::vector<ViewQuery> queries(workers);
        std::vector<WorkerLight> lights(workers);
        std::string env_tags;
        for (int k = 0; k < workers; ++k) {
            // Fixed number of draws per worker keeps streams aligned whatever
            // the branch outcomes.
            Camera cam;
            cam.azimuth_deg = rng.uniform(0.0, 360.0);
            cam.elevation_deg = config.cameras.elevations[rng.index(config.cameras.elevations.size())];
            cam.fov_multiplier = rng.uniform(config.cameras.fov_multiplier_min, config.cameras.fov_multiplier_max);
            cam.distance = config.cameras.distance;
            cam.fov_form = config.cameras.fov_form;
            cam.resolution = stage.resolution;
            const double u_sg = rng.uniform();
            SphericalGaussianParams sg;
            sg.c_x = rng.uniform();
            sg.c_y = rng.uniform(0.0, config.sg_c_y_max);
            sg.c_r = config.sg_c_r;
            sg.c_v = rng.uniform(config.sg_c_v_min, config.sg_c_v_max);
            sg.b_v = config.sg_b_v;
            const Vec3 bg = pick_background(rng, sched.background);
            const std::uint64_t render_seed = rng.next_u64();

            WorkerLight &wl = lights[k];
            wl.sg = u_sg < config.sg_probability;
            if (wl.sg) {
                wl.env = std::make_unique<EnvironmentMap>(
                    synthesize_sg_envmap(sg, config.envmap_height, config.envmap_width));
                wl.sampler = std::make_unique<EnvSampler>(*wl.env);
                wl.embedding = sg.embedding();
            } else {
                wl.embedding = ambient_light_embedding();
            }
            env_tags += wl.sg ? 's' : 'a';

            ViewQuery &q = queries[k];
            q.iteration = it;
            q.worker = k;
            q.role = ViewRole::Object;
            q.camera = cam;
            q.settings.spp = stage.spp;
            q.settings.resolution = stage.resolution;
            q.settings.seed = render_seed;
            q.env = wl.sg ? wl.env.get() : &ambient;
            q.sampler = wl.sg ? wl.sampler.get() : &ambient_sampler;
            q.sampling_map = &sampling_map;
            q.background = bg;
            const RenderOutput out = render({&geo, {mat}, q.env, q.sampler}, cam, q.settings);
            q.image = over_background(out.radiance, out.alpha, bg);
            q.alpha = out.alpha;
            q.view_dot_normal = out.view_dot_normal;
            GuidanceContext &ctx = q.context;
            if (!guidance.prompt.empty()) {
                PromptRequest pr;
                pr.object_text = guidance.prompt;
                pr.azimuth_deg = cam.azimuth_deg > 180 ? cam.azimuth_deg - 360 : cam.azimuth_deg;
                ctx.prompt = build_prompt(pr);
            }
            ctx.negative_prompt = guidance.negative_prompt;
            ctx.t_min = t_min;
            ctx.t_max = t_max;
            ctx.cfg_scale = guidance.cfg_scale;
            ctx.lambda = lambda;
            ctx.injection.enabled = false;
            ctx.solid_background = bg;
            ctx.class_embedding = wl.embedding;
            const auto ext = cam.extrinsic();
            ctx.class_embedding.insert(ctx.class_embedding.end(), ext.begin(), ext.end());
        }

        const std::vector<GuideStep> steps = detail::score_views(guide, queries);
        double loss = 0;
        for (int k = 0; k < workers; ++k) {
            require(steps[k].gradient.same_shape(queries[k].image), "gradient shape mismatch: guide returned " +
                                                                        std::to_string(steps[k].gradient.width()) + "x" +
                                                                        std::to_string(steps[k].gradient.height()));
            if (!detail::all_finite(steps[k].gradient) || !std::isfinite(steps[k].loss))
                throw detail::NonFiniteLoss{it};
            loss += sched.loss_weights[k] * steps[k].loss;
        }
        if (!std::isfinite(loss))
            throw detail::NonFiniteLoss{it};

        Image grid_grad;
        for (int k = 0; k < workers; ++k) {
            const ViewQuery &q = queries[k];
            Image g = steps[k].gradient;
            if (guide.remote())
                apply_pixel_weight(g, grazing_weight(q.view_dot_normal));
            scale_image(g, sched.loss_weights[k]);
            const RenderGradients rg = render_gradients({&geo, {mat}, q.env, q.sampler}, q.camera, q.settings, g);
            if (grid_grad.empty())
                grid_grad = rg.texture[0];
            else
                for (std::size_t i = 0; i < grid_grad.data().size(); ++i)
                    grid_grad.data()[i] += rg.texture[0].data()[i];
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
        log.kind = RunKind::Generation;
        log.iteration = it;
        log.total = total;
        log.loss = loss;
        log.lambda = lambda;
        log.t_min = t_min;
        log.t_max = t_max;
        log.lr = lr;
        log.weights = sched.loss_weights;
        log.extra = "stage=" + std::to_string(stage_id) + " res=" + std::to_string(stage.resolution) +
                    " spp=" + std::to_string(stage.spp) + " env=" + env_tags;
        return log;
    };

    result.iterations_done = detail::run_loop(start, total, control, hooks);
    result.texture = std::move(tex);
    return result;
}

} // namespace sf
