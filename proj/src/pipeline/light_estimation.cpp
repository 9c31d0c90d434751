#include "sf/pipeline/pipeline.h"

#include "run_loop.h"

#include "sf/core/adam.h"
#include "sf/core/error.h"
#include "sf/guidance/prompt.h"
#include "sf/lighting/light_model.h"
#include "sf/render/renderer.h"

#include <cmath>
#include <optional>
#include <sstream>

namespace sf {

namespace {

struct PoolView {
    Camera camera;
    RenderSettings settings;
    std::optional<LightBasis> basis;
};

double dot(const Image &a, const Image &b) {
    double s = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        s += a.data()[i] * b.data()[i];
    return s;
}

std::vector<PoolView> make_pool(int count, double elevation, double fov_multiplier, const StageConfig &stage,
                                std::uint64_t seed) {
    CameraSamplingConfig cc;
    cc.count = count;
    cc.elevations = {elevation};
    cc.fov_multiplier_min = cc.fov_multiplier_max = fov_multiplier;
    cc.resolution = stage.resolution;
    std::vector<PoolView> pool;
    std::uint64_t v = 0;
    for (const Camera &cam : sample_cameras(cc, seed)) {
        RenderSettings rs;
        rs.spp = stage.spp;
        rs.resolution = stage.resolution;
        rs.seed = SampleStream::mix(seed + ++v);
        pool.push_back({cam, rs, std::nullopt});
    }
    return pool;
}

std::string direct_prompt(PromptKind kind, const std::string &text, bool dark) {
    if (kind == PromptKind::Object && text.empty())
        return {};
    PromptRequest r;
    r.kind = kind;
    r.object_text = text;
    r.dark = dark;
    return build_prompt(r);
}

// Placement view of one scene: basis with the floor pass for compositing.
struct PlacedView {
    Camera camera;
    RenderSettings settings;
    LightBasis basis;
};

} // namespace

LightEstimationResult run_light_estimation(const LightEstimationInputs &in, const LightConfig &config,
                                           const GuidanceConfig &guidance, Guide &guide, std::uint64_t seed,
                                           const RunControl &control) {
    require(in.ldr && in.ldr->kind() == MapKind::Ldr, "light estimation needs an LDR environment map");
    require(in.object.mesh, "light estimation needs an object mesh");
    require(!in.object.texture || in.object.uvpos, "a neural texture needs its UV position map");
    const ScheduleConfig &sched = config.schedule;
    sched.validate();
    require(sched.stages.size() == 1, "light estimation uses a single stage");
    require(sched.loss_weights.size() == 4, "light estimation uses three object workers and one sphere worker");
    require(in.init.far >= 0 && in.init.near >= 0, "initial light scales must be non-negative");
    const StageConfig &stage = sched.stages[0];
    const Placement &placement = in.scene.placement;

    TextureMap baked;
    ObjectMaterial object_mat;
    object_mat.specular = in.object.specular;
    object_mat.constant = in.object.constant;
    if (in.object.texture) {
        baked = bake_texture_map(*in.object.texture, *in.object.uvpos);
        object_mat.texture = &baked;
    }
    const ApparatusScene apparatus = build_apparatus_scene(*in.object.mesh);
    ObjectMaterial sphere_mat;
    sphere_mat.constant = apparatus.material;
    sphere_mat.specular = apparatus.specular;

    EnvironmentMap ldr = *in.ldr;
    ldr.set_scales(in.init);
    const EnvSampler sampler(ldr);
    const SceneGeometry object_geo({{in.object.mesh, {}}}, false);
    const SceneGeometry sphere_geo({{&apparatus.sphere, {}}}, false);
    const RenderScene object_scene{&object_geo, {object_mat}, &ldr, &sampler};
    const RenderScene sphere_scene{&sphere_geo, {sphere_mat}, &ldr, &sampler};

    std::vector<PoolView> object_pool =
        make_pool(config.object_views, placement.elevation, config.fov_multiplier, stage, seed);
    std::vector<PoolView> sphere_pool =
        make_pool(config.sphere_views, placement.elevation, config.fov_multiplier, stage, seed ^ 0xa5a5a5a5a5a5a5a5ULL);
    auto basis_of = [&](PoolView &v, const RenderScene &scene) -> const LightBasis & {
        if (!v.basis)
            v.basis = render_light_basis(scene, v.camera, v.settings);
        return *v.basis;
    };

    const bool global = guide.remote() && in.scene.scene_linear;
    std::optional<PlacedView> placed_object, placed_sphere;
    if (global) {
        const Image &scene = *in.scene.scene_linear;
        placement.validate(scene.width(), scene.height());
        RenderSettings rs;
        rs.spp = stage.spp;
        rs.resolution = stage.resolution;
        rs.seed = SampleStream::mix(seed ^ 0x91ace91ace91aceULL);
        rs.include_floor = true;
        const Camera cam = placement_camera(placement, config.fov_multiplier, stage.resolution);
        const SceneGeometry object_floor({{in.object.mesh, {}}}, true);
        const SceneGeometry sphere_floor({{&apparatus.sphere, {}}}, true);
        placed_object = PlacedView{cam, rs, render_light_basis({&object_floor, {object_mat}, &ldr, &sampler}, cam, rs)};
        placed_sphere = PlacedView{cam, rs, render_light_basis({&sphere_floor, {sphere_mat}, &ldr, &sampler}, cam, rs)};
    }

    const EnvironmentMap hdr0 = apply_light_scales(ldr, ldr.regions(), in.init);
    const RegionIntensityMeans means = region_intensity_means(hdr0);
    LightEstimationResult result;
    result.dark = dark_predicate(means.background, means.lights);
    result.object_prompt = direct_prompt(PromptKind::Object, in.object_prompt, result.dark);
    const std::string sphere_prompt = direct_prompt(PromptKind::Apparatus, "", result.dark);

    LightScales scales = in.init;
    Adam adam(2);
    int start = 0;
    if (control.resume && !control.checkpoint.empty() && std::filesystem::exists(control.checkpoint)) {
        const Checkpoint ck = detail::resume_checkpoint(control, RunKind::LightEstimation, seed, sched.total_iterations);
        scales = ck.scales;
        require(ck.light_adam.m.size() == 2, "checkpoint light optimizer state has the wrong size");
        adam.restore(ck.light_adam.m, ck.light_adam.v, ck.light_adam.t);
        start = static_cast<int>(ck.iteration);
    }
    double last_loss = 0;

    detail::LoopHooks hooks;
    hooks.snapshot = [&](int done) {
        Checkpoint ck;
        ck.kind = RunKind::LightEstimation;
        ck.iteration = done;
        ck.total = sched.total_iterations;
        ck.seed = seed;
        ck.scales = scales;
        ck.light_adam = {adam.first_moment(), adam.second_moment(), adam.steps()};
        return ck;
    };
    hooks.step = [&](int it) {
        Rng rng = step_rng(seed, it);
        const auto [t_min, t_max] = sched.t_range(it);
        const double lambda = sched.lambda(it);
        const int workers = 4;
        std::vector<ViewQuery> queries(workers);
        std::vector<const LightBasis *> bases(workers);
        std::vector<RenderOutput> placed_out(workers);
        std::vector<PixelRect> crops(workers);
        for (int k = 0; k < workers; ++k) {
            const bool sphere = k == workers - 1;
            ViewQuery &q = queries[k];
            q.iteration = it;
            q.worker = k;
            q.env = &ldr;
            q.sampler = &sampler;
            q.background = sched.background.color;
            GuidanceContext &ctx = q.context;
            ctx.prompt = sphere ? sphere_prompt : result.object_prompt;
            ctx.negative_prompt = guidance.negative_prompt;
            ctx.t_min = t_min;
            ctx.t_max = t_max;
            ctx.cfg_scale = guidance.cfg_scale;
            ctx.lambda = lambda;
            ctx.mode = GuidanceMode::Local;
            ctx.class_embedding = {scales.far, scales.near};
            if (global) {
                const PlacedView &pv = sphere ? *placed_sphere : *placed_object;
                const Image &scene = *in.scene.scene_linear;
                RenderOutput out = pv.basis.combine(scales);
                ShadowMatte matte;
                try {
                    matte = extract_shadow_matte(out.floor_radiance, &out.floor_alpha);
                } catch (const Error &) {
                    // No lit floor: the view carries no shadow.
                }
                const Image composed = composite_linear(scene, out, matte, placement);
                const Image coverage = placed_coverage(scene.width(), scene.height(), out, matte, placement);
                crops[k] = global_crop(k % sched.global_crops.count, scene.width(), scene.height(),
                                       alpha_bounds(coverage), sched.global_crops, rng);
                q.role = ViewRole::Global;
                q.camera = pv.camera;
                q.settings = pv.settings;
                q.image = crop_image(composed, crops[k]);
                q.alpha = crop_image(coverage, crops[k]);
                bases[k] = &pv.basis;
                placed_out[k] = std::move(out);
            } else {
                std::vector<PoolView> &pool = sphere ? sphere_pool : object_pool;
                const int v = static_cast<int>(rng.index(pool.size()));
                const LightBasis &b = basis_of(pool[v], sphere ? sphere_scene : object_scene);
                const RenderOutput out = b.combine(scales);
                q.role = sphere ? ViewRole::Apparatus : ViewRole::Object;
                q.view = v;
                q.camera = pool[v].camera;
                q.settings = pool[v].settings;
                q.image = over_background(out.radiance, out.alpha, q.background);
                q.alpha = out.alpha;
                q.view_dot_normal = out.view_dot_normal;
                bases[k] = &b;
            }
            const auto ext = q.camera.extrinsic();
            ctx.class_embedding.insert(ctx.class_embedding.end(), ext.begin(), ext.end());
        }

        const std::vector<GuideStep> steps = detail::score_views(guide, queries);
        double loss = 0, g_far = 0, g_near = 0;
        for (int k = 0; k < workers; ++k) {
            const double w = sched.loss_weights[k];
            Image g = steps[k].gradient;
            require(g.same_shape(queries[k].image), "gradient shape mismatch: guide returned " +
                                                        std::to_string(g.width()) + "x" + std::to_string(g.height()));
            if (!detail::all_finite(g) || !std::isfinite(steps[k].loss))
                throw detail::NonFiniteLoss{it};
            if (queries[k].role == ViewRole::Global) {
                const Image &scene = *in.scene.scene_linear;
                g = composite_linear_backward(uncrop_image(g, crops[k], scene.width(), scene.height()), placed_out[k],
                                              placement);
            } else if (guide.remote()) {
                apply_pixel_weight(g, grazing_weight(queries[k].view_dot_normal));
            }
            loss += w * steps[k].loss;
            g_far += w * dot(g, bases[k]->far);
            g_near += w * dot(g, bases[k]->near);
        }
        if (!std::isfinite(loss) || !std::isfinite(g_far) || !std::isfinite(g_near))
            throw detail::NonFiniteLoss{it};

        const double lr = sched.learning_rate(it);
        std::vector<double> params{scales.far, scales.near};
        adam.step(params, {g_far, g_near}, lr);
        scales = {std::max(0.0, params[0]), std::max(0.0, params[1])};
        guide.step_done(it);
        last_loss = loss;

        StepLog log;
        log.kind = RunKind::LightEstimation;
        log.iteration = it;
        log.total = sched.total_iterations;
        log.loss = loss;
        log.lambda = lambda;
        log.t_min = t_min;
        log.t_max = t_max;
        log.lr = lr;
        log.weights = sched.loss_weights;
        std::ostringstream extra;
        extra.precision(9);
        extra << "s_far=" << scales.far << " s_near=" << scales.near;
        log.extra = extra.str();
        return log;
    };

    result.iterations_done = detail::run_loop(start, sched.total_iterations, control, hooks);
    result.scales = scales;
    result.final_loss = last_loss;
    result.hdr = apply_light_scales(ldr, ldr.regions(), scales);
    return result;
}

} // namespace sf
