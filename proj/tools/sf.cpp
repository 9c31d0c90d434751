#include "CLI11.hpp"
#include "json.hpp"

#include "sf/compositor/compositor.h"
#include "sf/core/error.h"
#include "sf/guidance/prompt.h"
#include "sf/guidance/provider.h"
#include "sf/io/image_io.h"
#include "sf/lighting/light_model.h"
#include "sf/pipeline/pipeline.h"
#include "sf/render/renderer.h"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using namespace sf;

namespace {

struct CommonOptions {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::string provider = "oracle";
    std::string service_url;
    std::string fov_form;
};

struct RunOptions {
    int checkpoint_every = 100;
    int stop_after = -1;
    bool resume = false;
};

void add_common(CLI::App *cmd, CommonOptions &o) {
    cmd->add_option("--config", o.config, "run config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "run seed (overrides render.seed)");
    cmd->add_option("--fov-form", o.fov_form, "camera FOV rule: half-angle-atan or literal");
}

void add_provider(CLI::App *cmd, CommonOptions &o) {
    cmd->add_option("--provider", o.provider, "guidance source")->check(CLI::IsMember({"oracle", "remote"}));
    cmd->add_option("--service-url", o.service_url, "score service base URL (default: $SF_SERVICE_URL)");
}

void add_run(CLI::App *cmd, RunOptions &r) {
    cmd->add_option("--checkpoint-every", r.checkpoint_every, "steps between checkpoints (0: only at the end)");
    cmd->add_option("--stop-after", r.stop_after, "stop after this many finished steps");
    cmd->add_flag("--resume", r.resume, "continue from the checkpoint in --out");
}

struct Context {
    RunConfig config;
    fs::path out;
    std::uint64_t seed = 0;
};

Context make_context(const CommonOptions &o) {
    Context c;
    c.config = o.config.empty() ? default_run_config() : load_run_config(o.config);
    if (o.seed)
        c.config.render.seed = *o.seed;
    if (!o.fov_form.empty()) {
        const FovForm f = parse_fov_form(o.fov_form);
        c.config.texture.cameras.fov_form = f;
        c.config.generation.cameras.fov_form = f;
    }
    c.config.validate();
    c.seed = c.config.render.seed;
    c.out = o.out;
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec)
        fail(ErrorKind::Io, "cannot create output directory " + c.out.string() + ": " + ec.message());
    std::ofstream(c.out / "config.json") << dump_run_config(c.config) << "\n";
    return c;
}

std::string service_url(const CommonOptions &o) {
    if (!o.service_url.empty())
        return o.service_url;
    if (const char *env = std::getenv("SF_SERVICE_URL"); env && *env)
        return env;
    fail(ErrorKind::InvalidInput, "remote provider needs --service-url or SF_SERVICE_URL");
}

// Appends one line per optimizer step to <out>/progress.log and echoes it.
class ProgressLog {
public:
    explicit ProgressLog(const fs::path &path, bool append) : file_(path, append ? std::ios::app : std::ios::trunc) {
        if (!file_)
            fail(ErrorKind::Io, "cannot write " + path.string());
    }
    void operator()(const StepLog &log) {
        const std::string line = format_step_log(log);
        file_ << line << "\n";
        file_.flush();
        std::cerr << line << "\n";
    }

private:
    std::ofstream file_;
};

RunControl make_control(const Context &ctx, const RunOptions &r, RunKind kind, ProgressLog &log) {
    RunControl c;
    c.checkpoint = ctx.out / (std::string(to_string(kind)) + ".ck");
    c.every = r.checkpoint_every;
    c.stop_after = r.stop_after;
    c.resume = r.resume;
    c.on_step = [&log](const StepLog &l) { log(l); };
    return c;
}

TriangleMesh read_mesh(const std::string &path) {
    TriangleMesh m = load_mesh(path);
    require(!m.uvs.empty(), "mesh " + path + " has no UV coordinates");
    return normalize_mesh(m);
}

NeuralTexture read_neural_texture(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot open " + path);
    return NeuralTexture::load(in);
}

void write_neural_texture(const fs::path &path, const NeuralTexture &tex) {
    std::ofstream out(path, std::ios::binary);
    tex.save(out);
    if (!out)
        fail(ErrorKind::Io, "cannot write " + path.string());
}

// EXR: full PBR map. PNG: sRGB base color with the given roughness and metalness.
TextureMap read_texture_map(const std::string &path, const ChannelBounds &bounds) {
    if (fs::path(path).extension() == ".exr")
        return import_texture_exr(path, bounds);
    const Image img = io::read_png(path);
    require(img.channels() >= 3, "texture PNG needs RGB channels");
    TextureMap map(img.width(), img.height(), bounds);
    for (int j = 0; j < img.height(); ++j)
        for (int i = 0; i < img.width(); ++i) {
            const int row = img.height() - 1 - j;
            map.set_texel(i, j,
                          {srgb_to_linear(img.at(i, row, 0)), srgb_to_linear(img.at(i, row, 1)),
                           srgb_to_linear(img.at(i, row, 2)), bounds.mid(kRoughness), bounds.lo(kMetalness)});
        }
    return map;
}

EnvironmentMap read_hdr_env(const std::string &path) {
    Image img = io::read_image(path);
    if (fs::path(path).extension() != ".exr")
        img = srgb_to_linear(img);
    return EnvironmentMap::from_image(img, MapKind::Hdr);
}

Image read_scene_linear(const std::string &path) {
    Image img = io::read_image(path);
    require(img.channels() >= 3, "scene image needs RGB channels");
    if (img.channels() > 3) {
        Image rgb(img.width(), img.height(), 3);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                for (int c = 0; c < 3; ++c)
                    rgb.at(x, y, c) = img.at(x, y, c);
        img = std::move(rgb);
    }
    return fs::path(path).extension() == ".exr" ? img : srgb_to_linear(img);
}

Placement compose_placement(const ComposeConfig &c, int width, int height) {
    require(c.position.has_value() && c.size > 0, "config compose.position and compose.size are required with a scene");
    Placement p{*c.position, c.size, c.elevation};
    p.validate(width, height);
    return p;
}

// Linear radiance and coverage as RGBA: PNG in sRGB, EXR linear.
void write_render(const fs::path &stem, const RenderOutput &out) {
    Image lin(out.radiance.width(), out.radiance.height(), 4);
    for (int y = 0; y < lin.height(); ++y)
        for (int x = 0; x < lin.width(); ++x) {
            for (int c = 0; c < 3; ++c)
                lin.at(x, y, c) = out.radiance.at(x, y, c);
            lin.at(x, y, 3) = out.alpha.at(x, y);
        }
    io::write_exr(stem.string() + ".exr", lin);
    io::write_png(stem.string() + ".png", linear_to_srgb(lin));
}

struct Guidance {
    std::unique_ptr<ScoreProvider> provider;
    std::unique_ptr<Guide> guide;
};

Guidance remote_guidance(const CommonOptions &o, RunKind kind, std::uint64_t seed) {
    Guidance g;
    auto client = std::make_unique<RemoteScoreClient>(service_url(o));
    if (!client->healthy())
        fail(ErrorKind::Unavailable, "score service at " + client->base_url() + " is not healthy");
    g.guide = std::make_unique<RemoteGuide>(*client, std::string(to_string(kind)) + "-" + std::to_string(seed));
    g.provider = std::move(client);
    return g;
}

// ---------------------------------------------------------------- commands

struct FitArgs {
    std::string mesh, texture;
};

int cmd_fit(const CommonOptions &o, const FitArgs &a) {
    Context ctx = make_context(o);
    const TriangleMesh mesh = read_mesh(a.mesh);
    const TextureMap target = read_texture_map(a.texture, ctx.config.neural_texture.bounds);
    const int size = ctx.config.fit.texture_size;
    const UvPositionMap uvpos = rasterize_uv_positions(mesh, target.width(), target.height());
    FitSchedule sched = ctx.config.fit.schedule;
    sched.seed = ctx.seed;
    const FitResult r = fit_neural_texture(target, uvpos, sched, ctx.config.neural_texture);
    {
        std::ofstream log(ctx.out / "progress.log");
        for (std::size_t i = 0; i < r.loss_history.size(); ++i)
            log << "fit-texture iter=" << i << "/" << r.loss_history.size() << " loss=" << r.loss_history[i]
                << " lr=" << fit_learning_rate(sched, static_cast<int>(i)) << "\n";
    }
    write_neural_texture(ctx.out / "texture.sfnt", r.texture);
    export_texture_map(bake_texture_map(r.texture, rasterize_uv_positions(mesh, size, size)), ctx.out / "baked");
    std::cout << "fit-texture: final loss " << r.final_loss << "\n";
    return 0;
}

struct LightArgs {
    std::string mesh, texture, envmap, target, scene, object;
    bool outdoor = false;
};

int cmd_estimate_light(const CommonOptions &o, const RunOptions &ro, const LightArgs &a) {
    Context ctx = make_context(o);
    const LightConfig &lc = ctx.config.light;
    require(!a.envmap.empty() || !a.target.empty(), "estimate-light needs --envmap or --target");
    const TriangleMesh mesh = read_mesh(a.mesh);

    std::optional<EnvironmentMap> target;
    if (!a.target.empty())
        target = read_hdr_env(a.target);
    Image ldr_img;
    if (!a.envmap.empty()) {
        ldr_img = io::read_image(a.envmap);
        if (fs::path(a.envmap).extension() != ".exr")
            ldr_img = srgb_to_linear(ldr_img);
    } else {
        ldr_img = target->to_image();
    }
    for (double &v : ldr_img.data())
        v = std::clamp(v, 0.0, 1.0);
    EnvironmentMap ldr = EnvironmentMap::from_image(ldr_img, MapKind::Ldr);
    const std::vector<double> unseen(ldr.bin_count(), std::numeric_limits<double>::infinity());
    ldr.set_regions(a.outdoor ? outdoor_regions(ldr, lc.tau_o) : indoor_regions(ldr, unseen, lc.tau_f, lc.tau_n, lc.tau_d));

    std::optional<NeuralTexture> tex;
    std::optional<UvPositionMap> uvpos;
    if (!a.texture.empty()) {
        tex = read_neural_texture(a.texture);
        uvpos = rasterize_uv_positions(mesh, ctx.config.fit.texture_size, ctx.config.fit.texture_size);
    }
    std::optional<Image> scene;
    LightEstimationInputs in;
    in.ldr = &ldr;
    in.object.mesh = &mesh;
    in.object.texture = tex ? &*tex : nullptr;
    in.object.uvpos = uvpos ? &*uvpos : nullptr;
    in.object_prompt = a.object.empty() ? ctx.config.guidance.prompt : a.object;
    if (!a.scene.empty()) {
        scene = read_scene_linear(a.scene);
        in.scene = {&*scene, compose_placement(ctx.config.compose, scene->width(), scene->height())};
    }

    Guidance g;
    std::optional<TextureMap> baked;
    std::unique_ptr<SceneGeometry> object_geo, sphere_geo;
    const ApparatusScene apparatus = build_apparatus_scene(mesh);
    if (o.provider == "remote") {
        g = remote_guidance(o, RunKind::LightEstimation, ctx.seed);
    } else {
        require(target.has_value(), "the oracle provider needs --target (HDR environment map)");
        if (tex)
            baked = bake_texture_map(*tex, *uvpos);
        object_geo = std::make_unique<SceneGeometry>(std::vector<GeometryInstance>{{&mesh, {}}}, false);
        sphere_geo =
            std::make_unique<SceneGeometry>(std::vector<GeometryInstance>{{&apparatus.sphere, {}}}, false);
        g.guide = std::make_unique<OracleGuide>([&](const ViewQuery &q) {
            ObjectMaterial m;
            if (q.role == ViewRole::Apparatus) {
                m.constant = apparatus.material;
                m.specular = apparatus.specular;
            } else if (baked) {
                m.texture = &*baked;
            }
            const SceneGeometry *geo = q.role == ViewRole::Apparatus ? sphere_geo.get() : object_geo.get();
            return render({geo, {m}, &*target, nullptr}, q.camera, q.settings);
        });
    }

    ProgressLog log(ctx.out / "progress.log", ro.resume);
    const RunControl control = make_control(ctx, ro, RunKind::LightEstimation, log);
    const LightEstimationResult r = run_light_estimation(in, lc, ctx.config.guidance, *g.guide, ctx.seed, control);
    nlohmann::ordered_json doc{{"far", r.scales.far},         {"near", r.scales.near},
                               {"dark", r.dark},              {"object_prompt", r.object_prompt},
                               {"final_loss", r.final_loss},  {"iterations", r.iterations_done}};
    std::ofstream(ctx.out / "light.json") << doc.dump(2) << "\n";
    io::write_exr(ctx.out / "hdr_envmap.exr", r.hdr.to_image());
    std::cout << "estimate-light: far " << r.scales.far << " near " << r.scales.near << "\n";
    return 0;
}

struct TextureArgs {
    std::string mesh, texture, light, scene, target;
    bool diffuse = false;
};

int cmd_adapt_texture(const CommonOptions &o, const RunOptions &ro, const TextureArgs &a) {
    Context ctx = make_context(o);
    const TriangleMesh mesh = read_mesh(a.mesh);
    const int size = ctx.config.fit.texture_size;
    const UvPositionMap uvpos = rasterize_uv_positions(mesh, size, size);
    require(!a.texture.empty(), "adapt-texture needs --texture (a fitted neural texture)");
    require(!ctx.config.texture.use_estimated_light || !a.light.empty(),
            "config texture.use_estimated_light needs --light");
    std::optional<EnvironmentMap> env;
    if (!a.light.empty())
        env = read_hdr_env(a.light);
    std::optional<Image> scene;
    TextureAdaptationInputs in;
    in.mesh = &mesh;
    in.uvpos = &uvpos;
    in.texture = read_neural_texture(a.texture);
    in.env = env ? &*env : nullptr;
    in.specular = !a.diffuse;
    in.prompt = ctx.config.guidance.prompt;
    if (!a.scene.empty()) {
        scene = read_scene_linear(a.scene);
        in.scene = {&*scene, compose_placement(ctx.config.compose, scene->width(), scene->height())};
    }

    Guidance g;
    std::optional<TextureMap> target;
    const SceneGeometry geo({{&mesh, {}}}, false);
    if (o.provider == "remote") {
        g = remote_guidance(o, RunKind::TextureAdaptation, ctx.seed);
    } else {
        require(!a.target.empty(), "the oracle provider needs --target (texture map)");
        target = read_texture_map(a.target, in.texture.bounds());
        g.guide = std::make_unique<OracleGuide>([&](const ViewQuery &q) {
            ObjectMaterial m;
            m.texture = &*target;
            m.specular = in.specular;
            m.sampling_texture = q.sampling_map;
            return render({&geo, {m}, q.env, q.sampler}, q.camera, q.settings);
        });
    }

    ProgressLog log(ctx.out / "progress.log", ro.resume);
    const RunControl control = make_control(ctx, ro, RunKind::TextureAdaptation, log);
    const TextureRunResult r =
        run_texture_adaptation(in, ctx.config.texture, ctx.config.guidance, *g.guide, ctx.seed, control);
    write_neural_texture(ctx.out / "texture.sfnt", r.texture);
    export_texture_map(bake_texture_map(r.texture, uvpos), ctx.out / "baked");
    std::cout << "adapt-texture: " << r.iterations_done << " steps, final loss " << r.final_loss << "\n";
    return 0;
}

int cmd_generate(const CommonOptions &o, const RunOptions &ro, const TextureArgs &a) {
    Context ctx = make_context(o);
    const TriangleMesh mesh = read_mesh(a.mesh);
    const int size = ctx.config.fit.texture_size;
    const UvPositionMap uvpos = rasterize_uv_positions(mesh, size, size);
    GenerationInputs in;
    in.mesh = &mesh;
    in.uvpos = &uvpos;
    in.prompt = ctx.config.guidance.prompt;
    in.specular = !a.diffuse;
    in.texture_config = ctx.config.neural_texture;

    Guidance g;
    std::optional<TextureMap> target;
    const SceneGeometry geo({{&mesh, {}}}, false);
    if (o.provider == "remote") {
        g = remote_guidance(o, RunKind::Generation, ctx.seed);
    } else {
        require(!a.target.empty(), "the oracle provider needs --target (texture map)");
        target = read_texture_map(a.target, ctx.config.neural_texture.bounds);
        g.guide = std::make_unique<OracleGuide>([&](const ViewQuery &q) {
            ObjectMaterial m;
            m.texture = &*target;
            m.specular = in.specular;
            m.sampling_texture = q.sampling_map;
            return render({&geo, {m}, q.env, q.sampler}, q.camera, q.settings);
        });
    }

    ProgressLog log(ctx.out / "progress.log", ro.resume);
    const RunControl control = make_control(ctx, ro, RunKind::Generation, log);
    const TextureRunResult r =
        run_scene_agnostic_generation(in, ctx.config.generation, ctx.config.guidance, *g.guide, ctx.seed, control);
    write_neural_texture(ctx.out / "texture.sfnt", r.texture);
    export_texture_map(bake_texture_map(r.texture, uvpos), ctx.out / "baked");
    std::cout << "generate-texture: " << r.iterations_done << " steps, final loss " << r.final_loss << "\n";
    return 0;
}

struct RenderArgs {
    std::string mesh, texture, light, scene;
    double azimuth = 0, elevation = 30, fov_multiplier = 1.0;
    bool no_light = false, diffuse = false;
};

struct LoadedAsset {
    TriangleMesh mesh;
    std::optional<TextureMap> baked;
    std::optional<EnvironmentMap> env;
};

// Mesh, baked texture and light; ambient unit light without --light or with --no-light.
LoadedAsset load_asset(const Context &ctx, const RenderArgs &a) {
    LoadedAsset s;
    s.mesh = read_mesh(a.mesh);
    if (!a.texture.empty()) {
        const int size = ctx.config.fit.texture_size;
        s.baked = bake_texture_map(read_neural_texture(a.texture), rasterize_uv_positions(s.mesh, size, size));
    }
    if (!a.light.empty() && !a.no_light)
        s.env = read_hdr_env(a.light);
    else
        s.env = EnvironmentMap::constant(16, 32, 1.0);
    return s;
}

int cmd_render(const CommonOptions &o, const RenderArgs &a) {
    Context ctx = make_context(o);
    const LoadedAsset s = load_asset(ctx, a);
    const SceneGeometry geo({{&s.mesh, {}}}, ctx.config.render.include_floor);
    ObjectMaterial m;
    m.texture = s.baked ? &*s.baked : nullptr;
    m.specular = !a.diffuse;
    Camera cam;
    cam.azimuth_deg = a.azimuth;
    cam.elevation_deg = a.elevation;
    cam.fov_multiplier = a.fov_multiplier;
    cam.resolution = ctx.config.render.resolution;
    if (!o.fov_form.empty())
        cam.fov_form = parse_fov_form(o.fov_form);
    cam.validate();
    RenderSettings rs;
    rs.spp = ctx.config.render.spp;
    rs.seed = ctx.seed;
    rs.include_floor = ctx.config.render.include_floor;
    const RenderOutput out = render({&geo, {m}, &*s.env, nullptr}, cam, rs);
    write_render(ctx.out / "render", out);
    std::cout << "render: wrote " << (ctx.out / "render.png").string() << "\n";
    return 0;
}

int cmd_compose(const CommonOptions &o, const RenderArgs &a) {
    Context ctx = make_context(o);
    require(!a.scene.empty(), "compose needs --scene");
    const LoadedAsset s = load_asset(ctx, a);
    Image scene_srgb = io::read_image(a.scene);
    if (fs::path(a.scene).extension() == ".exr")
        scene_srgb = linear_to_srgb(scene_srgb);
    const Placement placement = compose_placement(ctx.config.compose, scene_srgb.width(), scene_srgb.height());
    const SceneGeometry geo({{&s.mesh, {}}}, true);
    ObjectMaterial m;
    m.texture = s.baked ? &*s.baked : nullptr;
    m.specular = !a.diffuse;
    const Camera cam = placement_camera(placement, ctx.config.light.fov_multiplier, ctx.config.render.resolution);
    RenderSettings rs;
    rs.spp = ctx.config.render.spp;
    rs.seed = ctx.seed;
    rs.include_floor = true;
    const RenderOutput out = render({&geo, {m}, &*s.env, nullptr}, cam, rs);
    ShadowMatte matte;
    try {
        matte = extract_shadow_matte(out.floor_radiance, &out.floor_alpha, ctx.config.compose.shadow_threshold);
    } catch (const Error &e) {
        log_warning(std::string("no shadow: ") + e.what());
    }
    io::write_png(ctx.out / "composite.png", composite(scene_srgb, out, matte, placement));
    if (!matte.opacity.empty())
        io::write_png(ctx.out / "shadow_matte.png", matte.opacity);
    write_render(ctx.out / "object", out);
    std::cout << "compose: wrote " << (ctx.out / "composite.png").string() << "\n";
    return 0;
}

struct PromptArgs {
    std::string kind, object, scene, suffix;
    std::optional<double> azimuth;
    bool dark = false;
};

int cmd_emit_prompt(const PromptArgs &a) {
    PromptRequest r;
    // A scene without an explicit kind asks for the scene-conditioned description.
    r.kind = !a.kind.empty() ? parse_prompt_kind(a.kind)
                             : (a.scene.empty() ? PromptKind::Object : PromptKind::SceneConditioned);
    r.object_text = a.object;
    r.scene_text = a.scene;
    r.azimuth_deg = a.azimuth;
    r.dark = a.dark;
    r.color_suffix = a.suffix;
    std::cout << build_prompt(r) << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Differentiable rendering toolkit: texture fitting, light estimation, texture adaptation, "
                 "generation and compositing."};
    app.require_subcommand(1);

    CommonOptions common;
    RunOptions run;
    FitArgs fit;
    LightArgs light;
    TextureArgs texture;
    RenderArgs rend;
    PromptArgs prompt;

    auto *c_fit = app.add_subcommand("fit-texture", "fit a neural texture to a texture map");
    add_common(c_fit, common);
    c_fit->add_option("--mesh", fit.mesh, "OBJ with UVs")->required()->check(CLI::ExistingFile);
    c_fit->add_option("--texture", fit.texture, "texture EXR (R,G,B,roughness,metalness) or base-color PNG")
        ->required()
        ->check(CLI::ExistingFile);

    auto *c_light = app.add_subcommand("estimate-light", "estimate far/near light scales of an LDR panorama");
    add_common(c_light, common);
    add_provider(c_light, common);
    add_run(c_light, run);
    c_light->add_option("--mesh", light.mesh, "object OBJ with UVs")->required()->check(CLI::ExistingFile);
    c_light->add_option("--texture", light.texture, "fitted neural texture")->check(CLI::ExistingFile);
    c_light->add_option("--envmap", light.envmap, "LDR panorama (PNG sRGB or EXR)")->check(CLI::ExistingFile);
    c_light->add_option("--target", light.target, "HDR panorama the oracle renders with")->check(CLI::ExistingFile);
    c_light->add_option("--scene", light.scene, "scene photograph for global views")->check(CLI::ExistingFile);
    c_light->add_option("--object", light.object, "object prompt (default: guidance.prompt)");
    c_light->add_flag("--outdoor", light.outdoor, "outdoor region rule");

    auto *c_adapt = app.add_subcommand("adapt-texture", "adapt a fitted texture under guidance");
    auto *c_gen = app.add_subcommand("generate-texture", "generate a texture from scratch under guidance");
    for (CLI::App *c : {c_adapt, c_gen}) {
        add_common(c, common);
        add_provider(c, common);
        add_run(c, run);
        c->add_option("--mesh", texture.mesh, "object OBJ with UVs")->required()->check(CLI::ExistingFile);
        c->add_option("--target", texture.target, "texture map the oracle renders")->check(CLI::ExistingFile);
        c->add_flag("--diffuse", texture.diffuse, "disable the specular lobe");
    }
    c_adapt->add_option("--texture", texture.texture, "fitted neural texture")->required()->check(CLI::ExistingFile);
    c_adapt->add_option("--light", texture.light, "HDR environment map")->check(CLI::ExistingFile);
    c_adapt->add_option("--scene", texture.scene, "scene photograph for global views")->check(CLI::ExistingFile);

    auto *c_render = app.add_subcommand("render", "render an asset to PNG and EXR");
    auto *c_compose = app.add_subcommand("compose", "insert a relit asset with its shadow into a scene");
    for (CLI::App *c : {c_render, c_compose}) {
        add_common(c, common);
        c->add_option("--mesh", rend.mesh, "object OBJ with UVs")->required()->check(CLI::ExistingFile);
        c->add_option("--texture", rend.texture, "neural texture")->check(CLI::ExistingFile);
        c->add_option("--light", rend.light, "HDR environment map")->check(CLI::ExistingFile);
        c->add_flag("--no-light", rend.no_light, "unit ambient light instead of --light");
        c->add_flag("--diffuse", rend.diffuse, "disable the specular lobe");
    }
    c_render->add_option("--azimuth", rend.azimuth, "camera azimuth in degrees");
    c_render->add_option("--elevation", rend.elevation, "camera elevation in degrees");
    c_render->add_option("--fov-multiplier", rend.fov_multiplier, "framing multiplier");
    c_compose->add_option("--scene", rend.scene, "scene image (PNG sRGB or EXR)")->required()->check(CLI::ExistingFile);

    auto *c_prompt = app.add_subcommand("emit-prompt", "print a prompt");
    c_prompt->add_option("--kind", prompt.kind, "object, scene-conditioned, apparatus or editing");
    c_prompt->add_option("--object", prompt.object, "object description");
    c_prompt->add_option("--scene", prompt.scene, "scene description");
    c_prompt->add_option("--azimuth", prompt.azimuth, "view azimuth in degrees");
    c_prompt->add_flag("--dark", prompt.dark, "dark-environment suffix");
    c_prompt->add_option("--suffix", prompt.suffix, "lighting note appended verbatim");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*c_fit)
            return cmd_fit(common, fit);
        if (*c_light)
            return cmd_estimate_light(common, run, light);
        if (*c_adapt)
            return cmd_adapt_texture(common, run, texture);
        if (*c_gen)
            return cmd_generate(common, run, texture);
        if (*c_render)
            return cmd_render(common, rend);
        if (*c_compose)
            return cmd_compose(common, rend);
        if (*c_prompt)
            return cmd_emit_prompt(prompt);
    } catch (const Error &e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
