#include "doctest.h"

#include "sf/core/error.h"
#include "sf/io/image_io.h"
#include "sf/lighting/light_model.h"
#include "sf/pipeline/pipeline.h"
#include "sf/render/renderer.h"

#include <atomic>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

using namespace sf;

namespace {

std::filesystem::path temp_path(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / "sf_pipeline_tests";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::filesystem::remove(p);
    return p;
}

std::string read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Upper quarter of the rows is a far light.
EnvironmentMap small_ldr() {
    EnvironmentMap env(8, 16, MapKind::Ldr);
    LightRegions r;
    r.far_mask.assign(env.bin_count(), 0);
    r.near_mask.assign(env.bin_count(), 0);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 16; ++j) {
            const std::size_t b = static_cast<std::size_t>(i) * 16 + j;
            if (i < 2) {
                env.set_base(b, {0.9, 0.85, 0.8});
                r.far_mask[b] = 1;
            } else {
                env.set_base(b, {0.3, 0.3, 0.35});
            }
        }
    env.set_regions(r);
    return env;
}

LightConfig small_light_config(int iterations) {
    LightConfig c;
    c.object_views = 4;
    c.sphere_views = 2;
    c.schedule.stages = {StageConfig{1.0, 12, 2, 750, 990}};
    c.schedule.total_iterations = iterations;
    return c;
}

struct TexturedFixture {
    TriangleMesh mesh = normalize_mesh(make_atlas_cube());
    UvPositionMap uvpos = rasterize_uv_positions(mesh, 16, 16);
    NeuralTextureConfig config = [] {
        NeuralTextureConfig c;
        c.encoding.levels = 4;
        c.encoding.log2_table_size = 10;
        c.hidden = 8;
        return c;
    }();
};

TextureConfig small_texture_config(int iterations) {
    TextureConfig c;
    c.cameras.count = 6;
    c.schedule.stages = {StageConfig{1.0, 12, 2, 500, 990}};
    c.schedule.total_iterations = iterations;
    c.schedule.lr = c.schedule.lr_end = 0.01;
    c.schedule.workers = 2;
    c.schedule.loss_weights = {0.5, 0.5};
    return c;
}

// Checkered texture map used as the oracle's ground truth.
TextureMap checker_map(int size) {
    TextureMap m(size, size);
    for (int j = 0; j < size; ++j)
        for (int i = 0; i < size; ++i) {
            const bool on = ((i / 4) + (j / 4)) % 2 == 0;
            m.set_texel(i, j, {on ? 0.8 : 0.2, 0.4, on ? 0.1 : 0.7, 0.6, 0.0});
        }
    return m;
}

// Provider returning zero gradients and recording what it saw.
class RecordingProvider : public ScoreProvider {
public:
    GradientImage score(const ScoreRequest &req) override {
        std::lock_guard lock(mutex);
        requests.push_back(req);
        GradientImage g;
        g.gradient = Image(req.image.width(), req.image.height(), 3);
        return g;
    }
    void lora_step(const std::string &) override { ++lora_steps; }

    std::mutex mutex;
    std::vector<ScoreRequest> requests;
    std::atomic<int> lora_steps{0};
};

} // namespace

TEST_CASE("default configuration carries the published constants") {
    const RunConfig c = default_run_config();
    CHECK(c.light.tau_f == 0.8);
    CHECK(c.light.tau_n == 0.95);
    CHECK(c.light.tau_o == 0.9);
    CHECK(std::isinf(c.light.tau_d));
    CHECK(c.guidance.cfg_scale == 7.5);
    CHECK(c.texture.schedule.lr == 0.001);
    CHECK(c.guidance.lora_lr == 0.0001);
    CHECK(c.light.schedule.lr == 0.01);
    CHECK(c.light.schedule.lr_end == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(c.fit.schedule.lr_start == 0.02);
    CHECK(c.fit.schedule.lr_end == 0.001);
    CHECK(c.texture.schedule.total_iterations == 4000);
    CHECK(c.generation.schedule.total_iterations == 4000);
    CHECK(c.light.schedule.total_iterations == 2000);
    CHECK(c.fit.schedule.iterations == 1000);
    CHECK(c.light.schedule.loss_weights == std::vector<double>{1.0 / 6, 1.0 / 6, 1.0 / 6, 0.5});
    CHECK(c.generation.schedule.stages.size() == 2);
    CHECK(c.generation.schedule.stages[0] == StageConfig{0.2, 256, 64, 30, 990});
    CHECK(c.generation.schedule.stages[1] == StageConfig{0.8, 512, 128, 500, 990});
    CHECK(c.texture.schedule.stages[0] == StageConfig{1.0, 512, 128, 500, 990});
    CHECK(c.light.schedule.stages[0].t_min == 750);
    CHECK(c.light.fov_multiplier == 1.65);
    CHECK(c.texture.cameras.count == 24);
    CHECK(c.texture.cameras.fov_multiplier_min == 1.0);
    CHECK(c.texture.cameras.fov_multiplier_max == 1.21);
    CHECK(c.generation.cameras.count == 72);
    CHECK(c.generation.cameras.elevations == std::vector<double>{20, 30, 45});
    CHECK(c.texture.schedule.background.augment_probability == 0.5);
    CHECK(c.texture.schedule.background.color.x == 0.5);
    CHECK(c.guidance.injection.s_c == 0.0);
    CHECK(c.guidance.injection.p == 1.0);
    CHECK(c.generation.sg_c_r == 0.08);
    CHECK(c.generation.sg_b_v == 0.8);
    CHECK(c.compose.shadow_threshold == 0.8);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config round trip and rejection") {
    const RunConfig c = default_run_config();
    const std::string text = dump_run_config(c);
    CHECK(dump_run_config(parse_run_config(text)) == text);

    const RunConfig o = parse_run_config(R"({"version": 1, "render": {"spp": 16, "seed": 7},
        "light": {"tau_d": 3.5, "schedule": {"total_iterations": 10}},
        "compose": {"position": [10, 20], "size": 40}})");
    CHECK(o.render.spp == 16);
    CHECK(o.render.seed == 7);
    CHECK(o.light.tau_d == 3.5);
    CHECK(o.light.schedule.total_iterations == 10);
    CHECK(o.light.schedule.lr == 0.01);
    CHECK(o.compose.position->x == 10);

    CHECK_THROWS_WITH(parse_run_config(R"({"version": 1, "render": {"spp": 4, "spd": 1}})"),
                      doctest::Contains("unknown key render.spd"));
    CHECK_THROWS_WITH(parse_run_config(R"({"version": 2})"), doctest::Contains("unsupported"));
    CHECK_THROWS_WITH(parse_run_config(R"({"render": {}})"), doctest::Contains("missing version"));
    CHECK_THROWS_WITH(parse_run_config(R"({"version": 1, "generation": {"schedule": {"stages":
        [{"fraction": 0.5}, {"fraction": 0.4}]}}})"),
                      doctest::Contains("sum to 1"));
    CHECK_THROWS_WITH(parse_run_config(R"({"version": 1, "texture": {"schedule": {"lr": 0}}})"),
                      doctest::Contains("learning rates"));
    CHECK_THROWS(parse_run_config("{not json"));
}

TEST_CASE("schedule endpoints and stage split") {
    ScheduleConfig g = generation_schedule();
    CHECK(g.stage_start(1) == 800);
    CHECK(g.stage_index(799) == 0);
    CHECK(g.stage_index(800) == 1);
    g.total_iterations = 10;
    CHECK(g.stage_start(1) == 2);
    CHECK(g.t_range(1) == std::pair{30, 990});
    CHECK(g.t_range(2) == std::pair{500, 990});

    ScheduleConfig l = light_estimation_schedule();
    CHECK(l.learning_rate(0) == 0.01);
    CHECK(l.learning_rate(l.total_iterations - 1) == 0.001);

    ScheduleConfig t = texture_adaptation_schedule();
    t.lambda_end = 0.6;
    CHECK(t.lambda(0) == 1.0);
    CHECK(t.lambda(t.total_iterations - 1) == 0.6);
    CHECK(t.t_range(0) == std::pair{500, 990});
    CHECK(t.t_range(t.total_iterations - 1) == std::pair{500, 500});
    for (int it = 1; it < t.total_iterations; ++it)
        CHECK(t.t_range(it).second <= t.t_range(it - 1).second);
}

TEST_CASE("checkpoint round trip, corruption and version refusal") {
    TexturedFixture f;
    Checkpoint ck;
    ck.kind = RunKind::TextureAdaptation;
    ck.iteration = 17;
    ck.total = 40;
    ck.seed = 99;
    ck.scales = {2.5, 0.75};
    ck.light_adam = {{0.1, 0.2}, {0.3, 0.4}, 5};
    ck.texture = NeuralTexture(f.config, 3);
    ck.texture_adam = {std::vector<double>(ck.texture->param_count(), 0.5),
                       std::vector<double>(ck.texture->param_count(), 0.25), 17};
    const auto path = temp_path("round_trip.ck");
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.kind == ck.kind);
    CHECK(back.iteration == 17);
    CHECK(back.total == 40);
    CHECK(back.seed == 99);
    CHECK(back.scales == ck.scales);
    CHECK(back.light_adam == ck.light_adam);
    CHECK(back.texture_adam == ck.texture_adam);
    REQUIRE(back.texture);
    CHECK(back.texture->params() == ck.texture->params());
    CHECK(serialize_checkpoint(back) == serialize_checkpoint(ck));

    std::string bytes = serialize_checkpoint(ck);
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS_WITH(deserialize_checkpoint(flipped), "checkpoint corrupt");
    CHECK_THROWS_WITH(deserialize_checkpoint(bytes.substr(0, bytes.size() - 9)), "checkpoint corrupt");
    CHECK_THROWS_WITH(deserialize_checkpoint("SFCK"), "checkpoint corrupt");
    CHECK_THROWS_WITH(deserialize_checkpoint("garbage garbage garbage"), "checkpoint corrupt");

    // Re-stamped with another version and a matching CRC.
    std::string other = bytes.substr(0, bytes.size() - 4);
    const std::uint32_t v2 = 2;
    std::memcpy(other.data() + 4, &v2, 4);
    const std::uint32_t crc = io::crc32(other);
    other.append(reinterpret_cast<const char *>(&crc), 4);
    CHECK_THROWS_WITH(deserialize_checkpoint(other), doctest::Contains("checkpoint version 2 refused (expected 1)"));
}

TEST_CASE("global crops contain the object box") {
    Rng rng(5);
    CropConfig cfg;
    for (int trial = 0; trial < 2000; ++trial) {
        const int W = 40 + static_cast<int>(rng.index(200)), H = 40 + static_cast<int>(rng.index(200));
        const int bw = 1 + static_cast<int>(rng.index(W / 2)), bh = 1 + static_cast<int>(rng.index(H / 2));
        const int x0 = static_cast<int>(rng.index(W - bw + 1)), y0 = static_cast<int>(rng.index(H - bh + 1));
        const PixelRect box{x0, y0, x0 + bw, y0 + bh};
        for (int index = 0; index < 3; ++index) {
            const PixelRect c = global_crop(index, W, H, box, cfg, rng);
            CHECK(c.x0 >= 0);
            CHECK(c.y0 >= 0);
            CHECK(c.x1 <= W);
            CHECK(c.y1 <= H);
            CHECK(c.x0 <= box.x0);
            CHECK(c.y0 <= box.y0);
            CHECK(c.x1 >= box.x1);
            CHECK(c.y1 >= box.y1);
            if (index == 0)
                CHECK((c.x0 == 0 && c.y0 == 0 && c.x1 == W && c.y1 == H));
        }
    }
}

TEST_CASE("crop and uncrop are adjoint") {
    Image img(7, 5, 3);
    for (std::size_t i = 0; i < img.data().size(); ++i)
        img.data()[i] = std::sin(static_cast<double>(i));
    const PixelRect r{2, 1, 6, 4};
    const Image c = crop_image(img, r);
    Image g(c.width(), c.height(), 3);
    for (std::size_t i = 0; i < g.data().size(); ++i)
        g.data()[i] = std::cos(static_cast<double>(i));
    const Image u = uncrop_image(g, r, 7, 5);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < c.data().size(); ++i)
        lhs += c.data()[i] * g.data()[i];
    for (std::size_t i = 0; i < img.data().size(); ++i)
        rhs += img.data()[i] * u.data()[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("light estimation without signal keeps unit scales and logs unit weight sums") {
    const TriangleMesh mesh = normalize_mesh(make_icosphere(0.5, 1));
    const EnvironmentMap ldr = small_ldr();
    LightEstimationInputs in;
    in.ldr = &ldr;
    in.object.mesh = &mesh;
    NullGuide guide;
    std::vector<StepLog> logs;
    RunControl control;
    control.on_step = [&](const StepLog &l) { logs.push_back(l); };
    const LightEstimationResult r = run_light_estimation(in, small_light_config(5), {}, guide, 3, control);
    CHECK(r.scales == LightScales{1.0, 1.0});
    CHECK(r.iterations_done == 5);
    REQUIRE(logs.size() == 5);
    for (const StepLog &l : logs) {
        double s = 0;
        for (double w : l.weights)
            s += w;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(l.t_min == 750);
        CHECK(l.t_max == 990);
        CHECK(format_step_log(l).find("iter=") != std::string::npos);
    }
    CHECK(logs.front().lr == 0.01);
    CHECK(logs.back().lr == doctest::Approx(0.001).epsilon(1e-15));
}

TEST_CASE("light estimation recovers a far-light scale with the photometric oracle") {
    const TriangleMesh mesh = normalize_mesh(make_icosphere(0.5, 1));
    const ApparatusScene apparatus = build_apparatus_scene(mesh);
    const EnvironmentMap ldr = small_ldr();
    EnvironmentMap target_env = ldr;
    target_env.set_scales({3.0, 1.0});
    const SceneGeometry object_geo({{&mesh, {}}}, false), sphere_geo({{&apparatus.sphere, {}}}, false);
    OracleGuide guide([&](const ViewQuery &q) {
        ObjectMaterial m;
        if (q.role == ViewRole::Apparatus) {
            m.constant = apparatus.material;
            m.specular = false;
        }
        const SceneGeometry &geo = q.role == ViewRole::Apparatus ? sphere_geo : object_geo;
        return render({&geo, {m}, &target_env, q.sampler}, q.camera, q.settings);
    });
    LightEstimationInputs in;
    in.ldr = &ldr;
    in.object.mesh = &mesh;
    LightConfig cfg = small_light_config(400);
    cfg.schedule.lr = 0.05;
    cfg.schedule.lr_end = 0.002;
    const LightEstimationResult r = run_light_estimation(in, cfg, {}, guide, 11);
    CHECK(r.scales.far == doctest::Approx(3.0).epsilon(0.01));
    CHECK(r.scales.near == 1.0); // empty near region
    CHECK(r.hdr.kind() == MapKind::Hdr);
}

TEST_CASE("light estimation is deterministic and resumes bit-exactly") {
    const TriangleMesh mesh = normalize_mesh(make_icosphere(0.5, 1));
    const EnvironmentMap ldr = small_ldr();
    EnvironmentMap target_env = ldr;
    target_env.set_scales({2.0, 1.0});
    const SceneGeometry geo({{&mesh, {}}}, false);
    const ApparatusScene apparatus = build_apparatus_scene(mesh);
    const SceneGeometry sphere_geo({{&apparatus.sphere, {}}}, false);
    auto make_guide = [&] {
        return OracleGuide([&](const ViewQuery &q) {
            ObjectMaterial m;
            if (q.role == ViewRole::Apparatus) {
                m.constant = apparatus.material;
                m.specular = false;
            }
            return render({q.role == ViewRole::Apparatus ? &sphere_geo : &geo, {m}, &target_env, q.sampler}, q.camera,
                          q.settings);
        });
    };
    LightEstimationInputs in;
    in.ldr = &ldr;
    in.object.mesh = &mesh;
    const LightConfig cfg = small_light_config(20);

    RunControl a;
    a.checkpoint = temp_path("light_a.ck");
    auto ga = make_guide();
    run_light_estimation(in, cfg, {}, ga, 4, a);
    RunControl b;
    b.checkpoint = temp_path("light_b.ck");
    auto gb = make_guide();
    run_light_estimation(in, cfg, {}, gb, 4, b);
    CHECK(read_file(a.checkpoint) == read_file(b.checkpoint));

    RunControl c;
    c.checkpoint = temp_path("light_c.ck");
    c.stop_after = 7;
    auto gc = make_guide();
    const LightEstimationResult part = run_light_estimation(in, cfg, {}, gc, 4, c);
    CHECK(part.iterations_done == 7);
    CHECK(load_checkpoint(c.checkpoint).iteration == 7);
    c.stop_after = -1;
    c.resume = true;
    auto gc2 = make_guide();
    run_light_estimation(in, cfg, {}, gc2, 4, c);
    CHECK(read_file(c.checkpoint) == read_file(a.checkpoint));
}

TEST_CASE("texture adaptation with the oracle lowers the loss and resumes bit-exactly") {
    TexturedFixture f;
    const TextureMap truth = checker_map(16);
    const SceneGeometry geo({{&f.mesh, {}}}, false);
    auto make_guide = [&] {
        return OracleGuide([&](const ViewQuery &q) {
            ObjectMaterial m;
            m.texture = &truth;
            m.sampling_texture = q.sampling_map;
            return render({&geo, {m}, q.env, q.sampler}, q.camera, q.settings);
        });
    };
    TextureAdaptationInputs in;
    in.mesh = &f.mesh;
    in.uvpos = &f.uvpos;
    in.texture = NeuralTexture(f.config, 1);
    TextureConfig cfg = small_texture_config(100);
    cfg.schedule.lr = cfg.schedule.lr_end = 0.02;
    cfg.schedule.lambda_end = 0.5;

    std::vector<StepLog> logs;
    RunControl a;
    a.checkpoint = temp_path("tex_a.ck");
    a.on_step = [&](const StepLog &l) { logs.push_back(l); };
    auto ga = make_guide();
    const TextureRunResult full = run_texture_adaptation(in, cfg, {}, ga, 8, a);
    REQUIRE(full.loss_history.size() == 100);
    double first = 0, last = 0;
    for (int i = 0; i < 10; ++i) {
        first += full.loss_history[i];
        last += full.loss_history[90 + i];
    }
    CHECK(last < 0.5 * first);
    CHECK(logs.front().lambda == 1.0);
    CHECK(logs.back().lambda == 0.5);
    CHECK(logs.front().t_max == 990);
    CHECK(logs.back().t_max == 500);

    RunControl c;
    c.checkpoint = temp_path("tex_c.ck");
    c.stop_after = 37;
    auto gc = make_guide();
    run_texture_adaptation(in, cfg, {}, gc, 8, c);
    c.stop_after = -1;
    c.resume = true;
    auto gc2 = make_guide();
    const TextureRunResult resumed = run_texture_adaptation(in, cfg, {}, gc2, 8, c);
    CHECK(resumed.texture.params() == full.texture.params());
    CHECK(read_file(c.checkpoint) == read_file(a.checkpoint));
}

TEST_CASE("non-finite guide output aborts with a checkpoint") {
    TexturedFixture f;
    class NanGuide : public Guide {
    public:
        GuideStep gradient(const ViewQuery &q) override {
            GuideStep s;
            s.gradient = Image(q.image.width(), q.image.height(), 3, std::nan(""));
            return s;
        }
        bool remote() const override { return false; }
    } guide;
    TextureAdaptationInputs in;
    in.mesh = &f.mesh;
    in.uvpos = &f.uvpos;
    in.texture = NeuralTexture(f.config, 1);
    RunControl c;
    c.checkpoint = temp_path("nan.ck");
    CHECK_THROWS_WITH(run_texture_adaptation(in, small_texture_config(3), {}, guide, 1, c),
                      doctest::Contains("non-finite loss at iteration 0"));
    const Checkpoint ck = load_checkpoint(c.checkpoint);
    CHECK(ck.iteration == 0);
    CHECK(ck.texture->params() == in.texture.params());
}

TEST_CASE("remote texture adaptation sends local and global views") {
    TexturedFixture f;
    RecordingProvider provider;
    RemoteGuide guide(provider, "run-1");
    Image scene(48, 36, 3, 0.4);
    TextureAdaptationInputs in;
    in.mesh = &f.mesh;
    in.uvpos = &f.uvpos;
    in.texture = NeuralTexture(f.config, 1);
    in.scene = {&scene, Placement{{24, 30}, 10, 15}};
    GuidanceConfig gc;
    gc.prompt = "a wooden crate";
    std::vector<StepLog> logs;
    RunControl control;
    control.on_step = [&](const StepLog &l) { logs.push_back(l); };
    const TextureConfig cfg = small_texture_config(2);
    const TextureRunResult r = run_texture_adaptation(in, cfg, gc, guide, 2, control);
    CHECK(provider.lora_steps == 2);
    REQUIRE(provider.requests.size() == 8);
    int globals = 0;
    for (const ScoreRequest &req : provider.requests) {
        CHECK(req.run_id == "run-1");
        CHECK(req.context.class_embedding.size() == 18);
        if (req.context.mode == GuidanceMode::GlobalInpaint) {
            ++globals;
            REQUIRE(req.inpaint_mask);
            CHECK(req.inpaint_mask->width() == req.image.width());
            CHECK_FALSE(req.reference_image);
            CHECK(req.context.prompt == "a wooden crate");
        } else {
            REQUIRE(req.reference_image);
            CHECK(req.reference_image->same_shape(req.image));
            CHECK(req.context.prompt.rfind("a wooden crate, ", 0) == 0);
            CHECK(req.context.solid_background);
        }
    }
    CHECK(globals == 4);
    for (const StepLog &l : logs) {
        double s = 0;
        for (double w : l.weights)
            s += w;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
    // Zero gradients leave the texture untouched.
    CHECK(r.texture.params() == in.texture.params());
}

TEST_CASE("remote light estimation scores global crops with the apparatus prompt") {
    const TriangleMesh mesh = normalize_mesh(make_icosphere(0.5, 1));
    const EnvironmentMap ldr = small_ldr();
    RecordingProvider provider;
    RemoteGuide guide(provider, "light");
    Image scene(40, 30, 3, 0.5);
    LightEstimationInputs in;
    in.ldr = &ldr;
    in.object.mesh = &mesh;
    in.scene = {&scene, Placement{{20, 26}, 12, 10}};
    in.object_prompt = "a sofa";
    const LightEstimationResult r = run_light_estimation(in, small_light_config(2), {}, guide, 1);
    CHECK(r.scales == LightScales{1.0, 1.0});
    REQUIRE(provider.requests.size() == 8);
    for (std::size_t i = 0; i < provider.requests.size(); ++i) {
        const ScoreRequest &req = provider.requests[i];
        CHECK(req.context.t_min == 750);
        CHECK(req.context.t_max == 990);
        CHECK(req.context.mode == GuidanceMode::Local);
    }
    int sphere = 0, full_scene = 0;
    for (const ScoreRequest &req : provider.requests) {
        if (req.context.prompt.rfind("A gigantic diffuse white (spray-painted) sphere (ball)", 0) == 0)
            ++sphere;
        if (req.image.width() == 40 && req.image.height() == 30)
            ++full_scene;
    }
    CHECK(sphere == 2);
    CHECK(full_scene >= 2);
}

TEST_CASE("generation splits stages and respects the augmentation probability") {
    TexturedFixture f;
    GenerationInputs in;
    in.mesh = &f.mesh;
    in.uvpos = &f.uvpos;
    in.texture_config = f.config;
    GenerationConfig cfg;
    cfg.schedule.stages = {StageConfig{0.2, 8, 1, 30, 990}, StageConfig{0.8, 12, 2, 500, 990}};
    cfg.schedule.total_iterations = 10;
    cfg.schedule.workers = 2;
    cfg.schedule.loss_weights = {0.5, 0.5};
    cfg.envmap_height = 8;
    cfg.envmap_width = 16;
    cfg.sg_probability = 0.0;
    NullGuide guide;
    std::vector<StepLog> logs;
    RunControl control;
    control.on_step = [&](const StepLog &l) { logs.push_back(l); };
    run_scene_agnostic_generation(in, cfg, {}, guide, 5, control);
    REQUIRE(logs.size() == 10);
    for (const StepLog &l : logs) {
        CHECK(l.extra.find("env=aa") != std::string::npos);
        const bool first_stage = l.iteration < 2;
        CHECK((l.extra.find("stage=0") != std::string::npos) == first_stage);
        CHECK(l.t_min == (first_stage ? 30 : 500));
    }

    cfg.sg_probability = 1.0;
    logs.clear();
    run_scene_agnostic_generation(in, cfg, {}, guide, 5, control);
    for (const StepLog &l : logs)
        CHECK(l.extra.find("env=ss") != std::string::npos);
    CHECK(ambient_light_embedding() == std::vector<double>{0.25, 0.0, 0.0, 1.0, 1.0});
}

TEST_CASE("generation sends the ambient embedding and is deterministic") {
    TexturedFixture f;
    GenerationInputs in;
    in.mesh = &f.mesh;
    in.uvpos = &f.uvpos;
    in.texture_config = f.config;
    GenerationConfig cfg;
    cfg.schedule.stages = {StageConfig{1.0, 8, 1, 30, 990}};
    cfg.schedule.total_iterations = 3;
    cfg.sg_probability = 0.0;
    RecordingProvider provider;
    RemoteGuide guide(provider, "gen");
    GuidanceConfig gc;
    gc.prompt = "a teapot";
    RunControl a;
    a.checkpoint = temp_path("gen_a.ck");
    run_scene_agnostic_generation(in, cfg, gc, guide, 9, a);
    REQUIRE(provider.requests.size() == 12);
    for (const ScoreRequest &req : provider.requests) {
        REQUIRE(req.context.class_embedding.size() == 21);
        CHECK(std::vector<double>(req.context.class_embedding.begin(), req.context.class_embedding.begin() + 5) ==
              ambient_light_embedding());
    }
    RunControl b;
    b.checkpoint = temp_path("gen_b.ck");
    run_scene_agnostic_generation(in, cfg, gc, guide, 9, b);
    CHECK(read_file(a.checkpoint) == read_file(b.checkpoint));
}
