#include "sf/pipeline/config.h"

#include "sf/core/error.h"
#include "sf/guidance/score.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sf {

using json = nlohmann::ordered_json;

namespace {

constexpr double kSumTolerance = 1e-9;

double sum(const std::vector<double> &v) {
    double s = 0;
    for (double x : v)
        s += x;
    return s;
}

} // namespace

void ScheduleConfig::validate() const {
    require(!stages.empty(), "schedule needs at least one stage");
    std::vector<double> fractions;
    for (const StageConfig &s : stages) {
        require(s.fraction > 0, "stage fractions must be positive");
        require(s.resolution > 0 && s.spp > 0, "stage resolution and spp must be positive");
        require(s.t_min >= 0 && s.t_min <= s.t_max && s.t_max < 1000, "stage noise range must satisfy 0 <= t_min <= t_max < 1000");
        fractions.push_back(s.fraction);
    }
    require(std::abs(sum(fractions) - 1.0) <= kSumTolerance, "stage fractions must sum to 1");
    require(lr > 0 && lr_end > 0, "learning rates must be positive");
    require(total_iterations >= 1, "total iterations must be positive");
    require(workers >= 1, "workers must be positive");
    require(static_cast<int>(loss_weights.size()) == workers, "one loss weight per worker");
    for (double w : loss_weights)
        require(w >= 0, "loss weights must be non-negative");
    require(std::abs(sum(loss_weights) - 1.0) <= kSumTolerance, "loss weights must sum to 1");
    require(background.augment_probability >= 0 && background.augment_probability <= 1,
            "background augment probability must lie in [0, 1]");
    require(global_crops.count >= 1, "at least one global crop");
    require(global_crops.scale_min >= 1 && global_crops.scale_min <= global_crops.scale_max,
            "crop scales must satisfy 1 <= min <= max");
    require(lambda_end >= 0 && lambda_end <= 1, "lambda_end must lie in [0, 1]");
}

int ScheduleConfig::stage_start(int stage) const {
    double f = 0;
    for (int k = 0; k < stage; ++k)
        f += stages[k].fraction;
    return static_cast<int>(std::floor(total_iterations * f + kSumTolerance));
}

int ScheduleConfig::stage_index(int iteration) const {
    int k = 0;
    while (k + 1 < static_cast<int>(stages.size()) && iteration >= stage_start(k + 1))
        ++k;
    return k;
}

double ScheduleConfig::learning_rate(int iteration) const {
    if (total_iterations <= 1)
        return lr;
    if (iteration >= total_iterations - 1)
        return lr_end;
    const double f = static_cast<double>(iteration) / (total_iterations - 1);
    return lr + (lr_end - lr) * f;
}

double ScheduleConfig::lambda(int iteration) const { return anneal_lambda(iteration, total_iterations, lambda_end); }

std::pair<int, int> ScheduleConfig::t_range(int iteration) const {
    const StageConfig &s = stages[stage_index(iteration)];
    if (!anneal_t || total_iterations <= 1)
        return {s.t_min, s.t_max};
    const double f = std::min(1.0, static_cast<double>(iteration) / (total_iterations - 1));
    const int hi = static_cast<int>(std::lround(s.t_max - (s.t_max - s.t_min) * f));
    return {s.t_min, std::max(s.t_min, hi)};
}

ScheduleConfig texture_adaptation_schedule() {
    ScheduleConfig s;
    s.stages = {StageConfig{1.0, 512, 128, 500, 990}};
    s.lr = s.lr_end = 0.001;
    s.total_iterations = 4000;
    s.workers = 4;
    s.loss_weights = {0.25, 0.25, 0.25, 0.25};
    s.anneal_t = true;
    return s;
}

ScheduleConfig light_estimation_schedule() {
    ScheduleConfig s;
    s.stages = {StageConfig{1.0, 512, 128, 750, 990}};
    s.lr = 0.01;
    s.lr_end = 0.001;
    s.total_iterations = 2000;
    s.workers = 4;
    s.loss_weights = {1.0 / 6, 1.0 / 6, 1.0 / 6, 0.5};
    s.background.augment_probability = 0.0;
    return s;
}

ScheduleConfig generation_schedule() {
    ScheduleConfig s;
    s.stages = {StageConfig{0.2, 256, 64, 30, 990}, StageConfig{0.8, 512, 128, 500, 990}};
    s.lr = s.lr_end = 0.001;
    s.total_iterations = 4000;
    s.workers = 4;
    s.loss_weights = {0.25, 0.25, 0.25, 0.25};
    return s;
}

CameraSamplingConfig generation_cameras() {
    CameraSamplingConfig c;
    c.count = 72;
    c.elevations = {20.0, 30.0, 45.0};
    c.fov_multiplier_min = 0.6;
    c.fov_multiplier_max = 1.21;
    return c;
}

void RunConfig::validate() const {
    require(version == kConfigVersion, "config version " + std::to_string(version) + " unsupported (expected " +
                                           std::to_string(kConfigVersion) + ")");
    require(render.spp > 0 && render.resolution > 0 && render.eval_spp > 0, "render spp and resolution must be positive");
    require(light.tau_f > 0 && light.tau_n > 0 && light.tau_o > 0 && light.tau_d > 0, "light thresholds must be positive");
    require(light.envmap_height > 0 && light.envmap_width > 0, "environment map size must be positive");
    require(light.fov_multiplier > 0, "light fov multiplier must be positive");
    require(light.object_views > 0 && light.sphere_views > 0, "light view pools must be non-empty");
    light.schedule.validate();
    require(static_cast<int>(light.schedule.loss_weights.size()) == 4,
            "light estimation uses three object workers and one sphere worker");
    texture.schedule.validate();
    generation.schedule.validate();
    require(texture.cameras.count > 0 && generation.cameras.count > 0, "camera pools must be non-empty");
    require(generation.sg_probability >= 0 && generation.sg_probability <= 1, "sg probability must lie in [0, 1]");
    require(generation.sg_c_v_min <= generation.sg_c_v_max, "sg intensity range inverted");
    require(generation.envmap_height > 0 && generation.envmap_width > 0, "environment map size must be positive");
    require(fit.schedule.iterations > 0 && fit.schedule.lr_start > 0 && fit.schedule.lr_end > 0,
            "fit schedule must have positive iterations and learning rates");
    require(fit.texture_size > 0, "fit texture size must be positive");
    require(compose.shadow_threshold > 0 && compose.shadow_threshold < 1, "shadow threshold must lie in (0, 1)");
    require(guidance.cfg_scale > 0, "cfg scale must be positive");
    require(guidance.lora_lr > 0, "lora learning rate must be positive");
    neural_texture.bounds.validate();
}

RunConfig default_run_config() { return RunConfig{}; }

namespace {

// Reads keys of one JSON object and rejects any key it was not asked about.
class Section {
public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        require(j.is_object(), "config: " + path_ + " must be an object");
    }

    template <typename T> void get(const char *key, T &out) {
        seen_.insert(key);
        if (!j_.contains(key))
            return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception &) {
            fail(ErrorKind::InvalidInput, "config: bad value for " + where(key));
        }
    }
    void get(const char *key, Vec3 &out) {
        std::vector<double> v{out.x, out.y, out.z};
        get(key, v);
        require(v.size() == 3, "config: " + where(key) + " needs 3 numbers");
        out = {v[0], v[1], v[2]};
    }
    // Null reads as +inf.
    void get_unbounded(const char *key, double &out) {
        seen_.insert(key);
        if (!j_.contains(key))
            return;
        if (j_.at(key).is_null()) {
            out = std::numeric_limits<double>::infinity();
            return;
        }
        get(key, out);
    }
    bool has(const char *key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    Section child(const char *key) {
        seen_.insert(key);
        return Section(j_.at(key), where(key));
    }
    const json &raw(const char *key) {
        seen_.insert(key);
        return j_.at(key);
    }
    std::string where(const char *key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto &item : j_.items())
            if (!seen_.count(item.key()))
                fail(ErrorKind::InvalidInput, "config: unknown key " + where(item.key().c_str()));
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_schedule(Section s, ScheduleConfig &c) {
    if (s.has("stages")) {
        const json &arr = s.raw("stages");
        require(arr.is_array(), "config: " + s.where("stages") + " must be an array");
        c.stages.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section st(arr[i], s.where("stages") + "[" + std::to_string(i) + "]");
            StageConfig sc;
            st.get("fraction", sc.fraction);
            st.get("resolution", sc.resolution);
            st.get("spp", sc.spp);
            st.get("t_min", sc.t_min);
            st.get("t_max", sc.t_max);
            st.finish();
            c.stages.push_back(sc);
        }
    }
    s.get("lr", c.lr);
    s.get("lr_end", c.lr_end);
    s.get("total_iterations", c.total_iterations);
    s.get("workers", c.workers);
    s.get("loss_weights", c.loss_weights);
    if (s.has("background")) {
        Section b = s.child("background");
        b.get("color", c.background.color);
        b.get("augment_probability", c.background.augment_probability);
        b.finish();
    }
    if (s.has("global_crops")) {
        Section g = s.child("global_crops");
        g.get("count", c.global_crops.count);
        g.get("scale_min", c.global_crops.scale_min);
        g.get("scale_max", c.global_crops.scale_max);
        g.finish();
    }
    s.get("lambda_end", c.lambda_end);
    s.get("anneal_t", c.anneal_t);
    s.finish();
}

void read_cameras(Section s, CameraSamplingConfig &c) {
    s.get("count", c.count);
    s.get("elevations", c.elevations);
    s.get("fov_multiplier_min", c.fov_multiplier_min);
    s.get("fov_multiplier_max", c.fov_multiplier_max);
    s.get("azimuth_jitter_deg", c.azimuth_jitter_deg);
    s.get("distance", c.distance);
    if (s.has("fov_form")) {
        std::string form;
        s.get("fov_form", form);
        c.fov_form = parse_fov_form(form);
    }
    s.finish();
}

void read_size(Section &s, const char *key, int &h, int &w) {
    std::vector<int> v{h, w};
    s.get(key, v);
    require(v.size() == 2, "config: " + s.where(key) + " needs [height, width]");
    h = v[0];
    w = v[1];
}

json schedule_json(const ScheduleConfig &c) {
    json stages = json::array();
    for (const StageConfig &s : c.stages)
        stages.push_back({{"fraction", s.fraction}, {"resolution", s.resolution}, {"spp", s.spp},
                          {"t_min", s.t_min}, {"t_max", s.t_max}});
    const Vec3 bg = c.background.color;
    return {{"stages", stages},
            {"lr", c.lr},
            {"lr_end", c.lr_end},
            {"total_iterations", c.total_iterations},
            {"workers", c.workers},
            {"loss_weights", c.loss_weights},
            {"background", {{"color", {bg.x, bg.y, bg.z}}, {"augment_probability", c.background.augment_probability}}},
            {"global_crops",
             {{"count", c.global_crops.count}, {"scale_min", c.global_crops.scale_min},
              {"scale_max", c.global_crops.scale_max}}},
            {"lambda_end", c.lambda_end},
            {"anneal_t", c.anneal_t}};
}

json cameras_json(const CameraSamplingConfig &c) {
    return {{"count", c.count},
            {"elevations", c.elevations},
            {"fov_multiplier_min", c.fov_multiplier_min},
            {"fov_multiplier_max", c.fov_multiplier_max},
            {"azimuth_jitter_deg", c.azimuth_jitter_deg},
            {"distance", c.distance},
            {"fov_form", std::string(to_string(c.fov_form))}};
}

} // namespace

RunConfig parse_run_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        fail(ErrorKind::InvalidInput, std::string("config: malformed JSON: ") + e.what());
    }
    RunConfig c;
    Section root(doc, "");
    require(root.has("version"), "config: missing version");
    root.get("version", c.version);
    require(c.version == kConfigVersion, "config version " + std::to_string(c.version) + " unsupported (expected " +
                                             std::to_string(kConfigVersion) + ")");
    if (root.has("render")) {
        Section s = root.child("render");
        s.get("spp", c.render.spp);
        s.get("resolution", c.render.resolution);
        s.get("seed", c.render.seed);
        s.get("include_floor", c.render.include_floor);
        s.get("eval_spp", c.render.eval_spp);
        s.finish();
    }
    if (root.has("light")) {
        Section s = root.child("light");
        s.get("tau_f", c.light.tau_f);
        s.get("tau_n", c.light.tau_n);
        s.get("tau_o", c.light.tau_o);
        s.get_unbounded("tau_d", c.light.tau_d);
        read_size(s, "envmap_size", c.light.envmap_height, c.light.envmap_width);
        s.get("min_region_area", c.light.min_region_area);
        s.get("fov_multiplier", c.light.fov_multiplier);
        s.get("object_views", c.light.object_views);
        s.get("sphere_views", c.light.sphere_views);
        if (s.has("schedule"))
            read_schedule(s.child("schedule"), c.light.schedule);
        s.finish();
    }
    if (root.has("texture")) {
        Section s = root.child("texture");
        if (s.has("cameras"))
            read_cameras(s.child("cameras"), c.texture.cameras);
        s.get("use_estimated_light", c.texture.use_estimated_light);
        if (s.has("schedule"))
            read_schedule(s.child("schedule"), c.texture.schedule);
        s.finish();
    }
    if (root.has("generation")) {
        Section s = root.child("generation");
        GenerationConfig &g = c.generation;
        if (s.has("cameras"))
            read_cameras(s.child("cameras"), g.cameras);
        s.get("sg_probability", g.sg_probability);
        s.get("sg_c_r", g.sg_c_r);
        s.get("sg_c_v_min", g.sg_c_v_min);
        s.get("sg_c_v_max", g.sg_c_v_max);
        s.get("sg_b_v", g.sg_b_v);
        s.get("sg_c_y_max", g.sg_c_y_max);
        read_size(s, "envmap_size", g.envmap_height, g.envmap_width);
        if (s.has("schedule"))
            read_schedule(s.child("schedule"), g.schedule);
        s.finish();
    }
    if (root.has("fit")) {
        Section s = root.child("fit");
        s.get("iterations", c.fit.schedule.iterations);
        s.get("lr_start", c.fit.schedule.lr_start);
        s.get("lr_end", c.fit.schedule.lr_end);
        s.get("texture_size", c.fit.texture_size);
        s.finish();
    }
    if (root.has("compose")) {
        Section s = root.child("compose");
        if (s.has("position")) {
            const json &p = s.raw("position");
            if (!p.is_null()) {
                require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(),
                        "config: compose.position needs [x, y]");
                c.compose.position = Vec2{p[0].get<double>(), p[1].get<double>()};
            }
        }
        s.get("size", c.compose.size);
        s.get("elevation", c.compose.elevation);
        s.get("shadow_threshold", c.compose.shadow_threshold);
        s.finish();
    }
    if (root.has("guidance")) {
        Section s = root.child("guidance");
        s.get("prompt", c.guidance.prompt);
        s.get("negative_prompt", c.guidance.negative_prompt);
        s.get("cfg_scale", c.guidance.cfg_scale);
        if (s.has("injection")) {
            Section i = s.child("injection");
            i.get("enabled", c.guidance.injection.enabled);
            i.get("s_c", c.guidance.injection.s_c);
            i.get("p", c.guidance.injection.p);
            i.finish();
        }
        s.get("lora_lr", c.guidance.lora_lr);
        s.get("service_url", c.guidance.service_url);
        s.finish();
    }
    if (root.has("neural_texture")) {
        Section s = root.child("neural_texture");
        HashEncodingConfig &e = c.neural_texture.encoding;
        s.get("levels", e.levels);
        s.get("base_resolution", e.base_resolution);
        s.get("growth", e.growth);
        s.get("log2_table_size", e.log2_table_size);
        s.get("features", e.features);
        s.get("hidden", c.neural_texture.hidden);
        if (s.has("activation")) {
            std::string a;
            s.get("activation", a);
            require(a == "softplus" || a == "relu", "config: neural_texture.activation must be softplus or relu");
            c.neural_texture.activation = a == "relu" ? HiddenActivation::Relu : HiddenActivation::Softplus;
        }
        s.finish();
    }
    root.finish();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig &c) {
    json doc;
    doc["version"] = c.version;
    doc["render"] = {{"spp", c.render.spp},
                     {"resolution", c.render.resolution},
                     {"seed", c.render.seed},
                     {"include_floor", c.render.include_floor},
                     {"eval_spp", c.render.eval_spp}};
    json tau_d = std::isinf(c.light.tau_d) ? json(nullptr) : json(c.light.tau_d);
    doc["light"] = {{"tau_f", c.light.tau_f},
                    {"tau_n", c.light.tau_n},
                    {"tau_o", c.light.tau_o},
                    {"tau_d", tau_d},
                    {"envmap_size", {c.light.envmap_height, c.light.envmap_width}},
                    {"min_region_area", c.light.min_region_area},
                    {"fov_multiplier", c.light.fov_multiplier},
                    {"object_views", c.light.object_views},
                    {"sphere_views", c.light.sphere_views},
                    {"schedule", schedule_json(c.light.schedule)}};
    doc["texture"] = {{"cameras", cameras_json(c.texture.cameras)},
                      {"use_estimated_light", c.texture.use_estimated_light},
                      {"schedule", schedule_json(c.texture.schedule)}};
    const GenerationConfig &g = c.generation;
    doc["generation"] = {{"cameras", cameras_json(g.cameras)},
                         {"sg_probability", g.sg_probability},
                         {"sg_c_r", g.sg_c_r},
                         {"sg_c_v_min", g.sg_c_v_min},
                         {"sg_c_v_max", g.sg_c_v_max},
                         {"sg_b_v", g.sg_b_v},
                         {"sg_c_y_max", g.sg_c_y_max},
                         {"envmap_size", {g.envmap_height, g.envmap_width}},
                         {"schedule", schedule_json(g.schedule)}};
    doc["fit"] = {{"iterations", c.fit.schedule.iterations},
                  {"lr_start", c.fit.schedule.lr_start},
                  {"lr_end", c.fit.schedule.lr_end},
                  {"texture_size", c.fit.texture_size}};
    json pos = c.compose.position ? json::array({c.compose.position->x, c.compose.position->y}) : json(nullptr);
    doc["compose"] = {{"position", pos},
                      {"size", c.compose.size},
                      {"elevation", c.compose.elevation},
                      {"shadow_threshold", c.compose.shadow_threshold}};
    doc["guidance"] = {{"prompt", c.guidance.prompt},
                       {"negative_prompt", c.guidance.negative_prompt},
                       {"cfg_scale", c.guidance.cfg_scale},
                       {"injection",
                        {{"enabled", c.guidance.injection.enabled},
                         {"s_c", c.guidance.injection.s_c},
                         {"p", c.guidance.injection.p}}},
                       {"lora_lr", c.guidance.lora_lr},
                       {"service_url", c.guidance.service_url}};
    const HashEncodingConfig &e = c.neural_texture.encoding;
    doc["neural_texture"] = {{"levels", e.levels},
                             {"base_resolution", e.base_resolution},
                             {"growth", e.growth},
                             {"log2_table_size", e.log2_table_size},
                             {"features", e.features},
                             {"hidden", c.neural_texture.hidden},
                             {"activation",
                              c.neural_texture.activation == HiddenActivation::Relu ? "relu" : "softplus"}};
    return doc.dump(2) + "\n";
}

} // namespace sf
