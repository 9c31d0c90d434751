#include "sf/render/renderer.h"

#include "sf/core/error.h"
#include "sf/core/parallel.h"
#include "sf/core/rng.h"
#include "sf/render/brdf.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

namespace sf {

void RenderSettings::validate() const {
    require(spp >= 1, "spp must be at least 1");
    require(resolution >= 0, "render resolution must be non-negative");
}

namespace {

constexpr double kShadowOffset = 1e-6;
constexpr std::uint64_t kFloorSalt = 0xf100f100f100f100ULL;
constexpr int kDraws = 7; // jitter 2, light 2, BRDF 3
constexpr int kRowBatch = 64;

const PbrSample kFloorMaterial{1.0, 1.0, 1.0, 1.0, 0.0};

struct Context {
    const RenderScene &scene;
    const SceneGeometry &geo;
    const EnvironmentMap &env;
    const EnvSampler &sampler;
    const Camera &camera;
    const RenderSettings &settings;
    int res;
};

// Latin hypercube over the spp samples of one pixel: in every dimension each
// of the spp strata of [0, 1) receives exactly one jittered draw. Every draw is
// still marginally uniform, so estimates stay unbiased.
class PixelSamples {
public:
    PixelSamples(std::uint64_t seed, std::uint64_t pixel, int spp) : spp_(spp), strata_(kDraws * spp) {
        SampleStream stream(seed, pixel);
        for (int d = 0; d < kDraws; ++d) {
            std::uint32_t *perm = strata_.data() + static_cast<std::size_t>(d) * spp;
            for (int s = 0; s < spp; ++s)
                perm[s] = static_cast<std::uint32_t>(s);
            for (int s = spp - 1; s > 0; --s)
                std::swap(perm[s], perm[stream.next_u64() % static_cast<std::uint64_t>(s + 1)]);
        }
        jitter_ = stream;
    }

    void draw(int s, double *u) {
        for (int d = 0; d < kDraws; ++d)
            u[d] = (strata_[static_cast<std::size_t>(d) * spp_ + s] + jitter_.next()) / spp_;
    }

private:
    int spp_;
    std::vector<std::uint32_t> strata_;
    SampleStream jitter_{0, 0};
};

std::size_t flat_bin(Vec3 dir, int h, int w) {
    const auto b = bin_from_direction(dir, h, w);
    return static_cast<std::size_t>(b.row) * w + b.col;
}

// One MIS-weighted estimate per strategy; `emit(wi, L, weight, bin)` receives
// the unoccluded contributions, whose value is L * f(wi) * weight.
template <class Emit>
void shade_point(const Context &ctx, const SceneGeometry::Surface &surf, Vec3 wo, const MaterialT<double> &guide,
                 bool specular, bool test_floor, const double *u, Emit &&emit) {
    const Vec3 ng = surf.geometric_normal, ns = surf.shading_normal;
    const Vec3 origin = surf.position + ng * kShadowOffset;

    const auto ls = ctx.sampler.sample(u[2], u[3]);
    if (ls.pdf > 0 && dot(ls.dir, ng) > 0 && dot(ls.dir, ns) > 0 && !ctx.geo.occluded({origin, ls.dir}, test_floor)) {
        const double pb = brdf_pdf(guide, ns, ls.dir, wo, specular);
        const double w = ls.pdf * ls.pdf / (ls.pdf * ls.pdf + pb * pb);
        emit(ls.dir, ctx.env.radiance(ls.bin), dot(ns, ls.dir) * w / ls.pdf, ls.bin);
    }

    const auto bs = sample_brdf(guide, ns, wo, specular, u[4], u[5], u[6]);
    if (bs.pdf > 0 && dot(bs.wi, ng) > 0 && dot(bs.wi, ns) > 0 && !ctx.geo.occluded({origin, bs.wi}, test_floor)) {
        const std::size_t bin = flat_bin(bs.wi, ctx.env.height(), ctx.env.width());
        const double pl = ctx.sampler.pdf_bin(bin);
        const double w = bs.pdf * bs.pdf / (bs.pdf * bs.pdf + pl * pl);
        emit(bs.wi, ctx.env.radiance(bin), dot(ns, bs.wi) * w / bs.pdf, bin);
    }
}

struct ObjectSample {
    int object;
    const TextureMap::Taps *taps; // null for constant materials
    const PbrSample &value;
    bool specular;
    Vec3 n, wo;
};

// Visits every shading contribution of pixel (x, y) in the object pass;
// returns the number of samples that hit an object.
template <class Visit> int trace_object_pixel(const Context &ctx, int x, int y, Visit &&visit) {
    PixelSamples samples(ctx.settings.seed, static_cast<std::uint64_t>(y) * ctx.res + x, ctx.settings.spp);
    int hits = 0;
    double u[kDraws];
    for (int s = 0; s < ctx.settings.spp; ++s) {
        samples.draw(s, u);
        const Ray ray = ctx.camera.generate_ray(x + u[0], y + u[1], ctx.res, ctx.res);
        const SurfaceHit hit = ctx.geo.intersect_objects(ray);
        if (!hit.valid())
            continue;
        ++hits;
        const auto surf = ctx.geo.surface(hit, ray);
        const ObjectMaterial &mat = ctx.scene.materials[hit.object];
        TextureMap::Taps taps{};
        PbrSample value = mat.constant;
        if (mat.texture) {
            taps = mat.texture->taps(surf.uv);
            value = mat.texture->sample(taps);
        }
        const PbrSample guide_value = mat.sampling_texture ? mat.sampling_texture->sample(surf.uv) : value;
        const Vec3 wo = -ray.dir;
        const ObjectSample os{hit.object, mat.texture ? &taps : nullptr, value, mat.specular, surf.shading_normal, wo};
        shade_point(ctx, surf, wo, to_material(guide_value), mat.specular, ctx.settings.include_floor, u,
                    [&](Vec3 wi, Vec3 L, double weight, std::size_t bin) { visit(os, wi, L, weight, bin); });
    }
    return hits;
}

template <class Visit> int trace_floor_pixel(const Context &ctx, int x, int y, Visit &&visit) {
    PixelSamples samples(ctx.settings.seed ^ kFloorSalt, static_cast<std::uint64_t>(y) * ctx.res + x, ctx.settings.spp);
    int hits = 0;
    double u[kDraws];
    const MaterialT<double> white = to_material(kFloorMaterial);
    for (int s = 0; s < ctx.settings.spp; ++s) {
        samples.draw(s, u);
        const Ray ray = ctx.camera.generate_ray(x + u[0], y + u[1], ctx.res, ctx.res);
        const SurfaceHit hit = ctx.geo.intersect_floor(ray);
        if (!hit.valid())
            continue;
        ++hits;
        const auto surf = ctx.geo.surface(hit, ray);
        const Vec3 wo = -ray.dir;
        shade_point(ctx, surf, wo, white, false, false, u, [&](Vec3 wi, Vec3 L, double weight, std::size_t bin) {
            visit(surf.shading_normal, wo, wi, L, weight, bin);
        });
    }
    return hits;
}

Vec3 brdf_rgb(const MaterialT<double> &m, Vec3 n, Vec3 wi, Vec3 wo, bool specular) {
    const auto f = eval_brdf(m, n, wi, wo, specular);
    return {f[0], f[1], f[2]};
}

void validate_scene(const RenderScene &scene) {
    require(scene.geometry != nullptr && scene.env != nullptr, "render scene needs geometry and an environment");
    require(scene.materials.size() == scene.geometry->instances().size(), "one material per scene instance required");
    scene.env->validate();
    for (const auto &m : scene.materials) {
        if (m.texture)
            m.texture->validate();
        else
            for (double v : m.constant)
                if (!std::isfinite(v))
                    fail(ErrorKind::Numeric, "NaN in parameters: constant material");
    }
}

// Owns a sampler when the scene does not provide one.
struct SamplerHolder {
    std::optional<EnvSampler> owned;
    const EnvSampler *ptr = nullptr;
    explicit SamplerHolder(const RenderScene &scene) {
        if (scene.sampler) {
            ptr = scene.sampler;
        } else {
            owned.emplace(*scene.env);
            ptr = &*owned;
        }
        require(ptr->height() == scene.env->height() && ptr->width() == scene.env->width(),
                "environment sampler does not match the environment map");
    }
};

int render_resolution(const Camera &camera, const RenderSettings &settings) {
    return settings.resolution > 0 ? settings.resolution : camera.resolution;
}

} // namespace

RenderOutput render(const RenderScene &scene, const Camera &camera, const RenderSettings &settings) {
    settings.validate();
    validate_scene(scene);
    SamplerHolder sampler(scene);
    const int res = render_resolution(camera, settings);
    const Context ctx{scene, *scene.geometry, *scene.env, *sampler.ptr, camera, settings, res};
    const double inv_spp = 1.0 / settings.spp;

    RenderOutput out;
    out.radiance = Image(res, res, 3);
    out.alpha = Image(res, res, 1);
    out.normal = Image(res, res, 3);
    out.view_dot_normal = Image(res, res, 1);
    const bool floor = settings.include_floor && scene.geometry->has_floor();
    if (floor) {
        out.floor_radiance = Image(res, res, 3);
        out.floor_alpha = Image(res, res, 1);
    }

    parallel_for(static_cast<std::size_t>(res), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < res; ++x) {
            Vec3 sum{};
            const int hits = trace_object_pixel(ctx, x, y, [&](const ObjectSample &os, Vec3 wi, Vec3 L, double weight, std::size_t) {
                sum += L * brdf_rgb(to_material(os.value), os.n, wi, os.wo, os.specular) * weight;
            });
            const double a = hits * inv_spp;
            for (int c = 0; c < 3; ++c)
                out.radiance.at(x, y, c) = sum[c] * inv_spp;
            out.alpha.at(x, y) = a;

            const Ray center = camera.generate_ray(x + 0.5, y + 0.5, res, res);
            const SurfaceHit hit = ctx.geo.intersect_objects(center);
            if (hit.valid() && hits > 0) {
                const auto surf = ctx.geo.surface(hit, center);
                for (int c = 0; c < 3; ++c)
                    out.normal.at(x, y, c) = surf.shading_normal[c];
                out.view_dot_normal.at(x, y) = std::clamp(dot(-center.dir, surf.shading_normal), 0.0, 1.0);
            }

            if (floor) {
                Vec3 fsum{};
                const int fh = trace_floor_pixel(ctx, x, y, [&](Vec3 n, Vec3 wo, Vec3 wi, Vec3 L, double weight, std::size_t) {
                    fsum += L * brdf_rgb(to_material(kFloorMaterial), n, wi, wo, false) * weight;
                });
                for (int c = 0; c < 3; ++c)
                    out.floor_radiance.at(x, y, c) = fsum[c] * inv_spp;
                out.floor_alpha.at(x, y) = fh * inv_spp;
            }
        }
    });
    return out;
}

namespace {

struct TexelEntry {
    int object;
    std::uint32_t texel;
    std::array<double, kPbrChannels> grad;
};

struct RowGradients {
    std::vector<TexelEntry> entries;
    double far = 0, near = 0;
};

void add_entry(std::vector<TexelEntry> &pixel, int object, std::uint32_t texel, const std::array<double, kPbrChannels> &g,
               double w) {
    for (auto &e : pixel)
        if (e.texel == texel && e.object == object) {
            for (int c = 0; c < kPbrChannels; ++c)
                e.grad[c] += w * g[c];
            return;
        }
    TexelEntry e{object, texel, {}};
    for (int c = 0; c < kPbrChannels; ++c)
        e.grad[c] = w * g[c];
    pixel.push_back(e);
}

void add_scale_grad(const EnvironmentMap &env, std::size_t bin, double dot_base_f, RowGradients &row) {
    if (env.kind() != MapKind::Ldr)
        return;
    switch (env.region(bin)) {
    case RegionId::Far:
        row.far += dot_base_f;
        break;
    case RegionId::Near:
        row.near += dot_base_f;
        break;
    case RegionId::None:
        break;
    }
}

} // namespace

RenderGradients render_gradients(const RenderScene &scene, const Camera &camera, const RenderSettings &settings,
                                 const Image &upstream_radiance, const Image *upstream_floor) {
    settings.validate();
    validate_scene(scene);
    const int res = render_resolution(camera, settings);
    const bool floor = settings.include_floor && scene.geometry->has_floor();
    if (upstream_radiance.width() != res || upstream_radiance.height() != res || upstream_radiance.channels() != 3)
        fail(ErrorKind::InvalidInput, "gradient shape mismatch: upstream radiance");
    if (upstream_floor && (upstream_floor->width() != res || upstream_floor->height() != res ||
                           upstream_floor->channels() != 3))
        fail(ErrorKind::InvalidInput, "gradient shape mismatch: upstream floor radiance");
    SamplerHolder sampler(scene);
    const Context ctx{scene, *scene.geometry, *scene.env, *sampler.ptr, camera, settings, res};
    const double inv_spp = 1.0 / settings.spp;
    const EnvironmentMap &env = *scene.env;

    RenderGradients out;
    for (const auto &m : scene.materials)
        out.texture.push_back(m.texture ? Image(m.texture->width(), m.texture->height(), kPbrChannels) : Image());

    std::vector<RowGradients> rows(kRowBatch);
    for (int y0 = 0; y0 < res; y0 += kRowBatch) {
        const int count = std::min(kRowBatch, res - y0);
        parallel_for(static_cast<std::size_t>(count), [&](std::size_t r) {
            const int y = y0 + static_cast<int>(r);
            RowGradients &row = rows[r];
            row = RowGradients{};
            std::vector<TexelEntry> pixel;
            for (int x = 0; x < res; ++x) {
                const Vec3 up{upstream_radiance.at(x, y, 0), upstream_radiance.at(x, y, 1), upstream_radiance.at(x, y, 2)};
                pixel.clear();
                if (up.x != 0 || up.y != 0 || up.z != 0) {
                    trace_object_pixel(ctx, x, y, [&](const ObjectSample &os, Vec3 wi, Vec3 L, double weight, std::size_t bin) {
                        const Vec3 uL = up * L * (weight * inv_spp);
                        if (os.taps) {
                            const auto f = eval_brdf(to_dual_material(os.value), os.n, wi, os.wo, os.specular);
                            std::array<double, kPbrChannels> g{};
                            for (int c = 0; c < 3; ++c)
                                for (int k = 0; k < kPbrChannels; ++k)
                                    g[k] += uL[c] * f[c].d[k];
                            for (int t = 0; t < 4; ++t)
                                if (os.taps->weight[t] != 0)
                                    add_entry(pixel, os.object, os.taps->texel[t], g, os.taps->weight[t]);
                        }
                        if (env.kind() == MapKind::Ldr && env.region(bin) != RegionId::None) {
                            const Vec3 f = brdf_rgb(to_material(os.value), os.n, wi, os.wo, os.specular);
                            const Vec3 base = env.base(bin);
                            add_scale_grad(env, bin, dot(up * base * f, Vec3{1, 1, 1}) * weight * inv_spp, row);
                        }
                    });
                    row.entries.insert(row.entries.end(), pixel.begin(), pixel.end());
                }
                if (floor && upstream_floor) {
                    const Vec3 fu{upstream_floor->at(x, y, 0), upstream_floor->at(x, y, 1), upstream_floor->at(x, y, 2)};
                    if (fu.x == 0 && fu.y == 0 && fu.z == 0)
                        continue;
                    trace_floor_pixel(ctx, x, y, [&](Vec3 n, Vec3 wo, Vec3 wi, Vec3, double weight, std::size_t bin) {
                        if (env.kind() != MapKind::Ldr || env.region(bin) == RegionId::None)
                            return;
                        const Vec3 f = brdf_rgb(to_material(kFloorMaterial), n, wi, wo, false);
                        add_scale_grad(env, bin, dot(fu * env.base(bin) * f, Vec3{1, 1, 1}) * weight * inv_spp, row);
                    });
                }
            }
        });
        for (int r = 0; r < count; ++r) {
            for (const auto &e : rows[r].entries) {
                Image &img = out.texture[e.object];
                const int w = img.width();
                for (int c = 0; c < kPbrChannels; ++c)
                    img.at(static_cast<int>(e.texel % w), static_cast<int>(e.texel / w), c) += e.grad[c];
            }
            out.scales.far += rows[r].far;
            out.scales.near += rows[r].near;
        }
    }
    return out;
}

RenderOutput LightBasis::combine(const LightScales &scales) const {
    RenderOutput out = ambient;
    auto accumulate = [](Image &dst, const Image &part, double s) {
        if (part.empty())
            return;
        for (std::size_t i = 0; i < dst.data().size(); ++i)
            dst.data()[i] += s * part.data()[i];
    };
    accumulate(out.radiance, far, scales.far);
    accumulate(out.radiance, near, scales.near);
    accumulate(out.floor_radiance, floor_far, scales.far);
    accumulate(out.floor_radiance, floor_near, scales.near);
    return out;
}

LightBasis render_light_basis(const RenderScene &scene, const Camera &camera, const RenderSettings &settings) {
    require(scene.env && scene.env->kind() == MapKind::Ldr, "light basis needs an LDR environment");
    validate_scene(scene);
    const EnvironmentMap &env = *scene.env;
    SamplerHolder sampler(scene);
    auto part = [&](RegionId id) {
        EnvironmentMap m(env.height(), env.width(), MapKind::Hdr);
        for (std::size_t b = 0; b < env.bin_count(); ++b)
            if (env.region(b) == id)
                m.set_base(b, env.base(b));
        return m;
    };
    RenderScene sub = scene;
    sub.sampler = sampler.ptr;
    LightBasis basis;
    const EnvironmentMap ambient = part(RegionId::None);
    sub.env = &ambient;
    basis.ambient = render(sub, camera, settings);
    const EnvironmentMap far = part(RegionId::Far);
    sub.env = &far;
    RenderOutput f = render(sub, camera, settings);
    basis.far = std::move(f.radiance);
    basis.floor_far = std::move(f.floor_radiance);
    const EnvironmentMap near = part(RegionId::Near);
    sub.env = &near;
    RenderOutput n = render(sub, camera, settings);
    basis.near = std::move(n.radiance);
    basis.floor_near = std::move(n.floor_radiance);
    return basis;
}

namespace {

struct BakedScene {
    TextureMap map;
    SceneGeometry geometry;
    RenderScene scene;
};

std::unique_ptr<BakedScene> bake_scene(const TexturedObject &object, const EnvironmentMap &env,
                                       const RenderSettings &settings, const TextureMap *sampling_map,
                                       const EnvSampler *sampler) {
    require(object.mesh && object.texture && object.uvpos, "textured object needs mesh, texture and UV map");
    object.texture->validate();
    auto baked = std::make_unique<BakedScene>();
    baked->map = bake_texture_map(*object.texture, *object.uvpos);
    baked->geometry = SceneGeometry({GeometryInstance{object.mesh, {}}}, settings.include_floor);
    ObjectMaterial mat;
    mat.texture = &baked->map;
    mat.specular = object.specular;
    mat.sampling_texture = sampling_map;
    baked->scene = RenderScene{&baked->geometry, {mat}, &env, sampler};
    return baked;
}

} // namespace

RenderOutput render(const TexturedObject &object, const EnvironmentMap &env, const Camera &camera,
                    const RenderSettings &settings, const TextureMap *sampling_map, const EnvSampler *sampler) {
    const auto baked = bake_scene(object, env, settings, sampling_map, sampler);
    return render(baked->scene, camera, settings);
}

TexturedGradients render_with_gradients(const TexturedObject &object, const EnvironmentMap &env, const Camera &camera,
                                        const RenderSettings &settings, const Image &upstream_radiance,
                                        const Image *upstream_floor, const TextureMap *sampling_map,
                                        const EnvSampler *sampler) {
    const auto baked = bake_scene(object, env, settings, sampling_map, sampler);
    const RenderGradients g = render_gradients(baked->scene, camera, settings, upstream_radiance, upstream_floor);
    TexturedGradients out;
    out.texture.reset(object.texture->param_count());
    bake_backward(*object.texture, *object.uvpos, g.texture[0], out.texture);
    out.scales = g.scales;
    return out;
}

} // namespace sf
