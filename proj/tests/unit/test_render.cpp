#include "doctest.h"

#include "sf/core/error.h"
#include "sf/render/brdf.h"
#include "sf/render/env_sampler.h"
#include "sf/render/renderer.h"

#include <cmath>
#include <random>

using namespace sf;

namespace {

Vec3 random_hemisphere(std::mt19937_64 &rng, Vec3 n) {
    std::normal_distribution<double> g;
    for (;;) {
        Vec3 v{g(rng), g(rng), g(rng)};
        v = normalize(v);
        if (dot(v, n) > 1e-3)
            return v;
        if (dot(v, n) < -1e-3)
            return -v;
    }
}

TriangleMesh one_triangle() {
    TriangleMesh m;
    m.positions = {{-0.4, -0.3, 0}, {0.4, -0.3, 0}, {0, 0.4, 0}};
    m.normals = {{0, 0, 1}, {0, 0, 1}, {0, 0, 1}};
    m.uvs = {{0, 0}, {1, 0}, {0.5, 1}};
    m.faces = {{0, 1, 2}};
    return m;
}

EnvironmentMap random_hdr(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    EnvironmentMap env(h, w, MapKind::Hdr);
    for (std::size_t b = 0; b < env.bin_count(); ++b)
        env.set_base(b, {u(rng), u(rng), u(rng)});
    return env;
}

// LDR map whose upper rows are far lights and a column band is near lights.
EnvironmentMap ldr_with_regions(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    EnvironmentMap env(h, w, MapKind::Ldr);
    LightRegions r;
    r.far_mask.assign(env.bin_count(), 0);
    r.near_mask.assign(env.bin_count(), 0);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const std::size_t b = static_cast<std::size_t>(i) * w + j;
            env.set_base(b, {u(rng), u(rng), u(rng)});
            if (i < h / 4)
                r.far_mask[b] = 1;
            else if (i < h / 2 && j >= w / 4 && j < w / 2)
                r.near_mask[b] = 1;
        }
    env.set_regions(r);
    env.set_scales({1.7, 2.3});
    return env;
}

Camera sphere_camera(int res) {
    Camera cam;
    cam.elevation_deg = 20;
    cam.distance = 2.0;
    cam.resolution = res;
    return cam;
}

double weighted_sum(const Image &img, const Image &weights) {
    double s = 0;
    for (std::size_t i = 0; i < img.data().size(); ++i)
        s += img.data()[i] * weights.data()[i];
    return s;
}

Image random_upstream(int res, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Image img(res, res, 3);
    for (double &v : img.data())
        v = u(rng);
    return img;
}

} // namespace

TEST_CASE("Lambertian BRDF is albedo over pi") {
    std::mt19937_64 rng(1);
    const MaterialT<double> m{{0.9, 0.9, 0.9}, 0.5, 0.0};
    const Vec3 n{0, 0, 1};
    for (int k = 0; k < 100; ++k) {
        const Vec3 wi = random_hemisphere(rng, n), wo = random_hemisphere(rng, n);
        const auto f = eval_brdf(m, n, wi, wo, false);
        for (int c = 0; c < 3; ++c)
            CHECK(f[c] == doctest::Approx(0.9 / kPi).epsilon(1e-15));
    }
    const auto below = eval_brdf(m, n, Vec3{0, 0.6, -0.8}, n, true);
    CHECK(below[0] == 0.0);
}

TEST_CASE("GGX distribution at the normal") {
    for (double kr : {0.08, 0.3, 0.7, 1.0}) {
        const double alpha = kr * kr;
        CHECK(ggx_d(alpha, 1.0) == doctest::Approx(1.0 / (kPi * alpha * alpha)).epsilon(1e-12));
    }
}

TEST_CASE("BRDF is reciprocal and non-negative") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    const Vec3 n = normalize(Vec3{0.2, 1.0, -0.3});
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
        const MaterialT<double> m{{u(rng), u(rng), u(rng)}, 0.08 + 0.92 * u(rng), u(rng)};
        const Vec3 a = random_hemisphere(rng, n), b = random_hemisphere(rng, n);
        const auto f1 = eval_brdf(m, n, a, b), f2 = eval_brdf(m, n, b, a);
        for (int c = 0; c < 3; ++c) {
            CHECK(f1[c] >= 0);
            worst = std::max(worst, std::abs(f1[c] - f2[c]) / std::max(1.0, std::abs(f1[c])));
        }
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("BRDF sampling pdf matches brdf_pdf and integrates to one") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    const Vec3 n{0, 1, 0};
    const MaterialT<double> m{{0.8, 0.5, 0.2}, 0.4, 0.6};
    const Vec3 wo = normalize(Vec3{0.3, 0.8, 0.1});
    for (int k = 0; k < 200; ++k) {
        const auto s = sample_brdf(m, n, wo, true, u(rng), u(rng), u(rng));
        if (s.pdf > 0)
            CHECK(s.pdf == doctest::Approx(brdf_pdf(m, n, s.wi, wo, true)).epsilon(1e-9));
    }
    // Uniform-sphere estimate of the pdf integral over the upper hemisphere.
    double acc = 0;
    const int N = 400000;
    std::normal_distribution<double> g;
    for (int k = 0; k < N; ++k) {
        const Vec3 w = normalize(Vec3{g(rng), g(rng), g(rng)});
        acc += brdf_pdf(m, n, w, wo, true) * 4 * kPi;
    }
    CHECK(acc / N == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform environment has pdf 1/(4 pi)") {
    const EnvironmentMap env = EnvironmentMap::constant(16, 32, 0.7);
    const EnvSampler s(env);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 500; ++k) {
        const auto d = s.sample(u(rng), u(rng));
        CHECK(std::abs(d.pdf - 1.0 / (4 * kPi)) < 1e-6);
        CHECK(std::abs(length(d.dir) - 1.0) < 1e-12);
        CHECK(std::abs(s.pdf(d.dir) - 1.0 / (4 * kPi)) < 1e-6);
    }
}

TEST_CASE("zero-energy environment is rejected") {
    const EnvironmentMap env = EnvironmentMap::constant(8, 16, 0.0);
    CHECK_THROWS_WITH(EnvSampler{env}, doctest::Contains("environment has zero energy"));
}

TEST_CASE("single bright bin captures nearly every draw") {
    const int H = 16, W = 32;
    EnvironmentMap env = EnvironmentMap::constant(H, W, 1e-3);
    const int row = 5, col = 11;
    env.set_base(static_cast<std::size_t>(row) * W + col, {1e4, 1e4, 1e4});
    // Brute-force target probability of the bright bin.
    double bright = 0, total = 0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const double w = env.base(i, j).x * bin_solid_angle(i, H, W);
            total += w;
            if (i == row && j == col)
                bright = w;
        }
    REQUIRE(bright / total >= 0.99);
    const EnvSampler s(env);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    int hit = 0;
    const int N = 20000;
    for (int k = 0; k < N; ++k) {
        const auto b = bin_from_direction(s.sample(u(rng), u(rng)).dir, H, W);
        hit += (b.row == row && b.col == col);
    }
    CHECK(static_cast<double>(hit) / N >= 0.99);
}

TEST_CASE("environment draws pass a chi-square test on an 8x4 map") {
    const int H = 4, W = 8;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    EnvironmentMap env(H, W, MapKind::Hdr);
    for (std::size_t b = 0; b < env.bin_count(); ++b)
        env.set_base(b, {0.1 + u(rng), 0.1 + u(rng), 0.1 + u(rng)});
    std::vector<double> expect(env.bin_count());
    double total = 0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const Vec3 v = env.base(i, j);
            expect[i * W + j] = (v.x + v.y + v.z) / 3 * bin_solid_angle(i, H, W);
            total += expect[i * W + j];
        }
    const EnvSampler s(env);
    const int N = 200000;
    std::vector<int> counts(env.bin_count(), 0);
    double pdf_integral = 0;
    for (int k = 0; k < N; ++k) {
        const auto d = s.sample(u(rng), u(rng));
        const auto b = bin_from_direction(d.dir, H, W);
        CHECK_MESSAGE(static_cast<std::size_t>(b.row * W + b.col) == d.bin, "draw left its bin");
        ++counts[b.row * W + b.col];
    }
    double chi2 = 0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double e = N * expect[b] / total;
        chi2 += (counts[b] - e) * (counts[b] - e) / e;
        pdf_integral += s.pdf_bin(b) * bin_solid_angle(static_cast<int>(b) / W, H, W);
    }
    // 99th percentile of chi-square with 31 degrees of freedom.
    CHECK(chi2 < 52.1914);
    CHECK(pdf_integral == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("white furnace") {
    const TriangleMesh sphere = make_icosphere(0.5, 4);
    const SceneGeometry geo({{&sphere, {}}}, false);
    const EnvironmentMap env = EnvironmentMap::constant(16, 32, 1.0);
    ObjectMaterial mat;
    mat.constant = {1, 1, 1, 1, 0};
    mat.specular = false;
    const RenderScene scene{&geo, {mat}, &env, nullptr};
    RenderSettings rs;
    rs.spp = 256;
    const RenderOutput out = render(scene, sphere_camera(24), rs);
    double sum = 0;
    int n = 0;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            if (out.alpha.at(x, y) == 1.0) {
                sum += out.radiance.at(x, y, 1);
                ++n;
            }
    REQUIRE(n > 100);
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("radiance is linear in the environment and seed-deterministic") {
    const TriangleMesh sphere = make_icosphere(0.5, 2);
    const SceneGeometry geo({{&sphere, {}}}, true);
    const EnvironmentMap env = random_hdr(8, 16, 4);
    const EnvSampler sampler(env);
    ObjectMaterial mat;
    mat.constant = {0.7, 0.4, 0.2, 0.35, 0.3};
    RenderSettings rs;
    rs.spp = 8;
    rs.include_floor = true;
    const Camera cam = sphere_camera(16);
    const RenderOutput base = render({&geo, {mat}, &env, &sampler}, cam, rs);
    const RenderOutput again = render({&geo, {mat}, &env, &sampler}, cam, rs);
    CHECK(base.radiance == again.radiance);
    CHECK(base.floor_radiance == again.floor_radiance);
    CHECK(base.alpha == again.alpha);
    CHECK(base.normal == again.normal);

    for (double s : {0.25, 2.0, 4.0, 3.7}) {
        EnvironmentMap scaled = env;
        for (double &v : scaled.grid())
            v *= s;
        const RenderOutput out = render({&geo, {mat}, &scaled, &sampler}, cam, rs);
        const bool pow2 = s != 3.7;
        for (std::size_t i = 0; i < base.radiance.data().size(); ++i) {
            const double want = s * base.radiance.data()[i];
            if (pow2)
                CHECK(out.radiance.data()[i] == want);
            else
                CHECK(out.radiance.data()[i] == doctest::Approx(want).epsilon(1e-12));
        }
    }

    RenderSettings other = rs;
    other.seed = 99;
    CHECK_FALSE(render({&geo, {mat}, &env, &sampler}, cam, other).radiance == base.radiance);
}

TEST_CASE("auxiliary buffers") {
    const TriangleMesh sphere = make_icosphere(0.5, 3);
    const SceneGeometry geo({{&sphere, {}}}, false);
    const EnvironmentMap env = EnvironmentMap::constant(8, 16, 1.0);
    const RenderScene scene{&geo, {ObjectMaterial{}}, &env, nullptr};
    RenderSettings rs;
    rs.spp = 4;
    const RenderOutput out = render(scene, sphere_camera(32), rs);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double a = out.alpha.at(x, y), v = out.view_dot_normal.at(x, y);
            CHECK((a >= 0 && a <= 1 && v >= 0 && v <= 1));
            const Vec3 n{out.normal.at(x, y, 0), out.normal.at(x, y, 1), out.normal.at(x, y, 2)};
            if (a == 0)
                CHECK(length(n) == 0.0);
            else if (length(n) > 0)
                CHECK(length(n) == doctest::Approx(1.0).epsilon(1e-12));
            for (int c = 0; c < 3; ++c)
                CHECK((std::isfinite(out.radiance.at(x, y, c)) && out.radiance.at(x, y, c) >= 0));
        }
    // Center pixel sees the sphere head-on.
    CHECK(out.view_dot_normal.at(16, 16) > 0.95);
    CHECK(out.alpha.at(0, 0) == 0.0);
}

TEST_CASE("floor under the sphere is darker than the open floor") {
    const TriangleMesh sphere = make_icosphere(0.5, 4);
    const SceneGeometry geo({{&sphere, {}}}, true);
    const EnvironmentMap env = EnvironmentMap::constant(16, 32, 1.0);
    ObjectMaterial mat;
    mat.constant = {1, 1, 1, 1, 0};
    mat.specular = false;
    const RenderScene scene{&geo, {mat}, &env, nullptr};
    const double yf = geo.floor_height();

    // Cosine-weighted unoccluded fraction of the hemisphere above (d, yf, 0)
    // for an analytic sphere of radius 0.5 at the origin, by midpoint quadrature.
    auto oracle = [&](double d) {
        const int NT = 400, NP = 800;
        double acc = 0;
        for (int i = 0; i < NT; ++i) {
            const double th = (i + 0.5) * 0.5 * kPi / NT;
            for (int j = 0; j < NP; ++j) {
                const double ph = (j + 0.5) * 2 * kPi / NP;
                const Vec3 w{std::sin(th) * std::cos(ph), std::cos(th), std::sin(th) * std::sin(ph)};
                const Vec3 oc = Vec3{d, yf, 0};
                const double b = dot(oc, w), c = dot(oc, oc) - 0.25;
                const bool blocked = b * b - c > 0 && -b - std::sqrt(std::max(0.0, b * b - c)) > 0;
                if (!blocked)
                    acc += std::cos(th) * std::sin(th);
            }
        }
        return acc * (0.5 * kPi / NT) * (2 * kPi / NP) / kPi;
    };

    auto floor_value = [&](double d) {
        Camera cam;
        cam.look_at = {d, yf, 0};
        cam.elevation_deg = 60;
        cam.azimuth_deg = 90;
        cam.distance = 1.5;
        cam.resolution = 3;
        cam.fov_override = 0.01;
        RenderSettings rs;
        rs.spp = 8192;
        rs.include_floor = true;
        const RenderOutput out = render(scene, cam, rs);
        REQUIRE(out.floor_alpha.at(1, 1) == 1.0);
        return out.floor_radiance.at(1, 1, 0);
    };
    const double near_d = 0.25, far_d = 6.0;
    const double near_v = floor_value(near_d), far_v = floor_value(far_d);
    CHECK(near_v / far_v < 1.0);
    CHECK(near_v == doctest::Approx(oracle(near_d)).epsilon(0.03));
    CHECK(far_v == doctest::Approx(oracle(far_d)).epsilon(0.03));
}

TEST_CASE("light-scale gradients match seeded finite differences") {
    const TriangleMesh sphere = make_icosphere(0.5, 3);
    const SceneGeometry geo({{&sphere, {}}}, true);
    const EnvironmentMap env = ldr_with_regions(16, 32, 8);
    const EnvSampler sampler(env);
    ObjectMaterial mat;
    mat.constant = {0.6, 0.5, 0.4, 0.4, 0.2};
    RenderSettings rs;
    rs.spp = 4;
    rs.include_floor = true;
    const Camera cam = sphere_camera(32);
    const Image up = random_upstream(32, 1), upf = random_upstream(32, 2);
    const RenderGradients g = render_gradients({&geo, {mat}, &env, &sampler}, cam, rs, up, &upf);

    auto loss = [&](LightScales s) {
        EnvironmentMap e = env;
        e.set_scales(s);
        const RenderOutput out = render({&geo, {mat}, &e, &sampler}, cam, rs);
        return weighted_sum(out.radiance, up) + weighted_sum(out.floor_radiance, upf);
    };
    const double h = 1e-3;
    const LightScales s0 = env.scales();
    const double fd_far = (loss({s0.far + h, s0.near}) - loss({s0.far - h, s0.near})) / (2 * h);
    const double fd_near = (loss({s0.far, s0.near + h}) - loss({s0.far, s0.near - h})) / (2 * h);
    CHECK(g.scales.far != 0.0);
    CHECK(g.scales.near != 0.0);
    CHECK(std::abs(g.scales.far - fd_far) <= 1e-3 * std::abs(fd_far));
    CHECK(std::abs(g.scales.near - fd_near) <= 1e-3 * std::abs(fd_near));
}

TEST_CASE("texel gradients match seeded finite differences") {
    const TriangleMesh tri = one_triangle();
    const SceneGeometry geo({{&tri, {}}}, false);
    const EnvironmentMap env = random_hdr(8, 16, 9);
    const EnvSampler sampler(env);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.2, 0.8);
    TextureMap map(8, 8);
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i)
            map.set_texel(i, j, {u(rng), u(rng), u(rng), u(rng), u(rng)});
    const TextureMap guide = map;
    Camera cam;
    cam.resolution = 16;
    RenderSettings rs;
    rs.spp = 4;
    const Image up = random_upstream(16, 5);
    ObjectMaterial mat;
    mat.texture = &map;
    mat.sampling_texture = &guide;
    const RenderGradients g = render_gradients({&geo, {mat}, &env, &sampler}, cam, rs, up);

    auto loss = [&](const TextureMap &m) {
        ObjectMaterial mm = mat;
        mm.texture = &m;
        return weighted_sum(render({&geo, {mm}, &env, &sampler}, cam, rs).radiance, up);
    };
    const double h = 1e-5;
    int checked = 0;
    for (int t : {0, 9, 27, 36, 45, 60})
        for (int c = 0; c < kPbrChannels; ++c) {
            TextureMap plus = map, minus = map;
            plus.grid().at(t % 8, t / 8, c) += h;
            minus.grid().at(t % 8, t / 8, c) -= h;
            const double fd = (loss(plus) - loss(minus)) / (2 * h);
            const double an = g.texture[0].at(t % 8, t / 8, c);
            if (std::abs(fd) < 1e-8) {
                CHECK(std::abs(an) < 1e-7);
                continue;
            }
            ++checked;
            CHECK_MESSAGE(std::abs(an - fd) <= 1e-4 * std::abs(fd), "texel ", t, " channel ", c);
        }
    CHECK(checked > 10);
}

TEST_CASE("texture MLP gradients match seeded finite differences") {
    const TriangleMesh tri = one_triangle();
    const UvPositionMap uvpos = rasterize_uv_positions(tri, 16, 16);
    NeuralTextureConfig cfg;
    cfg.encoding.levels = 4;
    cfg.encoding.log2_table_size = 12;
    cfg.hidden = 8;
    NeuralTexture tex(cfg, 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 0.5);
    for (std::size_t i = tex.w2_offset(); i < tex.param_count(); ++i)
        tex.params()[i] = g(rng);
    for (std::size_t i = 0; i < tex.w1_offset(); ++i)
        tex.params()[i] = 0.3 * g(rng);

    const EnvironmentMap env = random_hdr(8, 16, 10);
    const EnvSampler sampler(env);
    const TextureMap guide = bake_texture_map(tex, uvpos);
    Camera cam;
    cam.resolution = 16;
    RenderSettings rs;
    rs.spp = 4;
    const Image up = random_upstream(16, 6);
    const TexturedObject obj{&tri, &tex, &uvpos, true};
    const TexturedGradients grads = render_with_gradients(obj, env, cam, rs, up, nullptr, &guide, &sampler);

    auto loss = [&](const NeuralTexture &t) {
        const TexturedObject o{&tri, &t, &uvpos, true};
        return weighted_sum(render(o, env, cam, rs, &guide, &sampler).radiance, up);
    };
    std::vector<std::size_t> probe;
    for (std::size_t k = 0; k < 6; ++k) {
        probe.push_back(tex.w1_offset() + k * 7);
        probe.push_back(tex.w2_offset() + k * 5);
    }
    for (std::uint32_t k = 0; k < 6 && k < grads.texture.touched.size(); ++k)
        probe.push_back(grads.texture.touched[k * grads.texture.touched.size() / 6]);
    const double h = 1e-5;
    int checked = 0;
    for (std::size_t p : probe) {
        NeuralTexture plus = tex, minus = tex;
        plus.params()[p] += h;
        minus.params()[p] -= h;
        const double fd = (loss(plus) - loss(minus)) / (2 * h);
        const double an = grads.texture.values[p];
        if (std::abs(fd) < 1e-9)
            continue;
        ++checked;
        CHECK_MESSAGE(std::abs(an - fd) <= 5e-3 * std::abs(fd), "param ", p, " fd ", fd, " analytic ", an);
    }
    CHECK(checked >= 12);
}

TEST_CASE("zero upstream gives zero gradients") {
    const TriangleMesh sphere = make_icosphere(0.5, 2);
    const SceneGeometry geo({{&sphere, {}}}, true);
    const EnvironmentMap env = ldr_with_regions(8, 16, 3);
    TextureMap map = TextureMap::constant(4, 4, {0.5, 0.5, 0.5, 0.5, 0.5});
    ObjectMaterial mat;
    mat.texture = &map;
    RenderSettings rs;
    rs.spp = 2;
    rs.include_floor = true;
    const Image zero(16, 16, 3);
    const RenderGradients g = render_gradients({&geo, {mat}, &env, nullptr}, sphere_camera(16), rs, zero, &zero);
    for (double v : g.texture[0].data())
        CHECK(v == 0.0);
    CHECK(g.scales.far == 0.0);
    CHECK(g.scales.near == 0.0);
}

TEST_CASE("render errors") {
    const TriangleMesh tri = one_triangle();
    const UvPositionMap uvpos = rasterize_uv_positions(tri, 8, 8);
    NeuralTextureConfig cfg;
    cfg.encoding.levels = 2;
    cfg.encoding.log2_table_size = 10;
    NeuralTexture tex(cfg, 1);
    const EnvironmentMap env = EnvironmentMap::constant(8, 16, 1.0);
    Camera cam;
    cam.resolution = 8;
    RenderSettings rs;
    rs.spp = 1;
    const TexturedObject obj{&tri, &tex, &uvpos, true};
    CHECK_THROWS_WITH(render_with_gradients(obj, env, cam, rs, Image(7, 8, 3)), doctest::Contains("gradient shape mismatch"));
    tex.params()[tex.w1_offset()] = std::nan("");
    CHECK_THROWS_WITH(render(obj, env, cam, rs), doctest::Contains("NaN in parameters"));
    rs.spp = 0;
    CHECK_THROWS(render(obj, env, cam, rs));
}

TEST_CASE("light basis recombines to the scaled render") {
    const TriangleMesh sphere = make_icosphere(0.5, 2);
    const SceneGeometry geo({{&sphere, {}}}, true);
    EnvironmentMap env = ldr_with_regions(16, 32, 9);
    const EnvSampler sampler(env);
    ObjectMaterial mat;
    mat.constant = {0.6, 0.5, 0.4, 0.4, 0.2};
    RenderSettings rs;
    rs.spp = 4;
    rs.include_floor = true;
    const Camera cam = sphere_camera(16);
    const LightBasis basis = render_light_basis({&geo, {mat}, &env, &sampler}, cam, rs);
    for (LightScales s : {LightScales{1.0, 1.0}, LightScales{5.0, 0.5}, LightScales{0.0, 3.0}}) {
        env.set_scales(s);
        const RenderOutput direct = render({&geo, {mat}, &env, &sampler}, cam, rs);
        const RenderOutput mixed = basis.combine(s);
        CHECK(mixed.alpha == direct.alpha);
        double err = 0, peak = 0;
        for (std::size_t i = 0; i < direct.radiance.data().size(); ++i) {
            err = std::max(err, std::abs(mixed.radiance.data()[i] - direct.radiance.data()[i]));
            err = std::max(err, std::abs(mixed.floor_radiance.data()[i] - direct.floor_radiance.data()[i]));
            peak = std::max(peak, direct.radiance.data()[i]);
        }
        CHECK(peak > 0);
        CHECK(err <= 1e-12 * std::max(1.0, peak));
    }
    const EnvironmentMap hdr = random_hdr(8, 16, 1);
    CHECK_THROWS_AS(render_light_basis({&geo, {mat}, &hdr, nullptr}, cam, rs), Error);
}
