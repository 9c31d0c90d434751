#include "doctest.h"

#include "sf/core/error.h"
#include "sf/lighting/environment.h"
#include "sf/lighting/light_model.h"

#include <cmath>
#include <random>

using namespace sf;

namespace {

double wrap_pi(double a) {
    while (a > kPi)
        a -= 2 * kPi;
    while (a < -kPi)
        a += 2 * kPi;
    return a;
}

EnvironmentMap map_with_intensity(int h, int w, const std::vector<double> &values) {
    EnvironmentMap env(h, w, MapKind::Ldr);
    for (std::size_t b = 0; b < values.size(); ++b) {
        const double c = values[b] / std::sqrt(3.0);
        env.set_base(b, {c, c, c});
    }
    return env;
}

} // namespace

TEST_CASE("bin centers map back to their own bin") {
    const int H = 256, W = 512;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const auto b = bin_from_direction(bin_center_direction(i, j, H, W), H, W);
            CHECK_MESSAGE((b.row == i && b.col == j), "bin ", i, ",", j);
            if (b.row != i || b.col != j)
                return;
        }
}

TEST_CASE("direction to bin to direction stays within half a bin") {
    const int H = 256, W = 512;
    std::mt19937_64 gen(5);
    std::normal_distribution<double> n;
    for (int k = 0; k < 20000; ++k) {
        const Vec3 d = normalize(Vec3{n(gen), n(gen), n(gen)});
        const auto b = bin_from_direction(d, H, W);
        double el0, az0, el1, az1;
        angles_from_direction(d, el0, az0);
        angles_from_direction(bin_center_direction(b.row, b.col, H, W), el1, az1);
        CHECK(std::abs(el0 - el1) <= 0.5 * kPi / H + 1e-12);
        CHECK(std::abs(wrap_pi(az0 - az1)) <= kPi / W + 1e-12);
    }
}

TEST_CASE("lat-long conventions") {
    double el, az;
    angles_from_direction({0, 1, 0}, el, az);
    CHECK(el == doctest::Approx(kPi / 2));
    CHECK(bin_from_direction({0, 1, 0}, 4, 8).row == 0);
    CHECK(bin_from_direction({0, -1, 0}, 4, 8).row == 3);
    // Azimuth 0 at the horizon is -Z and lands in column 0; +X is a quarter turn.
    CHECK(bin_from_direction(normalize(Vec3{1e-9, 0.01, -1}), 4, 8).col == 0);
    CHECK(bin_from_direction(normalize(Vec3{1, 0.01, 1e-9}), 4, 8).col == 2);
    double total = 0;
    for (int i = 0; i < 64; ++i)
        total += bin_solid_angle(i, 64, 128) * 128;
    CHECK(total == doctest::Approx(4 * kPi).epsilon(1e-12));
}

TEST_CASE("outdoor regions") {
    std::vector<double> I(4 * 4, 0.1);
    I[3 * 4 + 1] = 0.95;
    const auto env = map_with_intensity(4, 4, I);
    const auto r = outdoor_regions(env, 0.9);
    for (int j = 0; j < 4; ++j) {
        CHECK(r.far_mask[0 * 4 + j] == 1);
        CHECK(r.far_mask[1 * 4 + j] == 1);
    }
    CHECK(r.far_mask[3 * 4 + 1] == 1);
    CHECK(r.far_mask[3 * 4 + 2] == 0);
    CHECK(r.near_count() == 0);
}

TEST_CASE("indoor regions follow the depth partition") {
    const auto env = map_with_intensity(2, 2, {0.96, 0.5, 0.85, 0.99});
    const auto r = indoor_regions(env, {1, 1, 3, 3}, 0.8, 0.95, 2.0);
    CHECK(r.near_mask == std::vector<std::uint8_t>{1, 0, 0, 0});
    CHECK(r.far_mask == std::vector<std::uint8_t>{0, 0, 1, 1});

    const auto inf = std::numeric_limits<double>::infinity();
    const auto r2 = indoor_regions(env, {1, 1, 3, 3}, 0.8, 0.95, inf);
    CHECK(r2.far_count() == 0);
    CHECK(r2.near_mask == std::vector<std::uint8_t>{1, 0, 0, 1});

    const auto dim = map_with_intensity(2, 2, {0.1, 0.2, 0.3, 0.4});
    const auto r3 = indoor_regions(dim, {1, 1, 3, 3}, 0.8, 0.95, 2.0);
    CHECK(r3.far_count() + r3.near_count() == 0);

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> I(64), D(64);
        for (auto &v : I)
            v = u(gen);
        for (auto &v : D)
            v = 3 * u(gen);
        const auto rr = indoor_regions(map_with_intensity(8, 8, I), D, u(gen), u(gen), 2 * u(gen));
        for (int b = 0; b < 64; ++b)
            CHECK(!(rr.far_mask[b] && rr.near_mask[b]));
    }
}

TEST_CASE("apply_light_scales") {
    EnvironmentMap env(1, 3, MapKind::Ldr);
    env.set_base(0, {0.9, 0.8, 0.9});
    env.set_base(1, {0.2, 0.3, 0.4});
    env.set_base(2, {0.97, 0.97, 0.97});
    LightRegions r;
    r.far_mask = {1, 0, 0};
    r.near_mask = {0, 0, 1};
    const auto hdr = apply_light_scales(env, r, {3.0, 2.0});
    CHECK(hdr.kind() == MapKind::Hdr);
    CHECK(hdr.base(std::size_t{0}).x == doctest::Approx(2.7));
    CHECK(hdr.base(std::size_t{0}).y == doctest::Approx(2.4));
    CHECK(hdr.base(std::size_t{1}).z == 0.4);
    CHECK(hdr.base(std::size_t{2}).x == doctest::Approx(1.94));
    const auto unit = apply_light_scales(env, r, {1.0, 1.0});
    CHECK(unit.grid() == env.grid());
    for (double s = 0; s < 4; s += 0.5) {
        const auto lo = apply_light_scales(env, r, {s, s});
        const auto hi = apply_light_scales(env, r, {s + 0.25, s + 0.1});
        for (std::size_t i = 0; i < lo.grid().size(); ++i)
            CHECK(hi.grid()[i] >= lo.grid()[i]);
    }
}

namespace {

Camera scene_camera(double azimuth = 0) {
    Camera c;
    c.azimuth_deg = azimuth;
    c.distance = 2.0;
    c.fov_override = 1.0;
    return c;
}

} // namespace

TEST_CASE("indoor_ldr of a constant-color scene is exactly constant") {
    const int W = 48, H = 32;
    Image scene(W, H, 3, 0.6), depth(W, H, 1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            depth.at(x, y) = 1.0 + 0.05 * x + 0.02 * y;
    IndoorLdrOptions opt;
    opt.height = 64;
    opt.width = 128;
    const auto res = indoor_ldr(scene, depth, scene_camera(), {24, 16}, opt);
    const double expect = srgb_to_linear(0.6);
    for (double v : res.map.grid())
        CHECK(v == expect);
    CHECK(res.map.kind() == MapKind::Ldr);
}

TEST_CASE("indoor_ldr splats pixels at the closed-form unprojected direction") {
    const int W = 40, H = 30;
    Image scene(W, H, 3, 0.0), depth(W, H, 1, 0.0);
    const Camera cam = scene_camera();
    const double t = std::tan(0.5 * *cam.fov_override);
    auto lift = [&](int x, int y, double z) {
        // Pinhole oracle for a camera at (0,0,2) looking down -Z, horizontal FOV.
        const double sx = (2 * (x + 0.5) / W - 1) * t;
        const double sy = (1 - 2 * (y + 0.5) / H) * t * H / W;
        return Vec3{sx * z, sy * z, 2.0 - z};
    };
    const int ax = 20, ay = 15;
    depth.at(ax, ay) = 1.0;
    const Vec3 anchor = lift(ax, ay, 1.0);
    struct P {
        int x, y;
        double z;
        double c;
    };
    const P pts[] = {{20, 14, 3.0, 0.3}, {5, 5, 2.0, 0.5}, {35, 25, 4.0, 0.7}, {10, 28, 1.5, 0.2}};
    for (const auto &p : pts) {
        depth.at(p.x, p.y) = p.z;
        for (int c = 0; c < 3; ++c)
            scene.at(p.x, p.y, c) = p.c;
    }
    IndoorLdrOptions opt;
    opt.height = 64;
    opt.width = 128;
    opt.hole_close_radius = 0;
    const auto res = indoor_ldr(scene, depth, cam, {ax + 0.5, ay + 0.5}, opt);
    for (const auto &p : pts) {
        const Vec3 v = lift(p.x, p.y, p.z) - anchor;
        const auto b = bin_from_direction(normalize(v), 64, 128);
        const std::size_t bin = static_cast<std::size_t>(b.row) * 128 + b.col;
        CHECK(res.written[bin] == 1);
        CHECK(res.map.base(bin).x == doctest::Approx(srgb_to_linear(p.c)).epsilon(1e-12));
        CHECK(res.depth[bin] == doctest::Approx(length(v)).epsilon(1e-9));
    }
    // A pixel just above the anchor at larger depth lands on the azimuth-0 column band.
    const auto b0 = bin_from_direction(normalize(lift(20, 14, 3.0) - anchor), 64, 128);
    CHECK((b0.col == 0 || b0.col == 127));
}

TEST_CASE("indoor_ldr fills never-written bins with the exact scene mean") {
    const int W = 16, H = 12;
    Image scene(W, H, 3), depth(W, H, 1, 2.0);
    double sum[3] = {0, 0, 0};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                scene.at(x, y, c) = 0.1 + 0.05 * ((x + 2 * y + c) % 7);
    {
        // Incremental mean, the same recurrence the map uses for exactness.
        std::size_t n = 0;
        double m[3] = {0, 0, 0};
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                ++n;
                for (int c = 0; c < 3; ++c)
                    m[c] += (srgb_to_linear(scene.at(x, y, c)) - m[c]) / static_cast<double>(n);
            }
        for (int c = 0; c < 3; ++c)
            sum[c] = m[c];
    }
    IndoorLdrOptions opt;
    opt.height = 32;
    opt.width = 64;
    const auto res = indoor_ldr(scene, depth, scene_camera(), {8, 6}, opt);
    std::size_t unseen = 0;
    for (std::size_t b = 0; b < res.map.bin_count(); ++b)
        if (!res.written[b]) {
            ++unseen;
            CHECK(res.map.base(b).x == sum[0]);
            CHECK(res.map.base(b).y == sum[1]);
            CHECK(res.map.base(b).z == sum[2]);
            CHECK(std::isinf(res.depth[b]));
        }
    CHECK(unseen > 0);
    // Mean agrees with a plain sum within rounding.
    double plain = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            plain += srgb_to_linear(scene.at(x, y, 0));
    CHECK(sum[0] == doctest::Approx(plain / (W * H)).epsilon(1e-12));
}

TEST_CASE("indoor_ldr removes isolated bright bins below the minimum area") {
    const int W = 64, H = 48;
    Image scene(W, H, 3, 0.3), depth(W, H, 1, 1.0);
    // One bright pixel far from the anchor.
    for (int c = 0; c < 3; ++c)
        scene.at(50, 10, c) = 1.0;
    IndoorLdrOptions opt;
    opt.height = 32;
    opt.width = 64;
    opt.min_region_area = 4;
    const auto res = indoor_ldr(scene, depth, scene_camera(), {32, 40}, opt);
    double max_i = 0;
    for (std::size_t b = 0; b < res.map.bin_count(); ++b)
        max_i = std::max(max_i, res.map.intensity(b));
    CHECK(max_i < 0.8);
    // A large bright patch survives.
    for (int y = 5; y < 20; ++y)
        for (int x = 40; x < 60; ++x)
            for (int c = 0; c < 3; ++c)
                scene.at(x, y, c) = 1.0;
    const auto res2 = indoor_ldr(scene, depth, scene_camera(), {32, 40}, opt);
    std::size_t bright = 0;
    for (std::size_t b = 0; b < res2.map.bin_count(); ++b)
        bright += res2.map.intensity(b) >= 0.8;
    CHECK(bright >= 4);
}

TEST_CASE("indoor_ldr is rotation-consistent") {
    // Rotating the scene camera about the vertical axis by k bins rotates the
    // map by k columns (the camera faces azimuth -az in map coordinates).
    const int W = 64, H = 48;
    Image scene(W, H, 3), depth(W, H, 1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c)
                scene.at(x, y, c) = 0.2 + 0.5 * x / W + 0.1 * c;
            depth.at(x, y) = 1.5 + 0.5 * std::sin(0.2 * x) + 0.01 * y;
        }
    IndoorLdrOptions opt;
    opt.height = 32;
    opt.width = 64;
    const int k = 5;
    const double step = 360.0 / opt.width;
    const auto a = indoor_ldr(scene, depth, scene_camera(0.0), {32, 30}, opt);
    const auto b = indoor_ldr(scene, depth, scene_camera(k * step), {32, 30}, opt);
    std::size_t agree = 0, total = 0;
    for (int i = 0; i < opt.height; ++i)
        for (int j = 0; j < opt.width; ++j) {
            const std::size_t ia = static_cast<std::size_t>(i) * opt.width + j;
            const std::size_t ib = static_cast<std::size_t>(i) * opt.width + ((j - k) % opt.width + opt.width) % opt.width;
            if (!a.written[ia])
                continue;
            ++total;
            agree += std::abs(a.map.base(ia).x - b.map.base(ib).x) < 1e-6;
        }
    REQUIRE(total > 0);
    CHECK(static_cast<double>(agree) / total > 0.95);
}

TEST_CASE("indoor_ldr rejects an anchor without depth") {
    Image scene(8, 8, 3, 0.5), depth(8, 8, 1, 1.0);
    depth.at(3, 3) = 0.0;
    CHECK_THROWS_WITH(indoor_ldr(scene, depth, scene_camera(), {3.5, 3.5}), "anchor not covered by depth");
}

TEST_CASE("spherical gaussian map") {
    SphericalGaussianParams p;
    p.c_x = 0.25 + 3.5 / 64;   // bin center column 3 of 64
    p.c_y = 10.5 / 32;          // bin center row 10 of 32
    p.c_v = 13.0;
    const auto env = synthesize_sg_envmap(p, 32, 64);
    CHECK(env.base(10, 3).x == p.b_v + p.c_v);
    // The antipode of a bin center is the bin center mirrored in both angles.
    const auto at_pole = synthesize_sg_envmap({0.25 + 0.5 / 64, 0.5 / 32, 0.08, 12.0, 0.8}, 32, 64);
    const double antipodal = 0.8 + 12.0 * std::exp(-2.0 / 0.08);
    CHECK(at_pole.base(31, 32).x == doctest::Approx(antipodal).epsilon(1e-9));
    CHECK(antipodal == doctest::Approx(0.8).epsilon(1e-9));
    const auto flat = synthesize_sg_envmap({0.3, 0.2, 0.08, 0.0, 0.8}, 16, 32);
    for (double v : flat.grid())
        CHECK(v == 0.8);
    const auto mu = sg_center_direction(0.25, 0.5);
    CHECK(length(mu - Vec3{0, 0, -1}) < 1e-12);
}

TEST_CASE("region intensity means") {
    EnvironmentMap env(1, 4, MapKind::Hdr);
    env.set_base(0, {3, 4, 0});
    env.set_base(1, {0, 0, 0.1});
    env.set_base(2, {0, 0, 0.3});
    env.set_base(3, {6, 8, 0});
    LightRegions r;
    r.far_mask = {1, 0, 0, 1};
    r.near_mask = {0, 0, 0, 0};
    env.set_regions(r);
    const auto m = region_intensity_means(env);
    CHECK(m.lights == doctest::Approx(7.5));
    CHECK(m.background == doctest::Approx(0.2));
}

TEST_CASE("environment validation flags non-finite values") {
    EnvironmentMap env(2, 4, MapKind::Hdr, 1.0);
    env.validate();
    env.grid()[3] = std::nan("");
    CHECK_THROWS_AS(env.validate(), Error);
}

TEST_CASE("apparatus scene") {
    const TriangleMesh object = normalize_mesh(make_cube());
    const ApparatusScene a = build_apparatus_scene(object);
    CHECK(a.material[kDiffuseR] == 1.0);
    CHECK(a.material[kDiffuseG] == 1.0);
    CHECK(a.material[kDiffuseB] == 1.0);
    CHECK(a.material[kMetalness] == 0.0);
    CHECK(a.material[kRoughness] == ChannelBounds{}.hi(kRoughness));
    CHECK_FALSE(a.specular);
    CHECK(a.prompt == "A gigantic diffuse white (spray-painted) sphere (ball)");
    CHECK(a.object_views == 3);
    CHECK(a.loss_weights[0] + a.loss_weights[1] + a.loss_weights[2] + a.loss_weights[3] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a.loss_weights[3] == 0.5);
    CHECK(a.sphere.max_radius() == doctest::Approx(0.5).epsilon(1e-12));
    double min_y = 1;
    for (Vec3 p : a.sphere.positions)
        min_y = std::min(min_y, p.y);
    CHECK(min_y == doctest::Approx(-0.5).epsilon(1e-12));

    TriangleMesh big = object;
    for (Vec3 &p : big.positions)
        p = p * 3.0;
    CHECK_THROWS_AS(build_apparatus_scene(big), Error);
}
