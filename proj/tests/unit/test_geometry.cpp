#include "doctest.h"

#include "sf/core/error.h"
#include "sf/geometry/camera.h"
#include "sf/geometry/mesh.h"

#include <cmath>
#include <sstream>

using namespace sf;

namespace {

const char *kCubeObj = R"(# unit cube
v -1 -1 -1
v  1 -1 -1
v -1  1 -1
v  1  1 -1
v -1 -1  1
v  1 -1  1
v -1  1  1
v  1  1  1
vt 0 0
vt 1 0
vt 0 0.5
vt 1 0.5
vt 0 0.5
vt 1 0.5
vt 0 1
vt 1 1
usemtl paint
f 1/1 3/3 4/4 2/2
f 5/5 6/6 8/8 7/7
f 1/1 2/2 6/6 5/5
f 3/3 7/7 8/8 4/4
f 1/1 5/5 7/7 3/3
f 2/2 4/4 8/8 6/6
)";

TriangleMesh parse(const std::string &text) {
    std::istringstream in(text);
    return parse_obj(in);
}

} // namespace

TEST_CASE("cube obj loads with 8 vertices, 12 faces and axis-aligned face normals") {
    const TriangleMesh m = parse(kCubeObj);
    CHECK(m.vertex_count() == 8);
    CHECK(m.face_count() == 12);
    for (std::size_t f = 0; f < m.face_count(); ++f) {
        const Vec3 n = m.face_normal(f);
        int axis_hits = 0;
        for (int a = 0; a < 3; ++a)
            axis_hits += std::abs(std::abs(n[a]) - 1.0) < 1e-12;
        CHECK(axis_hits == 1);
        // Outward: the normal points the same way as the face centroid.
        const auto &t = m.faces[f];
        const Vec3 c = (m.positions[t[0]] + m.positions[t[1]] + m.positions[t[2]]) / 3.0;
        CHECK(dot(n, c) > 0);
    }
    for (const auto &n : m.normals)
        CHECK(length(n) == doctest::Approx(1.0));
}

TEST_CASE("obj without texture coordinates is rejected") {
    const std::string text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    try {
        parse(text);
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(std::string(e.what()) == "mesh lacks UV parameterization");
        CHECK(e.kind() == ErrorKind::InvalidInput);
    }
}

TEST_CASE("obj with two materials is rejected") {
    const std::string text =
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nusemtl a\nf 1/1 2/2 3/3\nusemtl b\nf 1/1 3/3 2/2\n";
    CHECK_THROWS_WITH(parse(text), "single-material mesh required");
}

TEST_CASE("icosphere computed normals match positions") {
    const TriangleMesh ico = make_icosphere(1.0, 2);
    REQUIRE(ico.vertex_count() == 162);
    std::ostringstream out;
    TriangleMesh stripped = ico;
    out.precision(17);
    for (const auto &p : stripped.positions)
        out << "v " << p.x << ' ' << p.y << ' ' << p.z << '\n';
    for (const auto &t : stripped.uvs)
        out << "vt " << t.x << ' ' << t.y << '\n';
    for (const auto &f : stripped.faces)
        out << "f " << f[0] + 1 << '/' << f[0] + 1 << ' ' << f[1] + 1 << '/' << f[1] + 1 << ' ' << f[2] + 1 << '/'
            << f[2] + 1 << '\n';
    const TriangleMesh m = parse(out.str());
    REQUIRE(m.vertex_count() == 162);

    // Oracle: brute-force sum of face cross products over faces touching each vertex.
    for (std::size_t v = 0; v < m.vertex_count(); ++v) {
        Vec3 acc{};
        for (const auto &f : m.faces)
            if (f[0] == v || f[1] == v || f[2] == v)
                acc += cross(m.positions[f[1]] - m.positions[f[0]], m.positions[f[2]] - m.positions[f[0]]);
        const Vec3 oracle = normalize(acc);
        CHECK(length(m.normals[v] - oracle) < 1e-12);
        // Area weighting on a 162-vertex icosphere leaves up to 0.0236 of
        // tangential error (independent numpy evaluation), so the radial check
        // is loose; the oracle equality above is the strict one.
        CHECK(length(m.normals[v] - normalize(m.positions[v])) < 0.025);
    }
}

TEST_CASE("normalize_mesh scales the +-1 cube to corners at 0.5/sqrt(3)") {
    const TriangleMesh n = normalize_mesh(make_cube(1.0));
    const double c = 0.5 / std::sqrt(3.0);
    for (const auto &p : n.positions)
        for (int a = 0; a < 3; ++a)
            CHECK(std::abs(p[a]) == doctest::Approx(c).epsilon(1e-12));
    CHECK(n.max_radius() == doctest::Approx(0.5));
}

TEST_CASE("normalize_mesh is idempotent and keeps topology") {
    TriangleMesh m = make_uv_sphere(3.0, 8, 16);
    for (auto &p : m.positions)
        p = p + Vec3{1.0, -2.0, 0.5};
    const TriangleMesh a = normalize_mesh(m);
    const TriangleMesh b = normalize_mesh(a);
    CHECK(a.faces == b.faces);
    for (std::size_t i = 0; i < a.vertex_count(); ++i)
        CHECK(length(a.positions[i] - b.positions[i]) < 1e-12);
    CHECK(a.max_radius() <= kNormalizedRadius + 1e-6);
}

TEST_CASE("normalize_mesh handles a sliver and rejects a point cloud") {
    TriangleMesh s;
    s.positions = {{0, 0, 0}, {10, 0, 0}, {10, 1e-3, 0}};
    s.faces = {{0, 1, 2}};
    CHECK(normalize_mesh(s).max_radius() == doctest::Approx(0.5));
    TriangleMesh d;
    d.positions = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    d.faces = {{0, 1, 2}};
    CHECK_THROWS_WITH(normalize_mesh(d), "zero extent mesh");
}

TEST_CASE("fov from multiplier") {
    CHECK(fov_from_multiplier(1.0, 0.5, 2.0) == doctest::Approx(2 * std::atan(0.25)).epsilon(1e-15));
    CHECK(fov_from_multiplier(1.0, 0.5, 2.0) == doctest::Approx(0.489957).epsilon(1e-6));
    CHECK(fov_from_multiplier(0.0, 0.5, 2.0) == 0.0);
    CHECK(fov_from_multiplier(1.65, 0.5, 2.0) == doctest::Approx(0.782471).epsilon(1e-6));
    CHECK(fov_from_multiplier(1.0, 0.5, 2.0, FovForm::PaperLiteral) == doctest::Approx(std::tanh(0.25)));
    double prev = -1;
    for (double l = 0; l < 100; l += 0.37) {
        const double f = fov_from_multiplier(l, 0.5, 2.0);
        CHECK(f > prev);
        CHECK(f < kPi);
        prev = f;
    }
}

TEST_CASE("camera conventions") {
    Camera c;
    const Vec3 p = c.position();
    CHECK(p.x == doctest::Approx(0.0));
    CHECK(p.z == doctest::Approx(2.0));
    CHECK(c.forward().z == doctest::Approx(-1.0));
    const Ray center = c.generate_ray(c.resolution / 2.0, c.resolution / 2.0);
    CHECK(length(center.dir - c.forward()) < 1e-12);
    // Project/unproject agree.
    const Ray r = c.generate_ray(10.5, 40.5);
    const auto q = c.project(r.origin + r.dir * 1.7, c.resolution, c.resolution);
    REQUIRE(q.has_value());
    CHECK(q->x == doctest::Approx(10.5));
    CHECK(q->y == doctest::Approx(40.5));
    c.elevation_deg = 30;
    CHECK(c.position().y > 0);
    CHECK_THROWS(Camera{.distance = 0.3}.validate());
}

TEST_CASE("sample_cameras spacing, determinism and ranges") {
    CameraSamplingConfig cfg;
    cfg.count = 4;
    cfg.fov_multiplier_min = cfg.fov_multiplier_max = 1.0;
    cfg.azimuth_jitter_deg = 0;
    auto cams = sample_cameras(cfg, 9);
    REQUIRE(cams.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(cams[i].azimuth_deg == doctest::Approx(90.0 * i));
        CHECK(cams[i].elevation_deg == 30.0);
    }
    CameraSamplingConfig paper;
    auto a = sample_cameras(paper, 123), b = sample_cameras(paper, 123);
    REQUIRE(a.size() == 24);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].azimuth_deg == b[i].azimuth_deg);
        CHECK(a[i].fov_multiplier == b[i].fov_multiplier);
        CHECK(a[i].fov_multiplier >= 1.0);
        CHECK(a[i].fov_multiplier <= 1.21);
        CHECK(a[i].azimuth_deg >= 0);
        CHECK(a[i].azimuth_deg < 360);
    }
    cfg.elevations.clear();
    CHECK_THROWS_WITH(sample_cameras(cfg, 1), "no elevations");
}

TEST_CASE("azimuth histogram over 1e4 cameras is uniform") {
    CameraSamplingConfig cfg;
    cfg.count = 10000;
    const auto cams = sample_cameras(cfg, 77);
    constexpr int kBins = 36;
    std::vector<int> hist(kBins, 0);
    for (const auto &c : cams)
        hist[static_cast<int>(c.azimuth_deg / 10.0) % kBins]++;
    const double expected = 10000.0 / kBins;
    const double sigma = std::sqrt(10000.0 * (1.0 / kBins) * (1 - 1.0 / kBins));
    for (int h : hist)
        CHECK(std::abs(h - expected) <= 3 * sigma);
}
