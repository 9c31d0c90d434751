#include "sf/render/scene_geometry.h"

#include "sf/core/error.h"

#include <algorithm>
#include <cmath>

namespace sf {

namespace {

constexpr std::uint32_t kLeafSize = 4;

bool slab(const Vec3 &lo, const Vec3 &hi, const Ray &ray, const Vec3 &inv, double t_max) {
    double t0 = 0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        double n = (lo[a] - ray.origin[a]) * inv[a];
        double f = (hi[a] - ray.origin[a]) * inv[a];
        if (n > f)
            std::swap(n, f);
        t0 = n > t0 ? n : t0;
        t1 = f < t1 ? f : t1;
        if (t0 > t1)
            return false;
    }
    return true;
}

} // namespace

SceneGeometry::SceneGeometry(std::vector<GeometryInstance> instances, bool with_floor)
    : instances_(std::move(instances)), floor_(with_floor) {
    double min_y = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < instances_.size(); ++o) {
        const auto &inst = instances_[o];
        require(inst.mesh != nullptr, "scene instance without mesh");
        for (std::uint32_t f = 0; f < inst.mesh->faces.size(); ++f) {
            const auto &t = inst.mesh->faces[f];
            const Vec3 a = inst.mesh->positions[t[0]] + inst.offset;
            const Vec3 b = inst.mesh->positions[t[1]] + inst.offset;
            const Vec3 c = inst.mesh->positions[t[2]] + inst.offset;
            tris_.push_back({a, b - a, c - a, static_cast<int>(o), f});
            min_y = std::min({min_y, a.y, b.y, c.y});
        }
    }
    floor_height_ = std::isfinite(min_y) ? min_y : 0.0;
    if (!tris_.empty()) {
        nodes_.reserve(2 * tris_.size() / kLeafSize + 2);
        build(0, static_cast<std::uint32_t>(tris_.size()));
    }
}

std::uint32_t SceneGeometry::build(std::uint32_t start, std::uint32_t end) {
    Node node{};
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    Vec3 clo = lo, chi = hi;
    for (std::uint32_t i = start; i < end; ++i) {
        const Tri &t = tris_[i];
        const Vec3 a = t.v0, b = t.v0 + t.e1, c = t.v0 + t.e2;
        lo = min(lo, min(a, min(b, c)));
        hi = max(hi, max(a, max(b, c)));
        const Vec3 cen = (a + b + c) / 3.0;
        clo = min(clo, cen);
        chi = max(chi, cen);
    }
    node.lo = lo;
    node.hi = hi;
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - start <= kLeafSize) {
        nodes_[index].start = start;
        nodes_[index].count = end - start;
        return index;
    }
    const Vec3 ext = chi - clo;
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const std::uint32_t mid = start + (end - start) / 2;
    std::nth_element(tris_.begin() + start, tris_.begin() + mid, tris_.begin() + end, [axis](const Tri &a, const Tri &b) {
        const double ca = 3 * a.v0[axis] + a.e1[axis] + a.e2[axis];
        const double cb = 3 * b.v0[axis] + b.e1[axis] + b.e2[axis];
        if (ca != cb)
            return ca < cb;
        return a.object != b.object ? a.object < b.object : a.face < b.face;
    });
    build(start, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[index].start = 0;
    nodes_[index].count = 0;
    nodes_[index].right = right;
    return index;
}

bool SceneGeometry::hit_tri(const Tri &tri, const Ray &ray, double t_max, double &t, double &b1, double &b2) const {
    const Vec3 p = cross(ray.dir, tri.e2);
    const double det = dot(tri.e1, p);
    if (std::abs(det) < 1e-300)
        return false;
    const double inv = 1.0 / det;
    const Vec3 s = ray.origin - tri.v0;
    const double u = dot(s, p) * inv;
    if (u < 0 || u > 1)
        return false;
    const Vec3 q = cross(s, tri.e1);
    const double v = dot(ray.dir, q) * inv;
    if (v < 0 || u + v > 1)
        return false;
    const double tt = dot(tri.e2, q) * inv;
    if (tt <= 0 || tt >= t_max)
        return false;
    t = tt;
    b1 = u;
    b2 = v;
    return true;
}

SurfaceHit SceneGeometry::intersect_objects(const Ray &ray, double t_max) const {
    SurfaceHit best;
    best.t = t_max;
    if (nodes_.empty())
        return SurfaceHit{};
    const Vec3 inv{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
    std::uint32_t stack[128];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node &n = nodes_[stack[--sp]];
        if (!slab(n.lo, n.hi, ray, inv, best.t))
            continue;
        if (n.count > 0) {
            for (std::uint32_t i = n.start; i < n.start + n.count; ++i) {
                double t, b1, b2;
                if (hit_tri(tris_[i], ray, best.t, t, b1, b2)) {
                    best.t = t;
                    best.object = tris_[i].object;
                    best.face = tris_[i].face;
                    best.b1 = b1;
                    best.b2 = b2;
                }
            }
        } else {
            const std::uint32_t self = static_cast<std::uint32_t>(&n - nodes_.data());
            stack[sp++] = n.right;
            stack[sp++] = self + 1;
        }
    }
    if (!best.valid())
        best.t = std::numeric_limits<double>::infinity();
    return best;
}

SurfaceHit SceneGeometry::intersect_floor(const Ray &ray) const {
    SurfaceHit h;
    if (!floor_ || ray.dir.y >= 0 || ray.origin.y <= floor_height_)
        return h;
    h.t = (floor_height_ - ray.origin.y) / ray.dir.y;
    h.object = kFloorObject;
    return h;
}

bool SceneGeometry::occluded(const Ray &ray, bool test_floor) const {
    if (test_floor && intersect_floor(ray).valid())
        return true;
    return intersect_objects(ray).valid();
}

SceneGeometry::Surface SceneGeometry::surface(const SurfaceHit &hit, const Ray &ray) const {
    Surface s;
    s.position = ray.origin + ray.dir * hit.t;
    if (hit.object == kFloorObject) {
        s.geometric_normal = s.shading_normal = {0, 1, 0};
        s.uv = {0, 0};
        return s;
    }
    const auto &inst = instances_[hit.object];
    const auto &m = *inst.mesh;
    const auto &f = m.faces[hit.face];
    const double b0 = 1 - hit.b1 - hit.b2;
    Vec3 ng = m.face_normal(hit.face);
    Vec3 ns = normalize(m.normals[f[0]] * b0 + m.normals[f[1]] * hit.b1 + m.normals[f[2]] * hit.b2);
    if (dot(ng, ray.dir) > 0) {
        ng = -ng;
        ns = -ns;
    }
    if (dot(ns, ray.dir) >= 0)
        ns = ng;
    s.geometric_normal = ng;
    s.shading_normal = ns;
    const Vec2 uv0 = m.uvs[f[0]], uv1 = m.uvs[f[1]], uv2 = m.uvs[f[2]];
    s.uv = {uv0.x * b0 + uv1.x * hit.b1 + uv2.x * hit.b2, uv0.y * b0 + uv1.y * hit.b1 + uv2.y * hit.b2};
    return s;
}

void SceneGeometry::bounds(Vec3 &lo, Vec3 &hi) const {
    if (nodes_.empty()) {
        lo = hi = Vec3{};
        return;
    }
    lo = nodes_[0].lo;
    hi = nodes_[0].hi;
}

} // namespace sf
