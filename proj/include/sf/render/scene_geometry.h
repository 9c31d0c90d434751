#pragma once

#include "sf/geometry/camera.h"
#include "sf/geometry/mesh.h"

#include <cstdint>
#include <limits>
#include <vector>

namespace sf {

struct GeometryInstance {
    const TriangleMesh *mesh = nullptr;
    Vec3 offset{}; // world translation
};

struct SurfaceHit {
    double t = std::numeric_limits<double>::infinity();
    int object = -1;       // -1: none, kFloorObject: floor plane
    std::uint32_t face = 0;
    double b1 = 0, b2 = 0; // barycentrics of vertices 1 and 2
    bool valid() const { return object != -1; }
};

inline constexpr int kFloorObject = -2;

// Triangles of all instances in one BVH, plus an optional infinite horizontal
// floor at `floor_height` facing +Y.
class SceneGeometry {
public:
    SceneGeometry() = default;
    SceneGeometry(std::vector<GeometryInstance> instances, bool with_floor);

    bool has_floor() const { return floor_; }
    double floor_height() const { return floor_height_; }
    void set_floor_height(double y) { floor_height_ = y; }
    const std::vector<GeometryInstance> &instances() const { return instances_; }

    SurfaceHit intersect_objects(const Ray &ray, double t_max = std::numeric_limits<double>::infinity()) const;
    SurfaceHit intersect_floor(const Ray &ray) const;
    bool occluded(const Ray &ray, bool test_floor) const;

    struct Surface {
        Vec3 position, geometric_normal, shading_normal;
        Vec2 uv;
    };
    // Geometric and shading normals are flipped toward -ray.dir (two-sided).
    Surface surface(const SurfaceHit &hit, const Ray &ray) const;

    // Object-space bounding box in world coordinates.
    void bounds(Vec3 &lo, Vec3 &hi) const;

private:
    struct Tri {
        Vec3 v0, e1, e2;
        int object;
        std::uint32_t face;
    };
    struct Node {
        Vec3 lo, hi;
        std::uint32_t start, count; // leaf when count > 0
        std::uint32_t right;        // second child index for interior nodes
    };
    std::uint32_t build(std::uint32_t start, std::uint32_t end);
    bool hit_tri(const Tri &tri, const Ray &ray, double t_max, double &t, double &b1, double &b2) const;

    std::vector<GeometryInstance> instances_;
    std::vector<Tri> tris_;
    std::vector<Node> nodes_;
    bool floor_ = false;
    double floor_height_ = 0;
};

} // namespace sf
