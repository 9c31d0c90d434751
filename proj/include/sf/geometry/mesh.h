#pragma once

#include "sf/core/vec.h"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace sf {

// Radius of the bounding sphere every mesh is normalized into.
inline constexpr double kNormalizedRadius = 0.5;

struct TriangleMesh {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    std::vector<Vec2> uvs;
    std::vector<std::array<std::uint32_t, 3>> faces;

    std::size_t vertex_count() const { return positions.size(); }
    std::size_t face_count() const { return faces.size(); }

    Vec3 face_normal(std::size_t f) const; // unit geometric normal, CCW winding
    double face_area(std::size_t f) const;

    // Throws on index, normal, or UV violations. The radius bound is only
    // checked when `normalized` is set.
    void validate(bool normalized = false) const;
    double max_radius() const;
};

// Parses Wavefront OBJ (v/vt/vn/f, polygons fan-triangulated). Vertices are
// split per unique (v, vt, vn) tuple. Missing normals are area-weighted
// averages of the adjacent face normals.
TriangleMesh parse_obj(std::istream &in);
TriangleMesh load_mesh(const std::filesystem::path &path);
void write_obj(std::ostream &out, const TriangleMesh &mesh);

// Translates the bounding-box center to the origin and scales uniformly so the
// farthest vertex sits at kNormalizedRadius.
TriangleMesh normalize_mesh(const TriangleMesh &mesh);

std::vector<Vec3> area_weighted_vertex_normals(const TriangleMesh &mesh);

// Procedural shapes used by the apparatus scene, tests and demos.
TriangleMesh make_cube(double half_extent = 1.0);            // 8 shared vertices, 12 faces
TriangleMesh make_atlas_cube(double half_extent = 1.0);      // 24 vertices, per-face atlas tiles
TriangleMesh make_uv_sphere(double radius, int rings, int segments);
TriangleMesh make_icosphere(double radius, int subdivisions);
TriangleMesh make_quad(double half_extent = 0.5);            // unit UV square in the XY plane

} // namespace sf
