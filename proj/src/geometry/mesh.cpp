#include "sf/geometry/mesh.h"

#include "sf/core/error.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

namespace sf {

Vec3 TriangleMesh::face_normal(std::size_t f) const {
    const auto &t = faces[f];
    return normalize(cross(positions[t[1]] - positions[t[0]], positions[t[2]] - positions[t[0]]));
}

double TriangleMesh::face_area(std::size_t f) const {
    const auto &t = faces[f];
    return 0.5 * length(cross(positions[t[1]] - positions[t[0]], positions[t[2]] - positions[t[0]]));
}

double TriangleMesh::max_radius() const {
    double r = 0;
    for (const auto &p : positions)
        r = std::max(r, length(p));
    return r;
}

void TriangleMesh::validate(bool normalized) const {
    for (const auto &f : faces)
        for (auto idx : f)
            require(idx < positions.size(), "face index out of range");
    require(normals.size() == positions.size(), "normal count mismatch");
    require(uvs.size() == positions.size(), "mesh lacks UV parameterization");
    for (const auto &n : normals)
        require(std::abs(length(n) - 1.0) <= 1e-4, "normals must be unit length");
    for (const auto &uv : uvs)
        require(uv.x >= 0 && uv.x <= 1 && uv.y >= 0 && uv.y <= 1, "UV coordinates must lie in [0,1]^2");
    if (normalized)
        require(max_radius() <= kNormalizedRadius + 1e-6, "mesh exceeds normalized radius");
}

std::vector<Vec3> area_weighted_vertex_normals(const TriangleMesh &mesh) {
    std::vector<Vec3> acc(mesh.positions.size());
    for (const auto &t : mesh.faces) {
        // Unnormalized cross product carries twice the face area.
        Vec3 n = cross(mesh.positions[t[1]] - mesh.positions[t[0]], mesh.positions[t[2]] - mesh.positions[t[0]]);
        for (auto idx : t)
            acc[idx] += n;
    }
    for (auto &n : acc) {
        double l = length(n);
        n = l > 0 ? n / l : Vec3{0, 1, 0};
    }
    return acc;
}

namespace {

// Resolves a possibly negative OBJ index against the current element count.
int resolve_index(const std::string &token, std::size_t count) {
    int idx = std::stoi(token);
    if (idx < 0)
        idx = static_cast<int>(count) + idx + 1;
    if (idx < 1 || static_cast<std::size_t>(idx) > count)
        fail(ErrorKind::InvalidInput, "obj index out of range: " + token);
    return idx - 1;
}

} // namespace

TriangleMesh parse_obj(std::istream &in) {
    std::vector<Vec3> v, vn;
    std::vector<Vec2> vt;
    using Key = std::tuple<int, int, int>;
    std::map<Key, std::uint32_t> remap;
    TriangleMesh mesh;
    std::vector<int> normal_index; // per output vertex, -1 when absent
    std::string material;
    bool any_missing_uv = false;
    bool saw_material = false;

    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#')
            continue;
        if (tag == "v") {
            Vec3 p;
            ls >> p.x >> p.y >> p.z;
            v.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            ls >> t.x >> t.y;
            vt.push_back(t);
        } else if (tag == "vn") {
            Vec3 n;
            ls >> n.x >> n.y >> n.z;
            vn.push_back(normalize(n));
        } else if (tag == "usemtl") {
            std::string name;
            ls >> name;
            if (saw_material && name != material)
                fail(ErrorKind::InvalidInput, "single-material mesh required");
            material = name;
            saw_material = true;
        } else if (tag == "f") {
            std::vector<std::uint32_t> poly;
            std::string corner;
            while (ls >> corner) {
                int vi = -1, ti = -1, ni = -1;
                std::size_t s1 = corner.find('/');
                vi = resolve_index(corner.substr(0, s1), v.size());
                if (s1 != std::string::npos) {
                    std::size_t s2 = corner.find('/', s1 + 1);
                    std::string ts = corner.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
                    if (!ts.empty())
                        ti = resolve_index(ts, vt.size());
                    if (s2 != std::string::npos && s2 + 1 < corner.size())
                        ni = resolve_index(corner.substr(s2 + 1), vn.size());
                }
                if (ti < 0)
                    any_missing_uv = true;
                Key key{vi, ti, ni};
                auto [it, inserted] = remap.try_emplace(key, static_cast<std::uint32_t>(mesh.positions.size()));
                if (inserted) {
                    mesh.positions.push_back(v[vi]);
                    mesh.uvs.push_back(ti >= 0 ? vt[ti] : Vec2{});
                    normal_index.push_back(ni);
                }
                poly.push_back(it->second);
            }
            if (poly.size() < 3)
                fail(ErrorKind::InvalidInput, "obj face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
        }
    }
    if (mesh.faces.empty())
        fail(ErrorKind::InvalidInput, "obj contains no faces");
    if (vt.empty() || any_missing_uv)
        fail(ErrorKind::InvalidInput, "mesh lacks UV parameterization");

    bool have_all_normals = std::all_of(normal_index.begin(), normal_index.end(), [](int i) { return i >= 0; });
    if (have_all_normals) {
        mesh.normals.reserve(normal_index.size());
        for (int i : normal_index)
            mesh.normals.push_back(vn[i]);
    } else {
        mesh.normals = area_weighted_vertex_normals(mesh);
    }
    for (auto &uv : mesh.uvs) {
        // Tolerate tiny exporter overshoot; anything else is a precondition failure.
        if (uv.x < -1e-6 || uv.x > 1 + 1e-6 || uv.y < -1e-6 || uv.y > 1 + 1e-6)
            fail(ErrorKind::InvalidInput, "UV coordinates must lie in [0,1]^2");
        uv.x = std::clamp(uv.x, 0.0, 1.0);
        uv.y = std::clamp(uv.y, 0.0, 1.0);
    }
    mesh.validate(false);
    return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::Io, "cannot open mesh " + path.string());
    return parse_obj(in);
}

void write_obj(std::ostream &out, const TriangleMesh &mesh) {
    out.precision(17);
    for (const auto &p : mesh.positions)
        out << "v " << p.x << ' ' << p.y << ' ' << p.z << '\n';
    for (const auto &t : mesh.uvs)
        out << "vt " << t.x << ' ' << t.y << '\n';
    for (const auto &n : mesh.normals)
        out << "vn " << n.x << ' ' << n.y << ' ' << n.z << '\n';
    for (const auto &f : mesh.faces) {
        out << 'f';
        for (auto i : f)
            out << ' ' << i + 1 << '/' << i + 1 << '/' << i + 1;
        out << '\n';
    }
}

TriangleMesh normalize_mesh(const TriangleMesh &mesh) {
    require(!mesh.positions.empty(), "mesh is empty");
    Vec3 lo = mesh.positions.front(), hi = lo;
    for (const auto &p : mesh.positions) {
        lo = min(lo, p);
        hi = max(hi, p);
    }
    const Vec3 center = (lo + hi) * 0.5;
    double radius = 0;
    for (const auto &p : mesh.positions)
        radius = std::max(radius, length(p - center));
    if (!(radius > 0))
        fail(ErrorKind::InvalidInput, "zero extent mesh");
    const double scale = kNormalizedRadius / radius;
    TriangleMesh out = mesh;
    for (auto &p : out.positions)
        p = (p - center) * scale;
    return out;
}

// ------------------------------------------------------------ procedural shapes

TriangleMesh make_cube(double h) {
    TriangleMesh m;
    for (int i = 0; i < 8; ++i) {
        Vec3 p{(i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h};
        m.positions.push_back(p);
        m.uvs.push_back({(i & 1) ? 1.0 : 0.0, ((i & 2) ? 0.5 : 0.0) + ((i & 4) ? 0.5 : 0.0)});
    }
    auto quad = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
        m.faces.push_back({a, b, c});
        m.faces.push_back({a, c, d});
    };
    quad(0, 2, 3, 1); // -z
    quad(4, 5, 7, 6); // +z
    quad(0, 1, 5, 4); // -y
    quad(2, 6, 7, 3); // +y
    quad(0, 4, 6, 2); // -x
    quad(1, 3, 7, 5); // +x
    m.normals = area_weighted_vertex_normals(m);
    return m;
}

TriangleMesh make_atlas_cube(double h) {
    TriangleMesh m;
    // Face axis, sign, tangent, bitangent; tiles laid out on a 3x2 atlas with a
    // half-texel-free gutter of 1/32 so islands never touch.
    struct FaceDef {
        Vec3 n, u, v;
    };
    const FaceDef defs[6] = {
        {{1, 0, 0}, {0, 0, -1}, {0, 1, 0}},  {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
        {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},  {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
        {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},   {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}},
    };
    const double gutter = 1.0 / 32.0;
    for (int f = 0; f < 6; ++f) {
        const auto &d = defs[f];
        const double u0 = (f % 3) / 3.0 + gutter, u1 = (f % 3 + 1) / 3.0 - gutter;
        const double v0 = (f / 3) / 2.0 + gutter, v1 = (f / 3 + 1) / 2.0 - gutter;
        const auto base = static_cast<std::uint32_t>(m.positions.size());
        const double su[4] = {-1, 1, 1, -1}, sv[4] = {-1, -1, 1, 1};
        for (int k = 0; k < 4; ++k) {
            m.positions.push_back((d.n + d.u * su[k] + d.v * sv[k]) * h);
            m.normals.push_back(d.n);
            m.uvs.push_back({su[k] < 0 ? u0 : u1, sv[k] < 0 ? v0 : v1});
        }
        m.faces.push_back({base, base + 1, base + 2});
        m.faces.push_back({base, base + 2, base + 3});
    }
    return m;
}

TriangleMesh make_uv_sphere(double radius, int rings, int segments) {
    TriangleMesh m;
    for (int r = 0; r <= rings; ++r) {
        const double v = static_cast<double>(r) / rings;
        const double theta = v * kPi;
        for (int s = 0; s <= segments; ++s) {
            const double u = static_cast<double>(s) / segments;
            const double phi = u * 2 * kPi;
            Vec3 n{std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi)};
            m.positions.push_back(n * radius);
            m.normals.push_back(n);
            m.uvs.push_back({u, 1.0 - v});
        }
    }
    const int stride = segments + 1;
    for (int r = 0; r < rings; ++r)
        for (int s = 0; s < segments; ++s) {
            std::uint32_t a = r * stride + s, b = a + 1, c = a + stride, d = c + 1;
            if (r != 0)
                m.faces.push_back({a, c, b});
            if (r != rings - 1)
                m.faces.push_back({b, c, d});
        }
    return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> p = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto &q : p)
        q = normalize(q);
    std::vector<std::array<std::uint32_t, 3>> f = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end())
                return it->second;
            p.push_back(normalize(p[a] + p[b]));
            auto idx = static_cast<std::uint32_t>(p.size() - 1);
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<std::uint32_t, 3>> next;
        for (const auto &tri : f) {
            auto a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    TriangleMesh m;
    m.faces = std::move(f);
    for (const auto &q : p) {
        m.positions.push_back(q * radius);
        m.normals.push_back(q);
        // Equirectangular UVs; seam triangles wrap, which is harmless for the
        // constant materials icospheres carry here.
        double u = std::atan2(q.x, q.z) / (2 * kPi);
        if (u < 0)
            u += 1;
        m.uvs.push_back({u, 0.5 + std::asin(std::clamp(q.y, -1.0, 1.0)) / kPi});
    }
    return m;
}

TriangleMesh make_quad(double h) {
    TriangleMesh m;
    m.positions = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
    m.normals.assign(4, {0, 0, 1});
    m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

} // namespace sf
