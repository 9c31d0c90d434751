#include "sf/lighting/light_model.h"

#include "sf/core/error.h"
#include "sf/guidance/prompt.h"

#include <algorithm>
#include <cmath>
#include <queue>

namespace sf {

LightRegions outdoor_regions(const EnvironmentMap &ldr, double tau_outdoor) {
    LightRegions r;
    r.tau_outdoor = tau_outdoor;
    r.far_mask.assign(ldr.bin_count(), 0);
    r.near_mask.assign(ldr.bin_count(), 0);
    for (int i = 0; i < ldr.height(); ++i)
        for (int j = 0; j < ldr.width(); ++j) {
            const std::size_t b = static_cast<std::size_t>(i) * ldr.width() + j;
            const bool upper = static_cast<double>(i) / ldr.height() < 0.5;
            r.far_mask[b] = upper || ldr.intensity(b) >= tau_outdoor;
        }
    return r;
}

LightRegions indoor_regions(const EnvironmentMap &ldr, const std::vector<double> &depth_env, double tau_far,
                            double tau_near, double tau_depth) {
    require(depth_env.size() == ldr.bin_count(), "depth grid does not match map dimensions");
    if (tau_near < tau_far)
        log_warning("near threshold below far threshold");
    LightRegions r;
    r.tau_far = tau_far;
    r.tau_near = tau_near;
    r.tau_depth = tau_depth;
    r.far_mask.assign(ldr.bin_count(), 0);
    r.near_mask.assign(ldr.bin_count(), 0);
    for (std::size_t b = 0; b < ldr.bin_count(); ++b) {
        const double I = ldr.intensity(b);
        if (depth_env[b] >= tau_depth)
            r.far_mask[b] = I >= tau_far;
        else
            r.near_mask[b] = I >= tau_near;
    }
    return r;
}

EnvironmentMap apply_light_scales(const EnvironmentMap &ldr, const LightRegions &regions, const LightScales &scales) {
    require(ldr.kind() == MapKind::Ldr, "light scales apply to LDR maps");
    EnvironmentMap tagged = ldr;
    tagged.set_regions(regions);
    tagged.set_scales(scales);
    EnvironmentMap out = tagged;
    for (std::size_t b = 0; b < out.bin_count(); ++b)
        out.set_base(b, tagged.radiance(b));
    out.set_kind(MapKind::Hdr);
    return out;
}

RegionIntensityMeans region_intensity_means(const EnvironmentMap &env) {
    double bg = 0, lit = 0;
    std::size_t nbg = 0, nlit = 0;
    for (std::size_t b = 0; b < env.bin_count(); ++b) {
        Vec3 v = env.radiance(b);
        const double I = intensity(v.x, v.y, v.z);
        if (env.region(b) == RegionId::None) {
            bg += I;
            ++nbg;
        } else {
            lit += I;
            ++nlit;
        }
    }
    return {nbg ? bg / nbg : 0.0, nlit ? lit / nlit : 0.0};
}

// ---------------------------------------------------------------- indoor

namespace {

struct LatLongGrid {
    int h, w;
    std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * w + ((c % w) + w) % w; }
};

// Square-kernel binary dilation/erosion with azimuth wrap and clamped rows.
std::vector<std::uint8_t> morph(const std::vector<std::uint8_t> &mask, const LatLongGrid &g, int radius, bool dilate) {
    std::vector<std::uint8_t> out(mask.size());
    for (int r = 0; r < g.h; ++r)
        for (int c = 0; c < g.w; ++c) {
            bool v = !dilate;
            for (int dr = -radius; dr <= radius && v == !dilate; ++dr) {
                int rr = r + dr;
                if (rr < 0 || rr >= g.h)
                    continue;
                for (int dc = -radius; dc <= radius; ++dc) {
                    bool m = mask[g.idx(rr, c + dc)];
                    if (dilate && m) {
                        v = true;
                        break;
                    }
                    if (!dilate && !m) {
                        v = false;
                        break;
                    }
                }
            }
            out[g.idx(r, c)] = v;
        }
    return out;
}

// Incremental mean keeps constant inputs bit-exact.
struct RunningMean {
    Vec3 mean{};
    double depth = 0;
    std::size_t n = 0;
    void add(Vec3 v, double d) {
        ++n;
        mean += (v - mean) / static_cast<double>(n);
        depth += (d - depth) / static_cast<double>(n);
    }
};

} // namespace

IndoorLdrResult indoor_ldr(const Image &scene_srgb, const Image &depth, const Camera &camera, Vec2 anchor_pixel,
                           const IndoorLdrOptions &opt) {
    require(scene_srgb.channels() >= 3, "scene image needs RGB channels");
    require(depth.width() == scene_srgb.width() && depth.height() == scene_srgb.height(),
            "scene and depth must be aligned");
    const int W = scene_srgb.width(), H = scene_srgb.height();
    const int ax = static_cast<int>(std::floor(anchor_pixel.x)), ay = static_cast<int>(std::floor(anchor_pixel.y));
    require(ax >= 0 && ax < W && ay >= 0 && ay < H, "anchor outside the scene image");

    auto valid_depth = [&](int x, int y) {
        double d = depth.at(x, y, 0);
        return std::isfinite(d) && d > 0;
    };
    if (!valid_depth(ax, ay))
        fail(ErrorKind::InvalidInput, "anchor not covered by depth");

    const Vec3 fwd = camera.forward();
    auto lift = [&](int x, int y) {
        Ray ray = camera.generate_ray(x + 0.5, y + 0.5, W, H);
        return ray.origin + ray.dir * (depth.at(x, y, 0) / dot(ray.dir, fwd));
    };
    const Vec3 anchor = lift(ax, ay);

    const LatLongGrid g{opt.height, opt.width};
    const std::size_t bins = static_cast<std::size_t>(g.h) * g.w;
    std::vector<RunningMean> acc(bins);
    RunningMean scene_mean;

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            Vec3 lin{srgb_to_linear(scene_srgb.at(x, y, 0)), srgb_to_linear(scene_srgb.at(x, y, 1)),
                     srgb_to_linear(scene_srgb.at(x, y, 2))};
            scene_mean.add(lin, 0);
            if (!valid_depth(x, y))
                continue;
            Vec3 v = lift(x, y) - anchor;
            double dist = length(v);
            if (!(dist > 1e-12))
                continue;
            auto b = bin_from_direction(v / dist, g.h, g.w);
            acc[g.idx(b.row, b.col)].add(lin, dist);
        }

    std::vector<std::uint8_t> written(bins);
    std::vector<Vec3> color(bins);
    std::vector<double> dist(bins, std::numeric_limits<double>::infinity());
    for (std::size_t b = 0; b < bins; ++b)
        if (acc[b].n) {
            written[b] = 1;
            color[b] = acc[b].mean;
            dist[b] = acc[b].depth;
        }

    // Remove small isolated bright components (8-connected, azimuth wraps).
    const std::size_t min_area = opt.min_region_area >= 1
                                     ? static_cast<std::size_t>(opt.min_region_area)
                                     : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.min_region_area * bins)));
    auto bright = [&](std::size_t b) { return written[b] && intensity(color[b].x, color[b].y, color[b].z) >= opt.bright_threshold; };
    std::vector<int> label(bins, -1);
    for (std::size_t seed = 0; seed < bins; ++seed) {
        if (label[seed] >= 0 || !bright(seed))
            continue;
        std::vector<std::size_t> comp{seed};
        label[seed] = static_cast<int>(seed);
        for (std::size_t k = 0; k < comp.size(); ++k) {
            const int r = static_cast<int>(comp[k] / g.w), c = static_cast<int>(comp[k] % g.w);
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr;
                    if (rr < 0 || rr >= g.h)
                        continue;
                    const std::size_t nb = g.idx(rr, c + dc);
                    if (label[nb] < 0 && bright(nb)) {
                        label[nb] = static_cast<int>(seed);
                        comp.push_back(nb);
                    }
                }
        }
        if (comp.size() >= min_area)
            continue;
        RunningMean border;
        for (std::size_t b : comp) {
            const int r = static_cast<int>(b / g.w), c = static_cast<int>(b % g.w);
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr;
                    if (rr < 0 || rr >= g.h)
                        continue;
                    const std::size_t nb = g.idx(rr, c + dc);
                    if (written[nb] && !bright(nb))
                        border.add(color[nb], dist[nb]);
                }
        }
        const Vec3 fill = border.n ? border.mean : scene_mean.mean;
        for (std::size_t b : comp)
            color[b] = fill;
    }

    // Holes: bins inside the morphological closing of the coverage that were
    // not splatted. Filled by repeated neighbour averaging.
    if (opt.hole_close_radius > 0) {
        auto closed = morph(morph(written, g, opt.hole_close_radius, true), g, opt.hole_close_radius, false);
        std::vector<std::size_t> holes;
        for (std::size_t b = 0; b < bins; ++b)
            if (closed[b] && !written[b])
                holes.push_back(b);
        while (!holes.empty()) {
            std::vector<std::pair<std::size_t, RunningMean>> updates;
            std::vector<std::size_t> pending;
            for (std::size_t b : holes) {
                const int r = static_cast<int>(b / g.w), c = static_cast<int>(b % g.w);
                RunningMean m;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = r + dr;
                        if ((dr == 0 && dc == 0) || rr < 0 || rr >= g.h)
                            continue;
                        const std::size_t nb = g.idx(rr, c + dc);
                        if (written[nb])
                            m.add(color[nb], dist[nb]);
                    }
                if (m.n)
                    updates.emplace_back(b, m);
                else
                    pending.push_back(b);
            }
            if (updates.empty())
                break;
            for (auto &[b, m] : updates) {
                written[b] = 1;
                color[b] = m.mean;
                dist[b] = m.depth;
            }
            holes = std::move(pending);
        }
    }

    IndoorLdrResult out{EnvironmentMap(g.h, g.w, MapKind::Ldr), std::move(dist), std::move(written)};
    for (std::size_t b = 0; b < bins; ++b)
        out.map.set_base(b, out.written[b] ? color[b] : scene_mean.mean);
    return out;
}

// ---------------------------------------------------------------- SG

Vec3 sg_center_direction(double c_x, double c_y) {
    return direction_from_angles(0.5 * kPi - kPi * c_y, 2 * kPi * (c_x - 0.25));
}

EnvironmentMap synthesize_sg_envmap(const SphericalGaussianParams &p, int height, int width) {
    EnvironmentMap env(height, width, MapKind::Hdr);
    const double mu_el = 0.5 * kPi - kPi * p.c_y;
    const double mu_az = 2 * kPi * (p.c_x - 0.25);
    for (int i = 0; i < height; ++i) {
        const double el = 0.5 * kPi - kPi * ((i + 0.5) / height);
        for (int j = 0; j < width; ++j) {
            double v = p.b_v;
            if (p.c_r > 0 && p.c_v != 0) {
                // 1 - cos(angle) in haversine form: exactly zero at mu.
                const double az = 2 * kPi * ((j + 0.5) / width);
                const double se = std::sin(0.5 * (el - mu_el)), sa = std::sin(0.5 * (az - mu_az));
                const double one_minus_cos = 2 * (se * se + std::cos(el) * std::cos(mu_el) * sa * sa);
                v += p.c_v * std::exp(-one_minus_cos / p.c_r);
            }
            env.set_base(static_cast<std::size_t>(i) * width + j, {v, v, v});
        }
    }
    return env;
}

ApparatusScene build_apparatus_scene(const TriangleMesh &object, const ChannelBounds &bounds) {
    require(!object.positions.empty(), "apparatus needs a non-empty object");
    require(object.max_radius() <= kNormalizedRadius * (1 + 1e-9), "apparatus needs a normalized object");
    bounds.validate();
    ApparatusScene s;
    s.sphere = make_icosphere(kNormalizedRadius, 3);
    s.material = {1.0, 1.0, 1.0, bounds.hi(kRoughness), 0.0};
    s.prompt = std::string(kApparatusPrompt);
    return s;
}

} // namespace sf
