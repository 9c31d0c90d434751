#include "sf/texture/texture_map.h"

#include "sf/core/adam.h"
#include "sf/core/error.h"
#include "sf/core/parallel.h"
#include "sf/io/image_io.h"

#include <algorithm>
#include <cmath>
#include <deque>

namespace sf {

TextureMap::TextureMap(int width, int height, const ChannelBounds &bounds)
    : grid_(width, height, kPbrChannels), bounds_(bounds) {
    require(width >= 1 && height >= 1, "texture map must be at least 1x1");
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i)
            for (int c = 0; c < kPbrChannels; ++c)
                grid_.at(i, j, c) = bounds.mid(c);
}

TextureMap TextureMap::constant(int width, int height, const PbrSample &value, const ChannelBounds &bounds) {
    TextureMap m(width, height, bounds);
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i)
            m.set_texel(i, j, value);
    return m;
}

PbrSample TextureMap::texel(int i, int j) const {
    PbrSample s;
    auto px = grid_.pixel(i, j);
    std::copy(px.begin(), px.end(), s.begin());
    return s;
}

void TextureMap::set_texel(int i, int j, const PbrSample &v) {
    auto px = grid_.pixel(i, j);
    std::copy(v.begin(), v.end(), px.begin());
}

namespace {

// Continuous texel coordinate; values within 1e-9 of an integer snap to it so
// lookups at texel centers are exact.
void axis(double t, int n, int &i0, int &i1, double &f) {
    double x = t * n - 0.5;
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9)
        x = r;
    const double fl = std::floor(x);
    f = x - fl;
    const int k = static_cast<int>(fl);
    i0 = std::clamp(k, 0, n - 1);
    i1 = std::clamp(k + 1, 0, n - 1);
}

} // namespace

TextureMap::Taps TextureMap::taps(Vec2 uv) const {
    int x0, x1, y0, y1;
    double fx, fy;
    axis(uv.x, width(), x0, x1, fx);
    axis(uv.y, height(), y0, y1, fy);
    const auto W = static_cast<std::uint32_t>(width());
    Taps t;
    t.texel = {y0 * W + x0, y0 * W + x1, y1 * W + x0, y1 * W + x1};
    t.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    return t;
}

PbrSample TextureMap::sample(const Taps &t) const {
    PbrSample s{};
    const double *d = grid_.data().data();
    for (int k = 0; k < 4; ++k) {
        if (t.weight[k] == 0)
            continue;
        const double *px = d + static_cast<std::size_t>(t.texel[k]) * kPbrChannels;
        for (int c = 0; c < kPbrChannels; ++c)
            s[c] += t.weight[k] * px[c];
    }
    return s;
}

PbrSample TextureMap::sample(Vec2 uv) const { return sample(taps(uv)); }

void TextureMap::validate() const {
    for (std::size_t t = 0; t < grid_.pixel_count(); ++t)
        for (int c = 0; c < kPbrChannels; ++c) {
            const double v = grid_.data()[t * kPbrChannels + c];
            if (!std::isfinite(v))
                fail(ErrorKind::Numeric, "NaN in parameters: texture map");
            if (v < bounds_.lo(c) - 1e-12 || v > bounds_.hi(c) + 1e-12)
                fail(ErrorKind::InvalidInput, "texture value outside channel bounds");
        }
}

std::size_t UvPositionMap::valid_count() const { return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1)); }

std::vector<std::uint32_t> UvPositionMap::valid_texels() const {
    std::vector<std::uint32_t> out;
    for (std::size_t t = 0; t < valid.size(); ++t)
        if (valid[t])
            out.push_back(static_cast<std::uint32_t>(t));
    return out;
}

UvPositionMap rasterize_uv_positions(const TriangleMesh &mesh, int width, int height) {
    require(width >= 1 && height >= 1, "UV map must be at least 1x1");
    UvPositionMap m;
    m.width = width;
    m.height = height;
    m.position.assign(m.texel_count(), Vec3{});
    m.valid.assign(m.texel_count(), 0);
    std::vector<std::uint8_t> interior(m.texel_count(), 0);
    bool overlap = false;
    for (const auto &f : mesh.faces) {
        const Vec2 a{mesh.uvs[f[0]].x * width, mesh.uvs[f[0]].y * height};
        const Vec2 b{mesh.uvs[f[1]].x * width, mesh.uvs[f[1]].y * height};
        const Vec2 c{mesh.uvs[f[2]].x * width, mesh.uvs[f[2]].y * height};
        const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (area == 0)
            continue;
        const int i_lo = std::max(0, static_cast<int>(std::ceil(std::min({a.x, b.x, c.x}) - 0.5)));
        const int i_hi = std::min(width - 1, static_cast<int>(std::floor(std::max({a.x, b.x, c.x}) - 0.5)));
        const int j_lo = std::max(0, static_cast<int>(std::ceil(std::min({a.y, b.y, c.y}) - 0.5)));
        const int j_hi = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y, b.y, c.y}) - 0.5)));
        for (int j = j_lo; j <= j_hi; ++j)
            for (int i = i_lo; i <= i_hi; ++i) {
                const double px = i + 0.5, py = j + 0.5;
                const double w0 = ((b.x - px) * (c.y - py) - (b.y - py) * (c.x - px)) / area;
                const double w1 = ((c.x - px) * (a.y - py) - (c.y - py) * (a.x - px)) / area;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0 || w1 < 0 || w2 < 0)
                    continue;
                const std::size_t t = static_cast<std::size_t>(j) * width + i;
                const bool strict = w0 > 1e-9 && w1 > 1e-9 && w2 > 1e-9;
                if (m.valid[t] && strict && interior[t])
                    overlap = true;
                m.valid[t] = 1;
                interior[t] = interior[t] || strict;
                m.position[t] = mesh.positions[f[0]] * w0 + mesh.positions[f[1]] * w1 + mesh.positions[f[2]] * w2;
            }
    }
    if (overlap)
        log_warning("UV overlap detected");
    m.source = dilation_sources(width, height, m.valid);
    return m;
}

std::vector<std::uint32_t> dilation_sources(int width, int height, const std::vector<std::uint8_t> &valid) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    constexpr std::uint32_t kNone = ~0u;
    std::vector<std::uint32_t> src(n, kNone);
    std::deque<std::uint32_t> queue;
    for (std::size_t t = 0; t < n; ++t)
        if (valid[t]) {
            src[t] = static_cast<std::uint32_t>(t);
            queue.push_back(static_cast<std::uint32_t>(t));
        }
    while (!queue.empty()) {
        const std::uint32_t t = queue.front();
        queue.pop_front();
        const int i = static_cast<int>(t % width), j = static_cast<int>(t / width);
        const int ni[4] = {i - 1, i + 1, i, i};
        const int nj[4] = {j, j, j - 1, j + 1};
        for (int k = 0; k < 4; ++k) {
            if (ni[k] < 0 || ni[k] >= width || nj[k] < 0 || nj[k] >= height)
                continue;
            const std::size_t q = static_cast<std::size_t>(nj[k]) * width + ni[k];
            if (src[q] == kNone) {
                src[q] = src[t];
                queue.push_back(static_cast<std::uint32_t>(q));
            }
        }
    }
    return src;
}

namespace {

constexpr std::size_t kChunk = 256;

// Evaluates the network at the given texels in fixed-size chunks. When
// `upstream` is set, it maps (texel, prediction) to dL/dprediction and the
// parameter gradient is accumulated in chunk order.
template <class Upstream>
void run_texels(const NeuralTexture &tex, const UvPositionMap &uvpos, const std::vector<std::uint32_t> &texels,
                std::vector<PbrSample> *predictions, Upstream &&upstream, TextureGradient *grad) {
    const std::size_t chunks = (texels.size() + kChunk - 1) / kChunk;
    const std::size_t mlp_begin = tex.w1_offset();
    const std::size_t mlp_size = tex.param_count() - mlp_begin;
    if (predictions)
        predictions->resize(texels.size());
    // Work in groups so the per-chunk scratch stays bounded.
    const std::size_t group = std::max<std::size_t>(worker_count() * 4, 16);
    // Scratch is reused across calls; run_texels is only entered from one thread.
    static thread_local std::vector<std::vector<double>> mlp;
    static thread_local std::vector<std::vector<std::pair<std::uint32_t, double>>> hash;
    for (std::size_t g0 = 0; g0 < chunks; g0 += group) {
        const std::size_t g1 = std::min(chunks, g0 + group);
        if (grad && mlp.size() < g1 - g0) {
            mlp.resize(g1 - g0);
            hash.resize(g1 - g0);
        }
        parallel_for(g1 - g0, [&](std::size_t k) {
            const std::size_t ch = g0 + k;
            NeuralTexture::Workspace ws;
            if (grad) {
                mlp[k].assign(mlp_size, 0.0);
                hash[k].clear();
            }
            const std::size_t end = std::min(texels.size(), (ch + 1) * kChunk);
            for (std::size_t n = ch * kChunk; n < end; ++n) {
                const PbrSample out = tex.evaluate(uvpos.position[texels[n]], ws);
                if (predictions)
                    (*predictions)[n] = out;
                if (grad) {
                    const PbrSample up = upstream(n, out);
                    tex.backward(ws, up, mlp[k], hash[k]);
                }
            }
        });
        if (grad)
            for (std::size_t k = 0; k < g1 - g0; ++k) {
                for (auto &[i, v] : hash[k])
                    grad->add(i, v);
                for (std::size_t i = 0; i < mlp_size; ++i)
                    grad->add(static_cast<std::uint32_t>(mlp_begin + i), mlp[k][i]);
            }
    }
}

} // namespace

TextureMap bake_texture_map(const NeuralTexture &tex, const UvPositionMap &uvpos) {
    const auto texels = uvpos.valid_texels();
    if (texels.empty())
        fail(ErrorKind::InvalidInput, "empty UV coverage");
    std::vector<PbrSample> pred;
    TextureMap out(uvpos.width, uvpos.height, tex.bounds());
    run_texels(tex, uvpos, texels, &pred, [](std::size_t, const PbrSample &) { return PbrSample{}; }, nullptr);
    auto &data = out.grid().data();
    for (std::size_t n = 0; n < texels.size(); ++n)
        std::copy(pred[n].begin(), pred[n].end(), data.begin() + static_cast<std::ptrdiff_t>(texels[n]) * kPbrChannels);
    for (std::size_t t = 0; t < uvpos.texel_count(); ++t)
        if (!uvpos.valid[t]) {
            const std::size_t s = uvpos.source[t];
            std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(s) * kPbrChannels, kPbrChannels,
                        data.begin() + static_cast<std::ptrdiff_t>(t) * kPbrChannels);
        }
    return out;
}

void bake_backward(const NeuralTexture &tex, const UvPositionMap &uvpos, const Image &grid_grad, TextureGradient &grad) {
    if (grid_grad.width() != uvpos.width || grid_grad.height() != uvpos.height || grid_grad.channels() != kPbrChannels)
        fail(ErrorKind::InvalidInput, "gradient shape mismatch");
    if (grad.values.size() != tex.param_count())
        grad.reset(tex.param_count());
    std::vector<double> folded(uvpos.texel_count() * kPbrChannels, 0.0);
    for (std::size_t t = 0; t < uvpos.texel_count(); ++t) {
        const std::size_t s = uvpos.source[t];
        if (s >= uvpos.texel_count())
            continue;
        for (int c = 0; c < kPbrChannels; ++c)
            folded[s * kPbrChannels + c] += grid_grad.data()[t * kPbrChannels + c];
    }
    std::vector<std::uint32_t> texels;
    for (std::size_t t = 0; t < uvpos.texel_count(); ++t)
        if (uvpos.valid[t])
            for (int c = 0; c < kPbrChannels; ++c)
                if (folded[t * kPbrChannels + c] != 0) {
                    texels.push_back(static_cast<std::uint32_t>(t));
                    break;
                }
    run_texels(
        tex, uvpos, texels, nullptr,
        [&](std::size_t n, const PbrSample &) {
            PbrSample up;
            std::copy_n(folded.begin() + static_cast<std::ptrdiff_t>(texels[n]) * kPbrChannels, kPbrChannels, up.begin());
            return up;
        },
        &grad);
}

double fit_learning_rate(const FitSchedule &s, int iteration) {
    if (s.iterations <= 1)
        return s.lr_start;
    return s.lr_start + (s.lr_end - s.lr_start) * static_cast<double>(iteration) / (s.iterations - 1);
}

FitResult fit_neural_texture(const TextureMap &target, const UvPositionMap &uvpos, const FitSchedule &schedule,
                             const NeuralTextureConfig &config) {
    require(target.width() == uvpos.width && target.height() == uvpos.height,
            "target and UV position map must share dimensions");
    require(schedule.iterations >= 1, "fit needs at least one iteration");
    const auto texels = uvpos.valid_texels();
    if (texels.empty())
        fail(ErrorKind::InvalidInput, "empty UV coverage");

    FitResult result{NeuralTexture(config, schedule.seed), 0.0, {}};
    NeuralTexture &tex = result.texture;
    Adam adam(tex.param_count());
    TextureGradient grad;
    grad.reset(tex.param_count());
    const double norm = 1.0 / (static_cast<double>(texels.size()) * kPbrChannels);
    const auto &tgt = target.grid().data();
    std::vector<double> sq(texels.size());

    for (int it = 0; it < schedule.iterations; ++it) {
        grad.reset(tex.param_count());
        run_texels(
            tex, uvpos, texels, nullptr,
            [&](std::size_t n, const PbrSample &out) {
                PbrSample up;
                double e2 = 0;
                for (int c = 0; c < kPbrChannels; ++c) {
                    const double d = out[c] - tgt[static_cast<std::size_t>(texels[n]) * kPbrChannels + c];
                    e2 += d * d;
                    up[c] = 2 * d * norm;
                }
                sq[n] = e2;
                return up;
            },
            &grad);
        double loss = 0;
        for (double e : sq)
            loss += e;
        loss *= norm;
        result.loss_history.push_back(loss);
        if (!std::isfinite(loss))
            fail(ErrorKind::Numeric, "fit diverged; reduce learning rate");
        adam.step_sparse(tex.params(), grad.values, grad.touched, fit_learning_rate(schedule, it));
    }
    // Loss of the returned parameters.
    const TextureMap baked = bake_texture_map(tex, uvpos);
    double loss = 0;
    for (auto t : texels)
        for (int c = 0; c < kPbrChannels; ++c) {
            const double d = baked.grid().data()[t * kPbrChannels + c] - tgt[t * kPbrChannels + c];
            loss += d * d;
        }
    result.final_loss = loss * norm;
    if (!std::isfinite(result.final_loss))
        fail(ErrorKind::Numeric, "fit diverged; reduce learning rate");
    return result;
}

void export_texture_map(const TextureMap &map, const std::filesystem::path &dir, bool with_exr) {
    std::filesystem::create_directories(dir);
    const int W = map.width(), H = map.height();
    Image color(W, H, 3), rm(W, H, 3);
    for (int j = 0; j < H; ++j)
        for (int i = 0; i < W; ++i) {
            const PbrSample s = map.texel(i, j);
            const int row = H - 1 - j;
            for (int c = 0; c < 3; ++c)
                color.at(i, row, c) = linear_to_srgb(s[c]);
            rm.at(i, row, 0) = s[kRoughness];
            rm.at(i, row, 1) = s[kMetalness];
        }
    io::write_png(dir / "base_color.png", color);
    io::write_png(dir / "roughness_metalness.png", rm);
    if (with_exr) {
        Image all(W, H, kPbrChannels);
        for (int j = 0; j < H; ++j)
            for (int i = 0; i < W; ++i)
                for (int c = 0; c < kPbrChannels; ++c)
                    all.at(i, H - 1 - j, c) = map.grid().at(i, j, c);
        io::write_exr(dir / "texture.exr", all, {"R", "G", "B", "roughness", "metalness"});
    }
}

TextureMap import_texture_exr(const std::filesystem::path &path, const ChannelBounds &bounds) {
    std::vector<std::string> names;
    const Image img = io::read_exr(path, &names);
    const char *want[kPbrChannels] = {"R", "G", "B", "roughness", "metalness"};
    int idx[kPbrChannels];
    for (int c = 0; c < kPbrChannels; ++c) {
        auto it = std::find(names.begin(), names.end(), want[c]);
        if (it == names.end())
            fail(ErrorKind::InvalidInput, std::string("texture EXR lacks channel ") + want[c]);
        idx[c] = static_cast<int>(it - names.begin());
    }
    TextureMap map(img.width(), img.height(), bounds);
    for (int j = 0; j < img.height(); ++j)
        for (int i = 0; i < img.width(); ++i)
            for (int c = 0; c < kPbrChannels; ++c)
                map.grid().at(i, j, c) = img.at(i, img.height() - 1 - j, idx[c]);
    return map;
}

} // namespace sf
