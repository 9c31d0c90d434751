#include "sf/texture/neural_texture.h"

#include "sf/core/error.h"
#include "sf/core/rng.h"
#include "sf/io/image_io.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace sf {

namespace {

constexpr std::uint32_t kPrimes[3] = {1u, 2654435761u, 805459861u};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

HashEncoding::HashEncoding(const HashEncodingConfig &c) : config_(c) {
    require(c.levels >= 1 && c.base_resolution >= 1 && c.growth >= 1.0 && c.features >= 1, "invalid hash encoding config");
    require(c.log2_table_size >= 4 && c.log2_table_size <= 24, "hash table size out of range");
    const std::size_t table = std::size_t{1} << c.log2_table_size;
    std::size_t offset = 0;
    for (int l = 0; l < c.levels; ++l) {
        const int res = static_cast<int>(std::floor(c.base_resolution * std::pow(c.growth, l)));
        const std::size_t verts = static_cast<std::size_t>(res + 1) * (res + 1) * (res + 1);
        resolution_.push_back(res);
        offset_.push_back(offset);
        entries_.push_back(std::min(verts, table));
        offset += entries_.back();
    }
    param_count_ = offset * c.features;
}

void HashEncoding::taps(Vec3 p, Taps &out) const {
    out.index.resize(static_cast<std::size_t>(config_.levels) * 8);
    out.weight.resize(out.index.size());
    const double u[3] = {std::clamp(p.x + 0.5, 0.0, 1.0), std::clamp(p.y + 0.5, 0.0, 1.0),
                         std::clamp(p.z + 0.5, 0.0, 1.0)};
    for (int l = 0; l < config_.levels; ++l) {
        const int res = resolution_[l];
        const std::size_t n = entries_[l];
        const bool dense = n == static_cast<std::size_t>(res + 1) * (res + 1) * (res + 1);
        std::uint32_t cell[3];
        double frac[3];
        for (int a = 0; a < 3; ++a) {
            const double x = u[a] * res;
            const int i = std::min(static_cast<int>(x), res - 1);
            cell[a] = static_cast<std::uint32_t>(i);
            frac[a] = x - i;
        }
        for (int c = 0; c < 8; ++c) {
            std::uint32_t v[3];
            double w = 1.0;
            for (int a = 0; a < 3; ++a) {
                const bool hi = (c >> a) & 1;
                v[a] = cell[a] + hi;
                w *= hi ? frac[a] : 1.0 - frac[a];
            }
            std::size_t entry;
            if (dense)
                entry = v[0] + static_cast<std::size_t>(res + 1) * (v[1] + static_cast<std::size_t>(res + 1) * v[2]);
            else
                entry = ((v[0] * kPrimes[0]) ^ (v[1] * kPrimes[1]) ^ (v[2] * kPrimes[2])) & (n - 1);
            out.index[l * 8 + c] = static_cast<std::uint32_t>(offset_[l] + entry);
            out.weight[l * 8 + c] = w;
        }
    }
}

void HashEncoding::encode(const Taps &t, std::span<const double> params, std::span<double> features) const {
    const int F = config_.features;
    for (int l = 0; l < config_.levels; ++l)
        for (int f = 0; f < F; ++f) {
            double acc = 0;
            for (int c = 0; c < 8; ++c)
                acc += t.weight[l * 8 + c] * params[static_cast<std::size_t>(t.index[l * 8 + c]) * F + f];
            features[l * F + f] = acc;
        }
}

NeuralTexture::NeuralTexture(const NeuralTextureConfig &config, std::uint64_t seed)
    : config_(config), encoding_(config.encoding) {
    config_.bounds.validate();
    require(config.hidden >= 1, "hidden width must be positive");
    const std::size_t enc = encoding_.output_dim();
    params_.assign(w2_offset() + static_cast<std::size_t>(kPbrChannels) * config.hidden, 0.0);
    Rng rng(seed);
    for (std::size_t i = 0; i < encoding_.param_count(); ++i)
        params_[i] = rng.uniform(-config.hash_init_scale, config.hash_init_scale);
    const double a = std::sqrt(6.0 / static_cast<double>(enc + config.hidden));
    for (std::size_t i = w1_offset(); i < w2_offset(); ++i)
        params_[i] = rng.uniform(-a, a);
    // W2 starts at zero: the initial output is the midpoint of every bound.
}

std::vector<NeuralTexture::ParamGroup> NeuralTexture::census() const {
    return {{"hash_table", 0, encoding_.param_count(), false},
            {"mlp.w1", w1_offset(), w2_offset() - w1_offset(), false},
            {"mlp.w2", w2_offset(), params_.size() - w2_offset(), false}};
}

PbrSample NeuralTexture::evaluate(Vec3 position) const {
    Workspace ws;
    return evaluate(position, ws);
}

PbrSample NeuralTexture::evaluate(Vec3 position, Workspace &ws) const {
    const int E = encoding_.output_dim(), Hd = config_.hidden;
    ws.enc.resize(E);
    ws.pre.resize(Hd);
    ws.hid.resize(Hd);
    encoding_.taps(position, ws.taps);
    encoding_.encode(ws.taps, params_, ws.enc);
    const double *W1 = params_.data() + w1_offset();
    const double *W2 = params_.data() + w2_offset();
    for (int h = 0; h < Hd; ++h) {
        double z = 0;
        for (int e = 0; e < E; ++e)
            z += W1[h * E + e] * ws.enc[e];
        if (config_.activation == HiddenActivation::Softplus) {
            // pre holds the activation slope sigmoid(z) for the backward pass.
            if (z > 30) {
                ws.hid[h] = z;
                ws.pre[h] = 1.0;
            } else {
                const double e = std::exp(z);
                ws.hid[h] = std::log1p(e);
                ws.pre[h] = e / (1.0 + e);
            }
        } else {
            ws.hid[h] = std::max(z, 0.0);
            ws.pre[h] = z > 0 ? 1.0 : 0.0;
        }
    }
    PbrSample out;
    for (int c = 0; c < kPbrChannels; ++c) {
        double o = 0;
        for (int h = 0; h < Hd; ++h)
            o += W2[c * Hd + h] * ws.hid[h];
        ws.sig[c] = sigmoid(o);
        out[c] = config_.bounds.lo(c) + (config_.bounds.hi(c) - config_.bounds.lo(c)) * ws.sig[c];
    }
    return out;
}

void NeuralTexture::backward(const Workspace &ws, const PbrSample &upstream, std::span<double> mlp_grads,
                             std::vector<std::pair<std::uint32_t, double>> &hash_grads) const {
    const int E = encoding_.output_dim(), Hd = config_.hidden, F = config_.encoding.features;
    const double *W1 = params_.data() + w1_offset();
    const double *W2 = params_.data() + w2_offset();
    double *gW1 = mlp_grads.data();
    double *gW2 = mlp_grads.data() + (w2_offset() - w1_offset());

    std::array<double, kPbrChannels> d_o;
    bool any = false;
    for (int c = 0; c < kPbrChannels; ++c) {
        d_o[c] = upstream[c] * (config_.bounds.hi(c) - config_.bounds.lo(c)) * ws.sig[c] * (1 - ws.sig[c]);
        any |= d_o[c] != 0;
    }
    if (!any)
        return;
    double d_hid[256];
    std::vector<double> d_hid_heap;
    double *dh = d_hid;
    if (Hd > 256) {
        d_hid_heap.resize(Hd);
        dh = d_hid_heap.data();
    }
    for (int h = 0; h < Hd; ++h) {
        double acc = 0;
        for (int c = 0; c < kPbrChannels; ++c) {
            gW2[c * Hd + h] += d_o[c] * ws.hid[h];
            acc += W2[c * Hd + h] * d_o[c];
        }
        dh[h] = acc * ws.pre[h];
    }
    double d_enc[512];
    std::vector<double> d_enc_heap;
    double *de = d_enc;
    if (E > 512) {
        d_enc_heap.resize(E);
        de = d_enc_heap.data();
    }
    std::fill(de, de + E, 0.0);
    for (int h = 0; h < Hd; ++h) {
        if (dh[h] == 0)
            continue;
        for (int e = 0; e < E; ++e) {
            gW1[h * E + e] += dh[h] * ws.enc[e];
            de[e] += W1[h * E + e] * dh[h];
        }
    }
    for (int l = 0; l < config_.encoding.levels; ++l)
        for (int c = 0; c < 8; ++c) {
            const double w = ws.taps.weight[l * 8 + c];
            if (w == 0)
                continue;
            for (int f = 0; f < F; ++f)
                hash_grads.emplace_back(ws.taps.index[l * 8 + c] * F + f, w * de[l * F + f]);
        }
}

void NeuralTexture::validate() const {
    for (double p : params_)
        if (!std::isfinite(p))
            fail(ErrorKind::Numeric, "NaN in parameters: neural texture");
}

void TextureGradient::reset(std::size_t size) {
    if (values.size() != size) {
        values.assign(size, 0.0);
        mark.assign(size, 0);
    } else {
        for (auto i : touched) {
            values[i] = 0.0;
            mark[i] = 0;
        }
    }
    touched.clear();
}

// ---------------------------------------------------------------- blob

namespace {

constexpr char kMagic[4] = {'S', 'F', 'N', 'T'};
constexpr std::uint32_t kBlobVersion = 1;

template <class T> void put(std::string &s, T v) { s.append(reinterpret_cast<const char *>(&v), sizeof(T)); }

template <class T> T take(std::string_view &s) {
    if (s.size() < sizeof(T))
        fail(ErrorKind::Corrupt, "checkpoint corrupt: truncated texture blob");
    T v;
    std::memcpy(&v, s.data(), sizeof(T));
    s.remove_prefix(sizeof(T));
    return v;
}

} // namespace

void NeuralTexture::save(std::ostream &out) const {
    std::string s(kMagic, 4);
    put(s, kBlobVersion);
    const auto &e = config_.encoding;
    put<std::int32_t>(s, e.levels);
    put<std::int32_t>(s, e.base_resolution);
    put<double>(s, e.growth);
    put<std::int32_t>(s, e.log2_table_size);
    put<std::int32_t>(s, e.features);
    put<std::int32_t>(s, config_.hidden);
    put<std::int32_t>(s, static_cast<std::int32_t>(config_.activation));
    put<double>(s, config_.hash_init_scale);
    for (int c = 0; c < kPbrChannels; ++c) {
        put<double>(s, config_.bounds.lo(c));
        put<double>(s, config_.bounds.hi(c));
    }
    put<std::uint64_t>(s, params_.size());
    s.append(reinterpret_cast<const char *>(params_.data()), params_.size() * sizeof(double));
    put<std::uint32_t>(s, io::crc32(s));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

NeuralTexture NeuralTexture::load(std::istream &in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string all = buf.str();
    if (all.size() < 12 || std::memcmp(all.data(), kMagic, 4) != 0)
        fail(ErrorKind::Corrupt, "checkpoint corrupt: not a neural texture blob");
    std::string_view body(all.data(), all.size() - 4);
    std::string_view trailer(all.data() + all.size() - 4, 4);
    if (take<std::uint32_t>(trailer) != io::crc32(body))
        fail(ErrorKind::Corrupt, "checkpoint corrupt: checksum mismatch");
    body.remove_prefix(4);
    const auto version = take<std::uint32_t>(body);
    if (version != kBlobVersion)
        fail(ErrorKind::Corrupt, "texture blob version " + std::to_string(version) + " unsupported (expected " +
                                     std::to_string(kBlobVersion) + ")");
    NeuralTextureConfig c;
    c.encoding.levels = take<std::int32_t>(body);
    c.encoding.base_resolution = take<std::int32_t>(body);
    c.encoding.growth = take<double>(body);
    c.encoding.log2_table_size = take<std::int32_t>(body);
    c.encoding.features = take<std::int32_t>(body);
    c.hidden = take<std::int32_t>(body);
    c.activation = static_cast<HiddenActivation>(take<std::int32_t>(body));
    c.hash_init_scale = take<double>(body);
    for (int ch = 0; ch < kPbrChannels; ++ch) {
        c.bounds.range[ch].first = take<double>(body);
        c.bounds.range[ch].second = take<double>(body);
    }
    NeuralTexture t;
    t.config_ = c;
    t.encoding_ = HashEncoding(c.encoding);
    const auto n = take<std::uint64_t>(body);
    if (n != t.w2_offset() + static_cast<std::size_t>(kPbrChannels) * c.hidden || body.size() != n * sizeof(double))
        fail(ErrorKind::Corrupt, "checkpoint corrupt: parameter count mismatch");
    t.params_.resize(n);
    std::memcpy(t.params_.data(), body.data(), n * sizeof(double));
    return t;
}

} // namespace sf
