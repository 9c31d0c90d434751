#pragma once

#include "sf/core/pbr.h"
#include "sf/core/vec.h"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sf {

struct HashEncodingConfig {
    int levels = 12;
    int base_resolution = 16;
    double growth = 1.5;
    int log2_table_size = 17;
    int features = 2;

    bool operator==(const HashEncodingConfig &) const = default;
};

// Multi-resolution grid encoding over the normalized object volume. Positions
// are mapped with p + 0.5 and clamped to the unit cube. A level is stored
// densely while its (res+1)^3 vertices fit the table, hashed otherwise.
class HashEncoding {
public:
    HashEncoding() = default;
    explicit HashEncoding(const HashEncodingConfig &config);

    struct Taps {
        // Per level: 8 corner entries and trilinear weights.
        std::vector<std::uint32_t> index; // levels * 8, entry offsets into the parameter block
        std::vector<double> weight;       // levels * 8
    };

    const HashEncodingConfig &config() const { return config_; }
    int output_dim() const { return config_.levels * config_.features; }
    std::size_t param_count() const { return param_count_; }
    int resolution(int level) const { return resolution_[level]; }
    std::size_t level_offset(int level) const { return offset_[level]; }
    std::size_t level_entries(int level) const { return entries_[level]; }

    void taps(Vec3 position, Taps &out) const;
    // features[l*F + f] = sum_c w_c * params[index_c*F + f]
    void encode(const Taps &taps, std::span<const double> params, std::span<double> features) const;

private:
    HashEncodingConfig config_;
    std::vector<int> resolution_;
    std::vector<std::size_t> offset_;  // in entries
    std::vector<std::size_t> entries_;
    std::size_t param_count_ = 0;
};

enum class HiddenActivation { Softplus, Relu };

struct NeuralTextureConfig {
    HashEncodingConfig encoding;
    int hidden = 32;
    HiddenActivation activation = HiddenActivation::Softplus;
    ChannelBounds bounds;
    double hash_init_scale = 1e-4;

    bool operator==(const NeuralTextureConfig &) const = default;
};

// Parameter block layout: [hash table | W1 (hidden x enc) | W2 (5 x hidden)].
// The MLP has exactly two weight matrices and no bias terms.
class NeuralTexture {
public:
    NeuralTexture() = default;
    NeuralTexture(const NeuralTextureConfig &config, std::uint64_t seed);

    const NeuralTextureConfig &config() const { return config_; }
    const HashEncoding &encoding() const { return encoding_; }
    const ChannelBounds &bounds() const { return config_.bounds; }

    std::vector<double> &params() { return params_; }
    const std::vector<double> &params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }
    std::size_t w1_offset() const { return encoding_.param_count(); }
    std::size_t w2_offset() const { return w1_offset() + static_cast<std::size_t>(config_.hidden) * encoding_.output_dim(); }

    struct ParamGroup {
        std::string name;
        std::size_t offset, size;
        bool bias;
    };
    std::vector<ParamGroup> census() const;

    PbrSample evaluate(Vec3 position) const;

    // Scratch for one evaluation, reused across calls.
    struct Workspace {
        HashEncoding::Taps taps;
        std::vector<double> enc, pre, hid; // pre: hidden activation slopes
        std::array<double, kPbrChannels> sig{};
    };
    PbrSample evaluate(Vec3 position, Workspace &ws) const;
    // Accumulates d(sum_c upstream_c * out_c)/d(params) for the evaluation left
    // in `ws`. W1/W2 gradients go to `mlp_grads` (indexed from w1_offset());
    // hash-table gradients are appended to `hash_grads` as (parameter index,
    // value) pairs.
    void backward(const Workspace &ws, const PbrSample &upstream, std::span<double> mlp_grads,
                  std::vector<std::pair<std::uint32_t, double>> &hash_grads) const;

    void validate() const; // throws "NaN in parameters"

    void save(std::ostream &out) const;
    static NeuralTexture load(std::istream &in);

private:
    NeuralTextureConfig config_;
    HashEncoding encoding_;
    std::vector<double> params_;
};

// Dense gradient buffer with a record of touched hash-table entries.
struct TextureGradient {
    std::vector<double> values;
    std::vector<std::uint32_t> touched; // indices written since reset, first-touch order
    std::vector<std::uint8_t> mark;

    void reset(std::size_t size);
    void add(std::uint32_t i, double v) {
        values[i] += v;
        if (!mark[i]) {
            mark[i] = 1;
            touched.push_back(i);
        }
    }
};

} // namespace sf
