#pragma once

#include "sf/core/image.h"
#include "sf/core/pbr.h"
#include "sf/core/vec.h"
#include "sf/geometry/mesh.h"
#include "sf/texture/neural_texture.h"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace sf {

// Texel (i, j) covers u in [i, i+1)/W and v in [j, j+1)/H; its center is at
// ((i+0.5)/W, (j+0.5)/H). Row j therefore grows with v (row 0 is v near 0).
class TextureMap {
public:
    TextureMap() = default;
    TextureMap(int width, int height, const ChannelBounds &bounds = {});
    static TextureMap constant(int width, int height, const PbrSample &value, const ChannelBounds &bounds = {});

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    const ChannelBounds &bounds() const { return bounds_; }
    Image &grid() { return grid_; }
    const Image &grid() const { return grid_; }

    PbrSample texel(int i, int j) const;
    void set_texel(int i, int j, const PbrSample &v);

    struct Taps {
        std::array<std::uint32_t, 4> texel; // flat texel index j*W + i
        std::array<double, 4> weight;
    };
    // Bilinear footprint with clamp-to-edge; a lookup at a texel center has a
    // single unit weight.
    Taps taps(Vec2 uv) const;
    PbrSample sample(Vec2 uv) const;
    PbrSample sample(const Taps &t) const;

    void validate() const; // every texel inside bounds

private:
    Image grid_;
    ChannelBounds bounds_;
};

class UvPositionMap {
public:
    int width = 0, height = 0;
    std::vector<Vec3> position;         // W*H, row-major by v
    std::vector<std::uint8_t> valid;    // covered by a UV triangle
    std::vector<std::uint32_t> source;  // nearest valid texel (itself when valid)

    std::size_t texel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t valid_count() const;
    std::vector<std::uint32_t> valid_texels() const;
    Vec2 texel_center(std::size_t t) const {
        return {(static_cast<double>(t % width) + 0.5) / width, (static_cast<double>(t / width) + 0.5) / height};
    }
};

// Texels whose center falls inside a UV triangle receive the barycentric
// position; a warning is logged once when islands overlap (last writer wins).
UvPositionMap rasterize_uv_positions(const TriangleMesh &mesh, int width, int height);

// Multi-source BFS over the 4-neighbourhood from valid texels; every texel gets
// the index of the valid texel it copies.
std::vector<std::uint32_t> dilation_sources(int width, int height, const std::vector<std::uint8_t> &valid);

TextureMap bake_texture_map(const NeuralTexture &tex, const UvPositionMap &uvpos);

// Adjoint of the bake: grid_grad is a W x H x 5 image of dL/dtexel. Dilated
// texels forward their gradient to their source. Accumulates into `grad`.
void bake_backward(const NeuralTexture &tex, const UvPositionMap &uvpos, const Image &grid_grad, TextureGradient &grad);

struct FitSchedule {
    int iterations = 1000;
    double lr_start = 0.02;
    double lr_end = 0.001;
    std::uint64_t seed = 0;
};

double fit_learning_rate(const FitSchedule &s, int iteration);

struct FitResult {
    NeuralTexture texture;
    double final_loss = 0;
    std::vector<double> loss_history;
};

// Adam on the mean squared error over valid texels.
FitResult fit_neural_texture(const TextureMap &target, const UvPositionMap &uvpos, const FitSchedule &schedule,
                             const NeuralTextureConfig &config = {});

// Base color as 8-bit sRGB PNG, roughness/metalness as a two-channel PNG
// (R, G), and optionally the full map as float EXR. Images are stored with
// v = 1 at the top row.
void export_texture_map(const TextureMap &map, const std::filesystem::path &dir, bool with_exr = true);
TextureMap import_texture_exr(const std::filesystem::path &path, const ChannelBounds &bounds = {});

} // namespace sf
