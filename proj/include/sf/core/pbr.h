#pragma once

#include <array>
#include <utility>

namespace sf {

// Channel layout of a PBR texel: base color (3), roughness, metalness.
enum PbrChannel : int { kDiffuseR = 0, kDiffuseG = 1, kDiffuseB = 2, kRoughness = 3, kMetalness = 4 };
inline constexpr int kPbrChannels = 5;

using PbrSample = std::array<double, kPbrChannels>;

struct ChannelBounds {
    std::array<std::pair<double, double>, kPbrChannels> range{{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.08, 1.0}, {0.0, 1.0}}};

    double lo(int c) const { return range[c].first; }
    double hi(int c) const { return range[c].second; }
    double mid(int c) const { return 0.5 * (range[c].first + range[c].second); }
    // Throws if any pair is inverted or leaves its admissible domain.
    void validate() const;
    bool operator==(const ChannelBounds &) const = default;
};

} // namespace sf
