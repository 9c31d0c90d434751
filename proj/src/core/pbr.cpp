#include "sf/core/pbr.h"

#include "sf/core/error.h"

namespace sf {

void ChannelBounds::validate() const {
    for (int c = 0; c < kPbrChannels; ++c)
        require(lo(c) < hi(c), "channel bounds must satisfy min < max");
    for (int c = kDiffuseR; c <= kDiffuseB; ++c)
        require(lo(c) >= 0.0 && hi(c) <= 1.0, "diffuse bounds must lie in [0,1]");
    require(lo(kRoughness) > 0.0 && hi(kRoughness) <= 1.0, "roughness bounds must lie in (0,1]");
    require(lo(kMetalness) >= 0.0 && hi(kMetalness) <= 1.0, "metalness bounds must lie in [0,1]");
}

} // namespace sf
