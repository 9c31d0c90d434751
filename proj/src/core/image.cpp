#include "sf/core/image.h"

#include "sf/core/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sf {

double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

namespace {

template <class F>
Image map_color(const Image &img, F f) {
    Image out = img;
    auto &d = out.data();
    const int c = img.channels();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (static_cast<int>(i % c) < 3)
            d[i] = f(d[i]);
    return out;
}

} // namespace

Image srgb_to_linear(const Image &img) { return map_color(img, [](double v) { return srgb_to_linear(v); }); }
Image linear_to_srgb(const Image &img) { return map_color(img, [](double v) { return linear_to_srgb(v); }); }

double mean_squared_error(const Image &a, const Image &b) {
    require(a.same_shape(b), "image shape mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return a.data().empty() ? 0.0 : acc / static_cast<double>(a.data().size());
}

double psnr(const Image &a, const Image &b) {
    double mse = mean_squared_error(a, b);
    if (mse <= 0)
        return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

} // namespace sf
