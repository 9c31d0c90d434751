#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace sf {

// Row-major, interleaved multi-channel image. Row 0 is the top row.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Image &o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    double &at(int x, int y, int c = 0) {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int x, int y, int c = 0) const {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::span<double> pixel(int x, int y) {
        return {data_.data() + (static_cast<std::size_t>(y) * width_ + x) * channels_,
                static_cast<std::size_t>(channels_)};
    }
    std::span<const double> pixel(int x, int y) const {
        return {data_.data() + (static_cast<std::size_t>(y) * width_ + x) * channels_,
                static_cast<std::size_t>(channels_)};
    }

    std::vector<double> &data() { return data_; }
    const std::vector<double> &data() const { return data_; }

    bool operator==(const Image &o) const = default;

private:
    int width_ = 0, height_ = 0, channels_ = 0;
    std::vector<double> data_;
};

double srgb_to_linear(double v);
double linear_to_srgb(double v);

// Elementwise transfer-function conversions on the first three channels.
Image srgb_to_linear(const Image &img);
Image linear_to_srgb(const Image &img);

// Peak signal-to-noise ratio for signals with unit peak.
double psnr(const Image &a, const Image &b);
double mean_squared_error(const Image &a, const Image &b);

} // namespace sf
