#pragma once

#include "sf/core/image.h"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sf::io {

enum class ExrCompression { None, Zip };

// 8-bit PNG. Values are written as-is after clamping to [0,1]; callers encode
// to sRGB first when the image holds linear color. Channel counts 1-4.
void write_png(const std::filesystem::path &path, const Image &img);
std::string encode_png(const Image &img);
Image read_png(const std::filesystem::path &path);
Image decode_png(std::string_view bytes);

// 32-bit float scanline EXR. Channel names default to R,G,B,A by count.
void write_exr(const std::filesystem::path &path, const Image &img,
               const std::vector<std::string> &channel_names = {},
               ExrCompression compression = ExrCompression::Zip);
std::string encode_exr(const Image &img, const std::vector<std::string> &channel_names = {},
                       ExrCompression compression = ExrCompression::Zip);
// Reads every channel (FLOAT, HALF or UINT). Channels are ordered R,G,B,A first
// when present, then alphabetically; names are returned through channel_names.
Image read_exr(const std::filesystem::path &path, std::vector<std::string> *channel_names = nullptr);
Image decode_exr(std::string_view bytes, std::vector<std::string> *channel_names = nullptr);

// Loads PNG or EXR by extension.
Image read_image(const std::filesystem::path &path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

std::uint32_t crc32(std::string_view bytes);

} // namespace sf::io
