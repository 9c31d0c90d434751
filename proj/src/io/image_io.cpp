#include "sf/io/image_io.h"

#include "sf/core/error.h"

#include <ImfChannelList.h>
#include <ImfFrameBuffer.h>
#include <ImfHeader.h>
#include <ImfIO.h>
#include <ImfInputFile.h>
#include <ImfOutputFile.h>
#include <Iex.h>
#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace sf::io {

namespace {

std::string slurp(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const std::filesystem::path &path, const std::string &bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorKind::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------- PNG

void png_write_to_string(png_structp png, png_bytep data, png_size_t length) {
    auto *out = static_cast<std::string *>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char *>(data), length);
}

void png_flush_noop(png_structp) {}

struct PngReadCursor {
    std::string_view bytes;
    std::size_t offset = 0;
};

void png_read_from_string(png_structp png, png_bytep data, png_size_t length) {
    auto *cur = static_cast<PngReadCursor *>(png_get_io_ptr(png));
    if (cur->offset + length > cur->bytes.size())
        png_error(png, "truncated png");
    std::memcpy(data, cur->bytes.data() + cur->offset, length);
    cur->offset += length;
}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { fail(ErrorKind::Io, std::string("png: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

// ---------------------------------------------------------------- EXR streams

class StringOStream : public Imf::OStream {
public:
    StringOStream() : Imf::OStream("memory") {}
    void write(const char c[], int n) override {
        if (pos_ + n > buffer_.size())
            buffer_.resize(pos_ + n);
        std::memcpy(buffer_.data() + pos_, c, n);
        pos_ += n;
    }
    Imf::Int64 tellp() override { return pos_; }
    void seekp(Imf::Int64 pos) override { pos_ = pos; }
    std::string &buffer() { return buffer_; }

private:
    std::string buffer_;
    std::size_t pos_ = 0;
};

class StringIStream : public Imf::IStream {
public:
    explicit StringIStream(std::string_view bytes) : Imf::IStream("memory"), bytes_(bytes) {}
    bool read(char c[], int n) override {
        if (pos_ + n > bytes_.size())
            throw Iex::InputExc("unexpected end of exr data");
        std::memcpy(c, bytes_.data() + pos_, n);
        pos_ += n;
        return pos_ < bytes_.size();
    }
    Imf::Int64 tellg() override { return pos_; }
    void seekg(Imf::Int64 pos) override { pos_ = pos; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::string> default_channel_names(int channels) {
    static const std::array<const char *, 4> rgba{"R", "G", "B", "A"};
    std::vector<std::string> names;
    if (channels <= 4) {
        if (channels == 1)
            return {"Y"};
        for (int c = 0; c < channels; ++c)
            names.emplace_back(rgba[c]);
    } else {
        for (int c = 0; c < channels; ++c)
            names.push_back("C" + std::to_string(c));
    }
    return names;
}

int channel_rank(const std::string &name) {
    static const std::array<const char *, 5> order{"R", "G", "B", "A", "Y"};
    for (int i = 0; i < static_cast<int>(order.size()); ++i)
        if (name == order[i])
            return i;
    return 100;
}

Image decode_exr_stream(Imf::IStream &stream, std::vector<std::string> *channel_names) {
    Imf::InputFile file(stream);
    const auto &header = file.header();
    const auto dw = header.dataWindow();
    const int width = dw.max.x - dw.min.x + 1;
    const int height = dw.max.y - dw.min.y + 1;

    std::vector<std::string> names;
    for (auto it = header.channels().begin(); it != header.channels().end(); ++it)
        names.emplace_back(it.name());
    std::stable_sort(names.begin(), names.end(), [](const std::string &a, const std::string &b) {
        int ra = channel_rank(a), rb = channel_rank(b);
        return ra != rb ? ra < rb : a < b;
    });

    const int channels = static_cast<int>(names.size());
    std::vector<float> planes(static_cast<std::size_t>(width) * height * channels);
    Imf::FrameBuffer fb;
    for (int c = 0; c < channels; ++c) {
        char *base = reinterpret_cast<char *>(planes.data() + c) -
                     (static_cast<std::ptrdiff_t>(dw.min.x) + static_cast<std::ptrdiff_t>(dw.min.y) * width) *
                         channels * static_cast<std::ptrdiff_t>(sizeof(float));
        fb.insert(names[c].c_str(), Imf::Slice(Imf::FLOAT, base, sizeof(float) * channels,
                                               sizeof(float) * channels * width));
    }
    file.setFrameBuffer(fb);
    file.readPixels(dw.min.y, dw.max.y);

    Image img(width, height, channels);
    std::copy(planes.begin(), planes.end(), img.data().begin());
    if (channel_names)
        *channel_names = names;
    return img;
}

} // namespace

std::string encode_png(const Image &img) {
    require(img.channels() >= 1 && img.channels() <= 4, "png supports 1-4 channels");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    std::string out;
    static const int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                      PNG_COLOR_TYPE_RGB_ALPHA};
    std::vector<png_byte> rows(img.pixel_count() * img.channels());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = static_cast<png_byte>(std::lround(std::clamp(img.data()[i], 0.0, 1.0) * 255.0));
    std::vector<png_bytep> row_ptrs(img.height());
    for (int y = 0; y < img.height(); ++y)
        row_ptrs[y] = rows.data() + static_cast<std::size_t>(y) * img.width() * img.channels();
    try {
        png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
        png_set_IHDR(png, info, img.width(), img.height(), 8, kColorTypes[img.channels() - 1], PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, row_ptrs.data());
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const std::filesystem::path &path, const Image &img) { dump(path, encode_png(img)); }

Image decode_png(std::string_view bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    PngReadCursor cursor{bytes, 0};
    Image img;
    try {
        png_set_read_fn(png, &cursor, png_read_from_string);
        png_read_info(png, info);
        png_set_expand(png);
        png_set_strip_16(png);
        png_set_packing(png);
        png_read_update_info(png, info);
        const int width = static_cast<int>(png_get_image_width(png, info));
        const int height = static_cast<int>(png_get_image_height(png, info));
        const int channels = png_get_channels(png, info);
        std::vector<png_byte> rows(static_cast<std::size_t>(width) * height * channels);
        std::vector<png_bytep> row_ptrs(height);
        for (int y = 0; y < height; ++y)
            row_ptrs[y] = rows.data() + static_cast<std::size_t>(y) * width * channels;
        png_read_image(png, row_ptrs.data());
        img = Image(width, height, channels);
        for (std::size_t i = 0; i < rows.size(); ++i)
            img.data()[i] = rows[i] / 255.0;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image read_png(const std::filesystem::path &path) { return decode_png(slurp(path)); }

std::string encode_exr(const Image &img, const std::vector<std::string> &channel_names, ExrCompression compression) {
    const auto names = channel_names.empty() ? default_channel_names(img.channels()) : channel_names;
    require(static_cast<int>(names.size()) == img.channels(), "exr channel name count mismatch");
    std::vector<float> pixels(img.data().begin(), img.data().end());
    try {
        Imf::Header header(img.width(), img.height());
        header.compression() = compression == ExrCompression::Zip ? Imf::ZIP_COMPRESSION : Imf::NO_COMPRESSION;
        for (const auto &n : names)
            header.channels().insert(n.c_str(), Imf::Channel(Imf::FLOAT));
        Imf::FrameBuffer fb;
        for (int c = 0; c < img.channels(); ++c)
            fb.insert(names[c].c_str(),
                      Imf::Slice(Imf::FLOAT, reinterpret_cast<char *>(pixels.data() + c), sizeof(float) * img.channels(),
                                 sizeof(float) * img.channels() * img.width()));
        StringOStream stream;
        {
            Imf::OutputFile file(stream, header, 1);
            file.setFrameBuffer(fb);
            file.writePixels(img.height());
        }
        return std::move(stream.buffer());
    } catch (const Iex::BaseExc &e) {
        fail(ErrorKind::Io, std::string("exr encode: ") + e.what());
    }
}

void write_exr(const std::filesystem::path &path, const Image &img, const std::vector<std::string> &channel_names,
               ExrCompression compression) {
    dump(path, encode_exr(img, channel_names, compression));
}

Image decode_exr(std::string_view bytes, std::vector<std::string> *channel_names) {
    try {
        StringIStream stream(bytes);
        return decode_exr_stream(stream, channel_names);
    } catch (const Iex::BaseExc &e) {
        fail(ErrorKind::Io, std::string("exr decode: ") + e.what());
    }
}

Image read_exr(const std::filesystem::path &path, std::vector<std::string> *channel_names) {
    return decode_exr(slurp(path), channel_names);
}

Image read_image(const std::filesystem::path &path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".exr")
        return read_exr(path);
    if (ext == ".png")
        return read_png(path);
    fail(ErrorKind::InvalidInput, "unsupported image format: " + path.string());
}

namespace {
constexpr std::string_view kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        std::uint32_t v = (std::uint8_t(bytes[i]) << 16) | (std::uint8_t(bytes[i + 1]) << 8) | std::uint8_t(bytes[i + 2]);
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += kB64[v & 63];
    }
    if (std::size_t rest = bytes.size() - i; rest > 0) {
        std::uint32_t v = std::uint8_t(bytes[i]) << 16;
        if (rest == 2)
            v |= std::uint8_t(bytes[i + 1]) << 8;
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += rest == 2 ? kB64[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    std::array<int, 256> lut;
    lut.fill(-1);
    for (int i = 0; i < 64; ++i)
        lut[static_cast<unsigned char>(kB64[i])] = i;
    std::string out;
    out.reserve(text.size() / 4 * 3);
    std::uint32_t acc = 0;
    int bits = 0;
    for (char ch : text) {
        if (ch == '=')
            break;
        if (ch == '\n' || ch == '\r')
            continue;
        int v = lut[static_cast<unsigned char>(ch)];
        if (v < 0)
            fail(ErrorKind::Protocol, "invalid base64 payload");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((acc >> bits) & 0xff);
        }
    }
    return out;
}

std::uint32_t crc32(std::string_view bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef *>(bytes.data()), static_cast<uInt>(bytes.size())));
}

} // namespace sf::io
