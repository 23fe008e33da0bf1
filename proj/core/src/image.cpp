#include "fundus/image.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "fundus/error.hpp"

namespace fundus {

#ifdef FUNDUS_HAS_PNG
Image decode_png(std::span<const std::uint8_t> bytes);  // png_adapter.cpp
#endif

Image::Image(std::uint32_t width, std::uint32_t height)
    : Image(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, 0)) {}

Image::Image(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width == 0 || height == 0) throw DimensionError("image dimensions must be at least 1x1");
    if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
        throw DimensionError("image buffer holds " + std::to_string(data_.size()) + " bytes, expected " +
                             std::to_string(static_cast<std::size_t>(width) * height * 3));
    }
}

Channel::Channel(std::uint32_t w, std::uint32_t h, float fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

Channel extract_channel(const Image& img, int c) {
    Channel ch(img.width(), img.height());
    const auto src = img.data();
    for (std::size_t i = 0; i < ch.data.size(); ++i) ch.data[i] = src[i * 3 + c];
    return ch;
}

namespace {

class HeaderReader {
public:
    HeaderReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

    std::size_t pos() const { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto ch = bytes_[pos_];
            if (ch == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (is_space(ch)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::uint64_t number(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        std::uint64_t value = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 0xFFFFFFFFull) throw DecodeError(std::string(what) + " out of range", start);
            ++pos_;
        }
        if (pos_ == start) {
            throw DecodeError(std::string("malformed header: expected ") + what, start);
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_space() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
            throw DecodeError("malformed header: expected whitespace after maxval", pos_);
        }
        ++pos_;
    }

private:
    static bool is_space(std::uint8_t ch) {
        return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
};

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
        throw DecodeError("malformed header: missing P6 magic", 0);
    }
    HeaderReader reader(bytes, 2);
    const auto width = reader.number("width");
    const auto height = reader.number("height");
    reader.skip_space_and_comments();
    const std::size_t maxval_pos = reader.pos();
    const auto maxval = reader.number("maxval");
    if (width == 0 || height == 0) throw DecodeError("malformed header: zero dimension", 2);
    if (maxval != 255) throw DecodeError("unsupported maxval " + std::to_string(maxval), maxval_pos);
    reader.single_space();

    const std::size_t offset = reader.pos();
    const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
    if (bytes.size() - offset < expected) {
        throw DecodeError("truncated pixel data: need " + std::to_string(expected) + " bytes, have " +
                              std::to_string(bytes.size() - offset),
                          bytes.size());
    }
    std::vector<std::uint8_t> data(bytes.begin() + offset, bytes.begin() + offset + expected);
    return Image(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), std::move(data));
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
    const std::string header =
        "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out;
    out.reserve(header.size() + img.bytes().size());
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), img.bytes().begin(), img.bytes().end());
    return out;
}

bool png_supported() noexcept {
#ifdef FUNDUS_HAS_PNG
    return true;
#else
    return false;
#endif
}

Image decode_image(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::equal(std::begin(png_sig), std::end(png_sig), bytes.begin())) {
#ifdef FUNDUS_HAS_PNG
        return decode_png(bytes);
#else
        throw DecodeError("PNG input but the library was built without libpng", 0);
#endif
    }
    return decode_ppm(bytes);
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Image read_image(const std::string& path) {
    const auto bytes = read_binary_file(path);
    try {
        return decode_image(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path + ": " + e.what(), e.offset());
    }
}

void write_ppm(const std::string& path, const Image& img) {
    const auto bytes = encode_ppm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace fundus
