#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fundus {

// Interleaved 8-bit RGB raster, row-major, top-left origin.
class Image {
public:
    Image() = default;
    // Black image. Throws DimensionError when either side is zero.
    Image(std::uint32_t width, std::uint32_t height);
    // Takes ownership of `data`, which must hold exactly width*height*3 bytes.
    Image(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> data);

    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t& at(std::uint32_t x, std::uint32_t y, int c) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }
    std::uint8_t at(std::uint32_t x, std::uint32_t y, int c) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }

    std::span<std::uint8_t> data() noexcept { return data_; }
    std::span<const std::uint8_t> data() const noexcept { return data_; }
    const std::vector<std::uint8_t>& bytes() const noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::uint32_t width_ = 0;
    std::uint32_t height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Single colour plane in float, the working representation for per-channel filters.
struct Channel {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<float> data;

    Channel() = default;
    Channel(std::uint32_t w, std::uint32_t h, float fill = 0.0f);

    float& at(std::uint32_t x, std::uint32_t y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(std::uint32_t x, std::uint32_t y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

Channel extract_channel(const Image& img, int c);

// Binary NetPBM P6 with maxval 255. Header comments ('#') are accepted.
Image decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image& img);

// Sniffs the signature and dispatches to the PPM decoder or, when built with
// libpng, the PNG adapter.
Image decode_image(std::span<const std::uint8_t> bytes);
bool png_supported() noexcept;

Image read_image(const std::string& path);
void write_ppm(const std::string& path, const Image& img);

std::vector<std::uint8_t> read_binary_file(const std::string& path);

}  // namespace fundus
