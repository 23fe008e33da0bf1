#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fundus/image.hpp"
#include "fundus/kv.hpp"

namespace fundus {

// Crop -> optional resize -> local-mean colour normalisation.
struct PreprocessConfig {
    // When false the chain is skipped entirely (inputs are used as-is, apart
    // from the resize to the network input size done by the data loader).
    bool enabled = true;
    std::uint32_t crop_size = 800;
    std::uint32_t resize_to = 448;  // 0 keeps the cropped size
    double sigma = 10.0;            // Gaussian std-dev in pixels
    double amplification = 4.0;
    double offset = 128.0;

    void validate() const;
    friend bool operator==(const PreprocessConfig&, const PreprocessConfig&) = default;
};

KvBlock to_kv(const PreprocessConfig& cfg);
// Returns false when `key` is not a preprocessing key.
bool set_field(PreprocessConfig& cfg, std::string_view key, std::string_view value);
PreprocessConfig preprocess_config_from_kv(const KvBlock& block);

// Round half away from zero, then clamp to [0, 255].
std::uint8_t quantize(double value) noexcept;

Image center_crop(const Image& img, std::uint32_t crop_w, std::uint32_t crop_h);

// Half-pixel-centre bilinear resampling; source coordinates are clamped to the raster.
Image resize_bilinear(const Image& img, std::uint32_t out_w, std::uint32_t out_h);

// Normalised taps k(-r..r), r = ceil(3*sigma).
std::vector<double> gaussian_kernel(double sigma);

// Reflect-101 index mapping (edge pixel not repeated) for any integer index.
std::int64_t reflect101(std::int64_t i, std::int64_t n) noexcept;

// Separable Gaussian blur with reflect-101 borders.
Channel gaussian_blur(const Channel& ch, double sigma);

// out = clamp(round(amplification * (orig - blur(orig)) + offset)) per channel.
Image color_normalize(const Image& img, const PreprocessConfig& cfg);

Image preprocess(const Image& img, const PreprocessConfig& cfg);

}  // namespace fundus
