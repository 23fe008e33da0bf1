#include <png.h>

#include <cstring>

#include "fundus/error.hpp"
#include "fundus/image.hpp"

namespace fundus {

Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw DecodeError(std::string("PNG: ") + image.message, 0);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("PNG: " + msg, 0);
    }
    return Image(image.width, image.height, std::move(data));
}

}  // namespace fundus
