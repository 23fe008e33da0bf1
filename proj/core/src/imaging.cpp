#include "fundus/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "fundus/error.hpp"

namespace fundus {

void PreprocessConfig::validate() const {
    if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
    if (!(amplification > 0.0)) throw ParameterError("amplification must be > 0");
    if (!(offset >= 0.0 && offset <= 255.0)) throw ParameterError("offset must lie in [0, 255]");
    if (enabled && crop_size == 0) throw ParameterError("crop_size must be >= 1");
}

KvBlock to_kv(const PreprocessConfig& cfg) {
    return {
        {"preprocess", cfg.enabled ? "1" : "0"},
        {"crop_size", std::to_string(cfg.crop_size)},
        {"resize_to", std::to_string(cfg.resize_to)},
        {"sigma", format_double(cfg.sigma)},
        {"amplification", format_double(cfg.amplification)},
        {"offset", format_double(cfg.offset)},
    };
}

bool set_field(PreprocessConfig& cfg, std::string_view key, std::string_view value) {
    auto u32 = [&] {
        const auto v = parse_u64(key, value);
        if (v > UINT32_MAX) throw ConfigError("value for '" + std::string(key) + "' is too large");
        return static_cast<std::uint32_t>(v);
    };
    if (key == "preprocess") cfg.enabled = parse_bool(key, value);
    else if (key == "crop_size") cfg.crop_size = u32();
    else if (key == "resize_to") cfg.resize_to = u32();
    else if (key == "sigma") cfg.sigma = parse_double(key, value);
    else if (key == "amplification") cfg.amplification = parse_double(key, value);
    else if (key == "offset") cfg.offset = parse_double(key, value);
    else return false;
    return true;
}

PreprocessConfig preprocess_config_from_kv(const KvBlock& block) {
    PreprocessConfig cfg;
    for (const auto& [key, value] : block) {
        if (!set_field(cfg, key, value)) throw ConfigError("unknown preprocess key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

std::uint8_t quantize(double value) noexcept {
    const double r = std::round(value);
    if (!(r > 0.0)) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

Image center_crop(const Image& img, std::uint32_t crop_w, std::uint32_t crop_h) {
    if (crop_w == 0 || crop_h == 0) throw DimensionError("crop size must be at least 1x1");
    if (crop_w > img.width() || crop_h > img.height()) {
        throw DimensionError("crop " + std::to_string(crop_w) + "x" + std::to_string(crop_h) +
                             " exceeds source " + std::to_string(img.width()) + "x" +
                             std::to_string(img.height()));
    }
    const std::uint32_t x0 = (img.width() - crop_w) / 2;
    const std::uint32_t y0 = (img.height() - crop_h) / 2;
    Image out(crop_w, crop_h);
    const auto src = img.data();
    auto dst = out.data();
    const std::size_t row_bytes = static_cast<std::size_t>(crop_w) * 3;
    for (std::uint32_t y = 0; y < crop_h; ++y) {
        const auto from = (static_cast<std::size_t>(y + y0) * img.width() + x0) * 3;
        std::copy_n(src.begin() + from, row_bytes, dst.begin() + y * row_bytes);
    }
    return out;
}

namespace {

struct Tap {
    std::uint32_t i0, i1;
    double frac;
};

std::vector<Tap> bilinear_taps(std::uint32_t in, std::uint32_t out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / out;
    const double hi = static_cast<double>(in - 1);
    for (std::uint32_t d = 0; d < out; ++d) {
        const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, hi);
        const auto i0 = static_cast<std::uint32_t>(std::floor(s));
        taps[d] = {i0, std::min(i0 + 1, in - 1), s - i0};
    }
    return taps;
}

}  // namespace

Image resize_bilinear(const Image& img, std::uint32_t out_w, std::uint32_t out_h) {
    if (out_w == 0 || out_h == 0) throw DimensionError("resize target must be at least 1x1");
    if (out_w == img.width() && out_h == img.height()) return img;

    const auto xs = bilinear_taps(img.width(), out_w);
    const auto ys = bilinear_taps(img.height(), out_h);
    Image out(out_w, out_h);
    for (std::uint32_t y = 0; y < out_h; ++y) {
        const auto& ty = ys[y];
        for (std::uint32_t x = 0; x < out_w; ++x) {
            const auto& tx = xs[x];
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(tx.i0, ty.i0, c) * (1.0 - tx.frac) + img.at(tx.i1, ty.i0, c) * tx.frac;
                const double bot = img.at(tx.i0, ty.i1, c) * (1.0 - tx.frac) + img.at(tx.i1, ty.i1, c) * tx.frac;
                out.at(x, y, c) = quantize(top * (1.0 - ty.frac) + bot * ty.frac);
            }
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be > 0");
    const auto r = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (std::int64_t i = -r; i <= r; ++i) {
        const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + r)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

std::int64_t reflect101(std::int64_t i, std::int64_t n) noexcept {
    if (n == 1) return 0;
    const std::int64_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

Channel gaussian_blur(const Channel& ch, double sigma) {
    const auto k = gaussian_kernel(sigma);
    const auto r = static_cast<std::int64_t>(k.size() / 2);
    const std::int64_t w = ch.width, h = ch.height;

    // Precomputed reflected indices for offsets -r..r around every coordinate.
    auto index_table = [&](std::int64_t n) {
        std::vector<std::uint32_t> t(static_cast<std::size_t>(n * (2 * r + 1)));
        for (std::int64_t p = 0; p < n; ++p)
            for (std::int64_t o = -r; o <= r; ++o)
                t[static_cast<std::size_t>(p * (2 * r + 1) + o + r)] =
                    static_cast<std::uint32_t>(reflect101(p + o, n));
        return t;
    };
    const auto xi = index_table(w);
    const auto yi = index_table(h);
    const std::size_t taps = k.size();

    std::vector<double> tmp(ch.data.size());
    for (std::int64_t y = 0; y < h; ++y) {
        const float* row = ch.data.data() + y * w;
        for (std::int64_t x = 0; x < w; ++x) {
            const auto* idx = xi.data() + x * static_cast<std::int64_t>(taps);
            double acc = 0.0;
            for (std::size_t t = 0; t < taps; ++t) acc += k[t] * row[idx[t]];
            tmp[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }

    Channel out(ch.width, ch.height);
    std::vector<double> acc(static_cast<std::size_t>(w));
    for (std::int64_t y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const auto* idx = yi.data() + y * static_cast<std::int64_t>(taps);
        for (std::size_t t = 0; t < taps; ++t) {
            const double kt = k[t];
            const double* src = tmp.data() + static_cast<std::int64_t>(idx[t]) * w;
            for (std::int64_t x = 0; x < w; ++x) acc[static_cast<std::size_t>(x)] += kt * src[x];
        }
        for (std::int64_t x = 0; x < w; ++x) out.data[static_cast<std::size_t>(y * w + x)] = static_cast<float>(acc[static_cast<std::size_t>(x)]);
    }
    return out;
}

Image color_normalize(const Image& img, const PreprocessConfig& cfg) {
    cfg.validate();
    Image out(img.width(), img.height());
    auto dst = out.data();
    const auto src = img.data();
    for (int c = 0; c < 3; ++c) {
        const Channel blurred = gaussian_blur(extract_channel(img, c), cfg.sigma);
        for (std::size_t i = 0; i < blurred.data.size(); ++i) {
            const double residual = static_cast<double>(src[i * 3 + c]) - blurred.data[i];
            dst[i * 3 + c] = quantize(cfg.amplification * residual + cfg.offset);
        }
    }
    return out;
}

Image preprocess(const Image& img, const PreprocessConfig& cfg) {
    cfg.validate();
    if (!cfg.enabled) return img;
    Image out = center_crop(img, cfg.crop_size, cfg.crop_size);
    if (cfg.resize_to > 0) out = resize_bilinear(out, cfg.resize_to, cfg.resize_to);
    return color_normalize(out, cfg);
}

}  // namespace fundus
