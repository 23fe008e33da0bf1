#include "fundus/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "fundus/error.hpp"
#include "fundus/imaging.hpp"

namespace fundus {

bool TransformSpec::is_identity() const noexcept { return *this == TransformSpec{}; }

AugmentPolicy AugmentPolicy::none() {
    AugmentPolicy p;
    p.flip_h.enabled = p.flip_v.enabled = false;
    p.rotation.enabled = p.brightness.enabled = p.contrast.enabled = p.zoom.enabled = false;
    return p;
}

void AugmentPolicy::validate() const {
    auto prob = [](const char* name, double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " probability must lie in [0, 1]");
    };
    auto range = [&](const char* name, const RangeFamily& f, bool positive) {
        prob(name, f.probability);
        if (!(f.lo <= f.hi)) throw ConfigError(std::string(name) + " range must satisfy min <= max");
        if (positive && !(f.lo > 0.0)) throw ConfigError(std::string(name) + " range must be positive");
    };
    prob("flip_h", flip_h.probability);
    prob("flip_v", flip_v.probability);
    range("rotation", rotation, false);
    if (!(std::abs(rotation.lo) <= 180.0 && std::abs(rotation.hi) <= 180.0)) {
        throw ConfigError("rotation range must lie within [-180, 180] degrees");
    }
    range("brightness", brightness, true);
    range("contrast", contrast, true);
    range("zoom", zoom, true);
    if (!std::isfinite(tta_rotation_deg)) throw ConfigError("tta_rotation must be finite");
}

namespace {

struct RangeKeys {
    const char* name;
    RangeFamily AugmentPolicy::*member;
};
constexpr RangeKeys kRanges[] = {
    {"rotation", &AugmentPolicy::rotation},
    {"brightness", &AugmentPolicy::brightness},
    {"contrast", &AugmentPolicy::contrast},
    {"zoom", &AugmentPolicy::zoom},
};

}  // namespace

KvBlock to_kv(const AugmentPolicy& p) {
    KvBlock kv{
        {"aug_flip_h", p.flip_h.enabled ? "1" : "0"},
        {"aug_flip_h_p", format_double(p.flip_h.probability)},
        {"aug_flip_v", p.flip_v.enabled ? "1" : "0"},
        {"aug_flip_v_p", format_double(p.flip_v.probability)},
    };
    for (const auto& r : kRanges) {
        const auto& f = p.*r.member;
        const std::string base = std::string("aug_") + r.name;
        kv.emplace_back(base, f.enabled ? "1" : "0");
        kv.emplace_back(base + "_p", format_double(f.probability));
        kv.emplace_back(base + "_min", format_double(f.lo));
        kv.emplace_back(base + "_max", format_double(f.hi));
    }
    kv.emplace_back("tta", p.tta_enabled ? "1" : "0");
    kv.emplace_back("tta_rotation", format_double(p.tta_rotation_deg));
    return kv;
}

bool set_field(AugmentPolicy& p, std::string_view key, std::string_view value) {
    if (key == "aug_flip_h") p.flip_h.enabled = parse_bool(key, value);
    else if (key == "aug_flip_h_p") p.flip_h.probability = parse_double(key, value);
    else if (key == "aug_flip_v") p.flip_v.enabled = parse_bool(key, value);
    else if (key == "aug_flip_v_p") p.flip_v.probability = parse_double(key, value);
    else if (key == "tta") p.tta_enabled = parse_bool(key, value);
    else if (key == "tta_rotation") p.tta_rotation_deg = parse_double(key, value);
    else {
        for (const auto& r : kRanges) {
            const std::string base = std::string("aug_") + r.name;
            auto& f = p.*r.member;
            if (key == base) f.enabled = parse_bool(key, value);
            else if (key == base + "_p") f.probability = parse_double(key, value);
            else if (key == base + "_min") f.lo = parse_double(key, value);
            else if (key == base + "_max") f.hi = parse_double(key, value);
            else continue;
            return true;
        }
        return false;
    }
    return true;
}

AugmentPolicy augment_policy_from_kv(const KvBlock& block) {
    AugmentPolicy p;
    for (const auto& [key, value] : block) {
        if (!set_field(p, key, value)) throw ConfigError("unknown augmentation key '" + key + "'");
    }
    p.validate();
    return p;
}

TransformSpec sample_transform(RngStream& rng, const AugmentPolicy& policy) {
    TransformSpec t;
    if (policy.flip_h.enabled) t.flip_h = rng.bernoulli(policy.flip_h.probability);
    if (policy.flip_v.enabled) t.flip_v = rng.bernoulli(policy.flip_v.probability);

    auto draw = [&rng](const RangeFamily& f, double identity) {
        if (!f.enabled) return identity;
        const bool fire = rng.bernoulli(f.probability);
        const double value = rng.uniform(f.lo, f.hi);
        return fire ? value : identity;
    };
    t.rotation_deg = draw(policy.rotation, 0.0);
    t.brightness = draw(policy.brightness, 1.0);
    t.contrast = draw(policy.contrast, 1.0);
    t.zoom = draw(policy.zoom, 1.0);
    return t;
}

Image flip_horizontal(const Image& img) {
    Image out(img.width(), img.height());
    const auto w = img.width();
    for (std::uint32_t y = 0; y < img.height(); ++y)
        for (std::uint32_t x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(w - 1 - x, y, c);
    return out;
}

Image flip_vertical(const Image& img) {
    Image out(img.width(), img.height());
    const auto h = img.height();
    const std::size_t row = static_cast<std::size_t>(img.width()) * 3;
    const auto src = img.data();
    auto dst = out.data();
    for (std::uint32_t y = 0; y < h; ++y)
        std::copy_n(src.begin() + (h - 1 - y) * row, row, dst.begin() + y * row);
    return out;
}

namespace {

// Inverse-maps each output pixel through `to_source` and samples bilinearly;
// neighbours outside the raster read as black.
template <class Map>
Image warp(const Image& img, Map to_source) {
    const std::int64_t w = img.width(), h = img.height();
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    Image out(img.width(), img.height());
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const auto [sx, sy] = to_source(x - cx, y - cy);
            const double fx = sx + cx, fy = sy + cy;
            const double x0f = std::floor(fx), y0f = std::floor(fy);
            const double ax = fx - x0f, ay = fy - y0f;
            const auto x0 = static_cast<std::int64_t>(x0f), y0 = static_cast<std::int64_t>(y0f);
            const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
            const std::int64_t px[4] = {x0, x0 + 1, x0, x0 + 1};
            const std::int64_t py[4] = {y0, y0, y0 + 1, y0 + 1};
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int n = 0; n < 4; ++n) {
                    if (px[n] < 0 || px[n] >= w || py[n] < 0 || py[n] >= h) continue;
                    acc += wts[n] * img.at(static_cast<std::uint32_t>(px[n]), static_cast<std::uint32_t>(py[n]), c);
                }
                out.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), c) = quantize(acc);
            }
        }
    }
    return out;
}

template <class Fn>
Image map_pixels(const Image& img, Fn fn) {
    Image out = img;
    for (auto& b : out.data()) b = quantize(fn(static_cast<double>(b)));
    return out;
}

}  // namespace

Image rotate(const Image& img, double degrees) {
    const double rad = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    return warp(img, [c, s](double dx, double dy) {
        return std::pair{c * dx + s * dy, -s * dx + c * dy};
    });
}

Image zoom(const Image& img, double factor) {
    if (!(factor > 0.0)) throw ParameterError("zoom factor must be > 0");
    const double inv = 1.0 / factor;
    return warp(img, [inv](double dx, double dy) { return std::pair{dx * inv, dy * inv}; });
}

Image apply_transform(const Image& img, const TransformSpec& t) {
    if (!(t.brightness > 0.0) || !(t.contrast > 0.0) || !(t.zoom > 0.0)) {
        throw ParameterError("brightness, contrast and zoom must be > 0");
    }
    Image out = img;
    if (t.flip_h) out = flip_horizontal(out);
    if (t.flip_v) out = flip_vertical(out);
    if (t.rotation_deg != 0.0) out = rotate(out, t.rotation_deg);
    if (t.zoom != 1.0) out = zoom(out, t.zoom);
    if (t.brightness != 1.0) {
        const double b = t.brightness;
        out = map_pixels(out, [b](double p) { return p * b; });
    }
    if (t.contrast != 1.0) {
        const double c = t.contrast;
        out = map_pixels(out, [c](double p) { return (p - 128.0) * c + 128.0; });
    }
    return out;
}

std::vector<TransformSpec> tta_set(const AugmentPolicy& policy) {
    std::vector<TransformSpec> views{TransformSpec{}};
    if (!policy.tta_enabled) return views;
    TransformSpec v;
    v.flip_h = true;
    views.push_back(v);
    v = {};
    v.flip_v = true;
    views.push_back(v);
    v.flip_h = true;
    views.push_back(v);
    v = {};
    v.rotation_deg = policy.tta_rotation_deg;
    views.push_back(v);
    v.rotation_deg = -policy.tta_rotation_deg;
    views.push_back(v);
    return views;
}

}  // namespace fundus
