#pragma once

#include <string_view>
#include <vector>

#include "fundus/image.hpp"
#include "fundus/kv.hpp"
#include "fundus/rng.hpp"

namespace fundus {

// One concrete augmentation. Default-constructed value is the identity.
struct TransformSpec {
    bool flip_h = false;
    bool flip_v = false;
    double rotation_deg = 0.0;
    double brightness = 1.0;
    double contrast = 1.0;
    double zoom = 1.0;

    bool is_identity() const noexcept;
    friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

struct FlipFamily {
    bool enabled = true;
    double probability = 0.5;
    friend bool operator==(const FlipFamily&, const FlipFamily&) = default;
};

// A continuous parameter drawn uniformly from [lo, hi] with the given probability.
struct RangeFamily {
    bool enabled = true;
    double probability = 0.5;
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const RangeFamily&, const RangeFamily&) = default;
};

struct AugmentPolicy {
    FlipFamily flip_h;
    FlipFamily flip_v;
    RangeFamily rotation{true, 0.5, -45.0, 45.0};
    RangeFamily brightness{true, 0.5, 0.8, 1.2};
    RangeFamily contrast{true, 0.5, 0.8, 1.2};
    RangeFamily zoom{true, 0.5, 0.9, 1.1};

    bool tta_enabled = true;
    double tta_rotation_deg = 15.0;

    // Every family disabled; sample_transform then always yields the identity.
    static AugmentPolicy none();

    void validate() const;
    friend bool operator==(const AugmentPolicy&, const AugmentPolicy&) = default;
};

KvBlock to_kv(const AugmentPolicy& policy);
bool set_field(AugmentPolicy& policy, std::string_view key, std::string_view value);
AugmentPolicy augment_policy_from_kv(const KvBlock& block);

// Families are drawn in the fixed order flip_h, flip_v, rotation, brightness,
// contrast, zoom. Each enabled flip consumes one draw and each enabled range
// family two (gate, value), whether or not the family fires.
TransformSpec sample_transform(RngStream& rng, const AugmentPolicy& policy);

// flips -> rotation -> zoom -> brightness -> contrast; geometric steps use
// bilinear sampling with black fill. Output size equals input size.
Image apply_transform(const Image& img, const TransformSpec& t);

Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
Image rotate(const Image& img, double degrees);
Image zoom(const Image& img, double factor);

// Fixed inference views, identity first: {id, flip_h, flip_v, flip_hv, +rot, -rot}
// when TTA is enabled, {id} otherwise.
std::vector<TransformSpec> tta_set(const AugmentPolicy& policy);

}  // namespace fundus
