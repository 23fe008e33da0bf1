#include <doctest.h>

#include "fundus/augment.hpp"
#include "fundus/error.hpp"
#include "test_util.hpp"

using namespace fundus;

TEST_CASE("rng_for determinism and independence") {
    auto a = rng_for(7, 3, 0), b = rng_for(7, 3, 0);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(rng_for(7, 3, 0).next() != rng_for(7, 4, 0).next());
    CHECK(rng_for(7, 3, 0).next() != rng_for(7, 3, 1).next());
    CHECK(rng_for(7, 3, 0).next() != rng_for(8, 3, 0).next());
}

TEST_CASE("rng draws stay in range") {
    auto rng = rng_for(1, 2, 3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.below(7) < 7);
    }
}

TEST_CASE("sample_transform with all families disabled is the identity") {
    auto rng = rng_for(5, 0, 0);
    const auto t = sample_transform(rng, AugmentPolicy::none());
    CHECK(t.is_identity());
    CHECK(rng == rng_for(5, 0, 0));  // no draws consumed
}

TEST_CASE("sampled parameters respect the policy ranges") {
    const AugmentPolicy policy;
    std::size_t rotated = 0, flipped = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        auto rng = rng_for(99, i, 0);
        const auto t = sample_transform(rng, policy);
        CHECK(t.rotation_deg >= -45.0);
        CHECK(t.rotation_deg <= 45.0);
        CHECK(t.brightness >= 0.8);
        CHECK(t.brightness <= 1.2);
        CHECK(t.contrast >= 0.8);
        CHECK(t.contrast <= 1.2);
        CHECK(t.zoom >= 0.9);
        CHECK(t.zoom <= 1.1);
        rotated += t.rotation_deg != 0.0;
        flipped += t.flip_h;
    }
    // p = 0.5 per family; 10^4 draws put both counts well inside [4500, 5500].
    CHECK(rotated > 4500);
    CHECK(rotated < 5500);
    CHECK(flipped > 4500);
    CHECK(flipped < 5500);
}

TEST_CASE("sample_transform is reproducible from a fresh stream") {
    const AugmentPolicy policy;
    auto a = rng_for(3, 14, 15);
    auto b = rng_for(3, 14, 15);
    CHECK(sample_transform(a, policy) == sample_transform(b, policy));
}

TEST_CASE("apply_transform identity is bit exact") {
    const auto img = testutil::random_image(9, 7, 1);
    CHECK(apply_transform(img, TransformSpec{}) == img);
}

TEST_CASE("flips") {
    Image two(2, 1);
    two.at(0, 0, 0) = 10;
    two.at(1, 0, 0) = 20;
    TransformSpec t;
    t.flip_h = true;
    const auto flipped = apply_transform(two, t);
    CHECK(flipped.at(0, 0, 0) == 20);
    CHECK(flipped.at(1, 0, 0) == 10);

    const auto img = testutil::random_image(8, 5, 2);
    CHECK(flip_horizontal(flip_horizontal(img)) == img);
    CHECK(flip_vertical(flip_vertical(img)) == img);
    CHECK(flip_horizontal(flip_vertical(img)) == flip_vertical(flip_horizontal(img)));
}

TEST_CASE("geometric transforms keep dimensions and fill with black") {
    const auto img = testutil::constant_image(21, 13, 200, 100, 50);
    TransformSpec t;
    t.rotation_deg = 45.0;
    const auto rot = apply_transform(img, t);
    CHECK(rot.width() == 21);
    CHECK(rot.height() == 13);
    CHECK(rot.at(0, 0, 0) == 0);        // corner rotated out of the source
    CHECK(rot.at(10, 6, 0) == 200);     // centre is fixed

    t = {};
    t.zoom = 0.5;
    const auto shrunk = apply_transform(img, t);
    CHECK(shrunk.at(0, 0, 1) == 0);
    CHECK(shrunk.at(10, 6, 1) == 100);

    t.zoom = 2.0;
    CHECK(apply_transform(img, t) == img);  // magnified constant stays constant
}

TEST_CASE("rotation by 360 degrees reproduces the image") {
    const auto img = testutil::random_image(11, 11, 3);
    CHECK(rotate(img, 360.0) == img);
}

TEST_CASE("photometric transforms") {
    const auto img = testutil::constant_image(2, 2, 100, 200, 128);
    TransformSpec t;
    t.brightness = 1.5;
    const auto bright = apply_transform(img, t);
    CHECK(bright.at(0, 0, 0) == 150);
    CHECK(bright.at(0, 0, 1) == 255);  // clamped

    t = {};
    t.contrast = 2.0;
    const auto contrast = apply_transform(img, t);
    CHECK(contrast.at(1, 1, 0) == 72);
    CHECK(contrast.at(1, 1, 1) == 255);
    CHECK(contrast.at(1, 1, 2) == 128);

    t.contrast = 0.0;
    CHECK_THROWS_AS(apply_transform(img, t), ParameterError);
}

TEST_CASE("augmented output keeps the input size") {
    const AugmentPolicy policy;
    const auto img = testutil::random_image(17, 10, 4);
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto rng = rng_for(1, i, 0);
        const auto out = apply_transform(img, sample_transform(rng, policy));
        CHECK(out.width() == 17);
        CHECK(out.height() == 10);
    }
}

TEST_CASE("tta_set") {
    const AugmentPolicy policy;
    const auto views = tta_set(policy);
    REQUIRE(views.size() == 6);
    CHECK(views[0].is_identity());
    CHECK(views[1].flip_h);
    CHECK(views[2].flip_v);
    CHECK((views[3].flip_h && views[3].flip_v));
    CHECK(views[4].rotation_deg == 15.0);
    CHECK(views[5].rotation_deg == -15.0);
    CHECK(tta_set(policy) == views);

    AugmentPolicy off;
    off.tta_enabled = false;
    const auto single = tta_set(off);
    REQUIRE(single.size() == 1);
    CHECK(single[0].is_identity());
}

TEST_CASE("augment policy key-value round trip and validation") {
    AugmentPolicy p;
    p.rotation.hi = 30.0;
    p.zoom.enabled = false;
    p.tta_enabled = false;
    CHECK(augment_policy_from_kv(parse_kv(format_kv(to_kv(p)))) == p);
    CHECK_THROWS_AS(augment_policy_from_kv(parse_kv("aug_zoom_min=0\n")), ConfigError);
    CHECK_THROWS_AS(augment_policy_from_kv(parse_kv("aug_flip_h_p=1.5\n")), ConfigError);
    CHECK_THROWS_AS(augment_policy_from_kv(parse_kv("aug_rotation_min=10\naug_rotation_max=5\n")), ConfigError);
    CHECK_THROWS_AS(augment_policy_from_kv(parse_kv("aug_sheer=1\n")), ConfigError);
}
