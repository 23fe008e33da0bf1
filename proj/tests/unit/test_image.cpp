#include <doctest.h>

#include <cstring>
#include <string>

#include "fundus/error.hpp"
#include "fundus/image.hpp"
#include "test_util.hpp"

using namespace fundus;

namespace {
std::vector<std::uint8_t> bytes_of(const std::string& header, std::initializer_list<int> payload) {
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (int b : payload) out.push_back(static_cast<std::uint8_t>(b));
    return out;
}
}  // namespace

TEST_CASE("decode_ppm maps bytes directly") {
    const auto img = decode_ppm(bytes_of("P6 2 1 255\n", {255, 0, 0, 0, 255, 0}));
    REQUIRE(img.width() == 2);
    REQUIRE(img.height() == 1);
    CHECK(img.at(0, 0, 0) == 255);
    CHECK(img.at(0, 0, 1) == 0);
    CHECK(img.at(1, 0, 1) == 255);
    CHECK(img.at(1, 0, 2) == 0);

    const auto black = decode_ppm(bytes_of("P6 1 1 255\n", {0, 0, 0}));
    CHECK(black == Image(1, 1));
}

TEST_CASE("decode_ppm accepts header comments") {
    const auto img = decode_ppm(bytes_of("P6\n# made by hand\n1 1\n255\n", {1, 2, 3}));
    CHECK(img.at(0, 0, 2) == 3);
}

TEST_CASE("decode_ppm rejects malformed input with an offset") {
    SUBCASE("maxval 65535") {
        try {
            decode_ppm(bytes_of("P6 1 1 65535\n", {0, 0, 0, 0, 0, 0}));
            FAIL("expected DecodeError");
        } catch (const DecodeError& e) {
            CHECK(std::string(e.what()).find("unsupported maxval") != std::string::npos);
            CHECK(e.offset() == 7);
        }
    }
    SUBCASE("truncated payload") {
        CHECK_THROWS_AS(decode_ppm(bytes_of("P6 2 2 255\n", {0, 0, 0})), DecodeError);
    }
    SUBCASE("wrong magic") {
        CHECK_THROWS_AS(decode_ppm(bytes_of("P3 1 1 255\n", {0, 0, 0})), DecodeError);
    }
    SUBCASE("missing height") {
        try {
            decode_ppm(bytes_of("P6 2 x", {}));
            FAIL("expected DecodeError");
        } catch (const DecodeError& e) {
            CHECK(e.offset() == 5);
        }
    }
}

TEST_CASE("encode_ppm layout") {
    const auto bytes = encode_ppm(Image(1, 1));
    const std::string expected_header = "P6\n1 1\n255\n";
    REQUIRE(bytes.size() == expected_header.size() + 3);
    CHECK(std::memcmp(bytes.data(), expected_header.data(), expected_header.size()) == 0);

    const auto two = encode_ppm(Image(2, 2));
    CHECK(two.size() == std::string("P6\n2 2\n255\n").size() + 12);
}

TEST_CASE("ppm round trip is byte exact") {
    for (std::uint32_t seed = 0; seed < 10; ++seed) {
        const auto img = testutil::random_image(16, 16, seed);
        const auto bytes = encode_ppm(img);
        CHECK(decode_ppm(bytes) == img);
        CHECK(encode_ppm(decode_ppm(bytes)) == bytes);
    }
}

TEST_CASE("image invariants") {
    CHECK_THROWS_AS(Image(0, 4), DimensionError);
    CHECK_THROWS_AS(Image(2, 2, std::vector<std::uint8_t>(11)), DimensionError);
}

TEST_CASE("decode_image dispatches on signature") {
    const auto img = testutil::random_image(3, 2, 9);
    CHECK(decode_image(encode_ppm(img)) == img);
    const std::vector<std::uint8_t> fake_png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n', 0, 0};
    CHECK_THROWS_AS(decode_image(fake_png), DecodeError);
}
