#include <doctest.h>

#include <fstream>

#include "fundus/error.hpp"
#include "fundus/model_io.hpp"
#include "test_util.hpp"

using namespace fundus;

TEST_CASE("save and load round trip is bit exact") {
    testutil::TempDir dir("model_io");
    auto params = init_params(ArchDescriptor::multilevel(), 4);
    params.preprocess.resize_to = 0;
    params.preprocess.sigma = 7.25;
    save_model(params, dir.str("m.mlnn"));
    const auto loaded = load_model(dir.str("m.mlnn"));
    CHECK(loaded == params);
    CHECK(serialize_model(loaded) == serialize_model(params));

    const auto plain = init_params(ArchDescriptor::plain(), 5);
    CHECK(deserialize_model(serialize_model(plain)) == plain);
}

TEST_CASE("header layout") {
    const auto bytes = serialize_model(zero_params(ArchDescriptor::plain()));
    REQUIRE(bytes.size() > 12);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MLNN");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    const std::uint32_t arch_len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (bytes[11] << 24);
    const std::string arch_text(bytes.begin() + 12, bytes.begin() + 12 + arch_len);
    CHECK(arch_text.rfind("arch=plain\n", 0) == 0);
}

TEST_CASE("corrupt model files") {
    const auto good = serialize_model(init_params(ArchDescriptor::plain(), 1));

    SUBCASE("truncated") {
        const std::vector<std::uint8_t> cut(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(good.size() / 2));
        try {
            deserialize_model(cut);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("unexpected end of file") != std::string::npos);
        }
    }
    SUBCASE("bad magic") {
        auto bad = good;
        bad[0] = 'X';
        try {
            deserialize_model(bad);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
        }
    }
    SUBCASE("version mismatch") {
        auto bad = good;
        bad[4] = 9;
        CHECK_THROWS_WITH_AS(deserialize_model(bad), doctest::Contains("version"), FormatError);
    }
    SUBCASE("tensor count mismatch") {
        // Locate the count after the two length-prefixed blocks.
        auto bad = good;
        std::size_t pos = 8;
        for (int b = 0; b < 2; ++b) {
            const std::uint32_t len = bad[pos] | (bad[pos + 1] << 8) | (bad[pos + 2] << 16) | (bad[pos + 3] << 24);
            pos += 4 + len;
        }
        bad[pos] += 1;
        CHECK_THROWS_WITH_AS(deserialize_model(bad), doctest::Contains("tensor count"), FormatError);
    }
    SUBCASE("trailing garbage") {
        auto bad = good;
        bad.push_back(0);
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_model("/nonexistent/model.mlnn"), IoError);
    }
}

TEST_CASE("model hash tracks content") {
    const auto a = init_params(ArchDescriptor::plain(), 1);
    auto b = a;
    CHECK(model_hash(a) == model_hash(b));
    CHECK(model_hash(a).size() == 16);
    b.tensors[0].value[0] += 1.0f;
    CHECK(model_hash(a) != model_hash(b));
}
