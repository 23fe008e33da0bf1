#include <doctest.h>

#include <cmath>
#include <limits>

#include "fundus/error.hpp"
#include "fundus/kv.hpp"

using namespace fundus;

TEST_CASE("parse and format") {
    const auto block = parse_kv("# comment\n\n a = 1 \nb=two words\r\nc=\n");
    REQUIRE(block.size() == 3);
    CHECK(block[0] == std::pair<std::string, std::string>{"a", "1"});
    CHECK(block[1].second == "two words");
    CHECK(block[2].second.empty());
    CHECK(format_kv(block) == "a=1\nb=two words\nc=\n");
    CHECK(parse_kv(format_kv(block)) == block);
}

TEST_CASE("parse errors name the line") {
    CHECK_THROWS_WITH_AS(parse_kv("a=1\nnot a pair\n"), doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_kv("a=1\na=2\n"), doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_AS(parse_kv("=1\n"), ConfigError);
}

TEST_CASE("doubles round trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e-4, 0.95, 128.0, -2.5e-300, 4.0}) CHECK(parse_double("k", format_double(v)) == v);
    CHECK(format_double(10.0) == "10");
    CHECK_THROWS_AS(parse_double("k", "abc"), ConfigError);
    CHECK_THROWS_AS(parse_double("k", "1.5x"), ConfigError);
    CHECK_THROWS_AS(parse_double("k", "nan"), ConfigError);
}

TEST_CASE("integers, booleans and lists") {
    CHECK(parse_u64("k", "42") == 42);
    CHECK_THROWS_AS(parse_u64("k", "-1"), ConfigError);
    CHECK(parse_bool("k", "true"));
    CHECK_FALSE(parse_bool("k", "0"));
    CHECK_THROWS_AS(parse_bool("k", "maybe"), ConfigError);
    CHECK(parse_u32_list("k", "8,16, 32") == std::vector<std::uint32_t>{8, 16, 32});
    CHECK(format_u32_list({1, 2, 3}) == "1,2,3");
    CHECK_THROWS_AS(parse_u32_list("k", "1,,2"), ConfigError);
}
