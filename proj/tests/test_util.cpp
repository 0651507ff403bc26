#include "ceker/config.hpp"
#include "ceker/digest.hpp"
#include "ceker/errors.hpp"
#include "ceker/util.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <atomic>
#include <random>

using namespace ceker;

TEST_CASE("sha256 matches known vectors and the reference implementation") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    std::mt19937 rng(42);
    for (int i = 0; i < 50; ++i) {
        std::string data;
        std::size_t len = rng() % 300;
        for (std::size_t k = 0; k < len; ++k) {
            data += static_cast<char>(rng() % 256);
        }
        CHECK(sha256_hex(data) == oracles::sha256_hex_reference(data));
    }
}

TEST_CASE("word_count is whitespace-delimited") {
    CHECK(word_count("") == 0);
    CHECK(word_count("one") == 1);
    CHECK(word_count("  a  b\tc\nd  ") == 4);
    CHECK(word_count("\n\n\t ") == 0);
}

TEST_CASE("split_lines handles trailing newlines") {
    CHECK(split_lines("a\nb\n") == std::vector<std::string>{"a", "b"});
    CHECK(split_lines("a\nb") == std::vector<std::string>{"a", "b"});
    CHECK(split_lines("") == std::vector<std::string>{});
    CHECK(split_lines("\n") == std::vector<std::string>{""});
}

TEST_CASE("is_valid_utf8 accepts multibyte and rejects garbage") {
    CHECK(is_valid_utf8("plain ascii"));
    CHECK(is_valid_utf8("caf\xc3\xa9 \xe2\x80\x94 ok"));
    CHECK_FALSE(is_valid_utf8("\xff\xfe"));
    CHECK_FALSE(is_valid_utf8("truncated \xc3"));
    CHECK_FALSE(is_valid_utf8("overlong \xc0\xaf"));
}

TEST_CASE("format_hundredths renders two decimals") {
    CHECK(format_hundredths(0) == "0.00");
    CHECK(format_hundredths(100) == "1.00");
    CHECK(format_hundredths(85) == "0.85");
    CHECK(format_hundredths(5) == "0.05");
}

TEST_CASE("toml subset parses sections, arrays and scalars") {
    std::string text =
        "# comment\n"
        "topic = \"unikernel security\"\n"
        "\n"
        "[gateway]\n"
        "model = \"m1\"\n"
        "temperature = 0.5\n"
        "seed = 7\n"
        "\n"
        "[extraction]\n"
        "terms = [\"ASLR\", \"Stack Canaries\"]\n";
    CekerConfig config = CekerConfig::from_toml(text);
    CHECK(config.topic == "unikernel security");
    CHECK(config.model == "m1");
    CHECK(config.temperature == doctest::Approx(0.5));
    CHECK(config.seed == 7);
    CHECK(config.terms == std::vector<std::string>{"ASLR", "Stack Canaries"});
    // untouched keys keep defaults
    CHECK(config.batch_size == 25);
    CHECK(config.stop_threshold == doctest::Approx(0.10));
    CHECK(config.verify_threshold == doctest::Approx(0.90));
}

TEST_CASE("toml subset rejects malformed lines") {
    CHECK_THROWS_AS(parse_toml_subset("key value\n"), Error);
    CHECK_THROWS_AS(parse_toml_subset("[section\n"), Error);
    CHECK_THROWS_AS(parse_toml_subset("k = [1, 2]\n"), Error);
}

TEST_CASE("default config round-trips through the parser") {
    CekerConfig config = CekerConfig::from_toml(CekerConfig::default_toml("some topic"));
    CHECK(config.topic == "some topic");
    CHECK(config.backend == "mock");
    CHECK(config.terms == std::vector<std::string>{"ASLR", "DEP", "Stack Canaries"});
}

TEST_CASE("config canonicalization strips BOM and CRLF") {
    std::string raw = "\xEF\xBB\xBFtopic = \"x\"\r\nseed = 1\r\n";
    CHECK(canonicalize_config(raw) == "topic = \"x\"\nseed = 1\n");
    CHECK(canonicalize_config("plain\n") == "plain\n");
}

TEST_CASE("parallel_for_each runs every index once and propagates errors") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for_each(100, 8, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);

    CHECK_THROWS_AS(parallel_for_each(50, 4,
                                      [](std::size_t i) {
                                          if (i == 17) raise(ErrorCode::IoError, "boom");
                                      }),
                    Error);
}
