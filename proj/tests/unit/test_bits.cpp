#include <doctest.h>

#include "fixtures.hpp"
#include "nnrw/bits.hpp"
#include "oracles.hpp"

using namespace nnrw;

TEST_CASE("writer and reader agree on mixed field widths") {
  BitWriter w;
  w.put(0x5, 3);
  w.put(0xABCD, 16);
  w.put(0, 0);
  w.put(0xFFFFFFFFull, 32);
  CHECK(w.size() == 51);
  BitReader r(w.bits());
  CHECK(r.get(3) == 0x5);
  CHECK(r.get(16) == 0xABCD);
  CHECK(r.get(32) == 0xFFFFFFFFull);
  CHECK(r.remaining() == 0);
  CHECK_THROWS_AS(r.get(1), Error);
}

TEST_CASE("reader reports the configured code on underflow") {
  const BitString bits{1, 0};
  BitReader r(bits, ErrorCode::CrcMismatch);
  try {
    r.get(3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CrcMismatch);
  }
}

TEST_CASE("pack is MSB first and pads the last byte") {
  const BitString bits{1, 0, 1, 1, 0, 0, 0, 0, 1};
  const auto bytes = pack_bits(bits);
  REQUIRE(bytes.size() == 2);
  CHECK(bytes[0] == 0xB0);
  CHECK(bytes[1] == 0x80);
  const auto back = unpack_bits(bytes);
  CHECK(back.size() == 16);
  CHECK(std::equal(bits.begin(), bits.end(), back.begin()));
}

TEST_CASE("crc32 of packed bits matches a bitwise reference") {
  testing::Rng rng(11);
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 120u, 1000u}) {
    const BitString bits = testing::random_bits(rng, n);
    CHECK(crc32_bits(bits) == oracle::crc32(pack_bits(bits)));
  }
  const std::string check = "123456789";
  const std::vector<std::uint8_t> bytes(check.begin(), check.end());
  CHECK(oracle::crc32(bytes) == 0xCBF43926u);
  CHECK(crc32_bits(unpack_bits(bytes)) == 0xCBF43926u);
}

TEST_CASE("index width") {
  CHECK(index_width(0) == 0);
  CHECK(index_width(1) == 0);
  CHECK(index_width(2) == 1);
  CHECK(index_width(3) == 2);
  CHECK(index_width(4) == 2);
  CHECK(index_width(5) == 3);
  CHECK(index_width(1u << 20) == 20);
  CHECK(index_width((1u << 20) + 1) == 21);
}

TEST_CASE("hex round trip and rejection") {
  const std::vector<std::uint8_t> bytes{0x00, 0x7f, 0xA5, 0xff};
  CHECK(to_hex(bytes) == "007fa5ff");
  CHECK(from_hex("007FA5ff") == bytes);
  CHECK(from_hex("").empty());
  CHECK_THROWS_AS(from_hex("abc"), Error);
  CHECK_THROWS_AS(from_hex("zz"), Error);
}
