#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnrw/error.hpp"

namespace nnrw {

/// One element per bit, each 0 or 1. Kept unpacked: payloads are at most a
/// few thousand bits and per-bit indexing dominates every consumer.
using BitString = std::vector<std::uint8_t>;

/// Appends fixed-width unsigned fields MSB-first.
class BitWriter {
 public:
  void put(std::uint64_t value, unsigned width);
  void append(std::span<const std::uint8_t> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  const BitString& bits() const noexcept { return bits_; }
  BitString take() && { return std::move(bits_); }

 private:
  BitString bits_;
};

/// Reads fixed-width unsigned fields MSB-first. Reading past the end throws
/// the error code supplied at construction.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bits, ErrorCode on_underflow = ErrorCode::MalformedPlan)
      : bits_(bits), on_underflow_(on_underflow) {}

  std::uint64_t get(unsigned width);
  BitString take(std::size_t count);

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bits_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bits_;
  ErrorCode on_underflow_;
  std::size_t pos_ = 0;
};

/// Packs bits MSB-first into bytes; the final byte is zero-padded.
std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits);

/// Expands bytes MSB-first into bits.
BitString unpack_bits(std::span<const std::uint8_t> bytes);

/// IEEE CRC-32 of the MSB-first packed form of `bits`.
std::uint32_t crc32_bits(std::span<const std::uint8_t> bits);

/// Number of bits needed to index `count` distinct values (0 for count <= 1).
unsigned index_width(std::uint64_t count) noexcept;

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws Error{InvalidConfig} on odd length or non-hex characters.
std::vector<std::uint8_t> from_hex(std::string_view hex);

}  // namespace nnrw
