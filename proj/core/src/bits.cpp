#include "nnrw/bits.hpp"

#include <zlib.h>

#include <bit>

namespace nnrw {

void BitWriter::put(std::uint64_t value, unsigned width) {
  for (unsigned i = width; i-- > 0;) bits_.push_back(static_cast<std::uint8_t>((value >> i) & 1u));
}

void BitWriter::append(std::span<const std::uint8_t> bits) { bits_.insert(bits_.end(), bits.begin(), bits.end()); }

std::uint64_t BitReader::get(unsigned width) {
  if (remaining() < width) throw Error(on_underflow_, "bit stream ended early");
  std::uint64_t value = 0;
  for (unsigned i = 0; i < width; ++i) value = (value << 1) | (bits_[pos_++] & 1u);
  return value;
}

BitString BitReader::take(std::size_t count) {
  if (remaining() < count) throw Error(on_underflow_, "bit stream ended early");
  BitString out(bits_.begin() + static_cast<std::ptrdiff_t>(pos_),
                bits_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
  pos_ += count;
  return out;
}

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return bytes;
}

BitString unpack_bits(std::span<const std::uint8_t> bytes) {
  BitString bits;
  bits.reserve(bytes.size() * 8);
  for (std::uint8_t b : bytes) {
    for (int i = 7; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((b >> i) & 1u));
  }
  return bits;
}

std::uint32_t crc32_bits(std::span<const std::uint8_t> bits) {
  const auto bytes = pack_bits(bits);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

unsigned index_width(std::uint64_t count) noexcept {
  if (count <= 1) return 0;
  return static_cast<unsigned>(std::bit_width(count - 1));
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.size() % 2 != 0) throw Error(ErrorCode::InvalidConfig, "hex string has odd length");
  auto nibble = [](char ch) -> int {
    if (ch >= '0' && ch <= '9') return ch - '0';
    if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
    if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
    throw Error(ErrorCode::InvalidConfig, std::string("invalid hex character '") + ch + "'");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

}  // namespace nnrw
