#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nnrw/bits.hpp"

namespace nnrw {

/// Symbol counts over [offset-99, offset+99].
struct SymbolHistogram {
  int low = 0;
  std::vector<std::size_t> counts;

  int high() const noexcept { return low + static_cast<int>(counts.size()) - 1; }
  bool contains(int symbol) const noexcept { return symbol >= low && symbol <= high(); }
  std::size_t operator[](int symbol) const noexcept { return counts[static_cast<std::size_t>(symbol - low)]; }
  std::size_t total() const noexcept;
};

SymbolHistogram empty_histogram(int offset);

/// Throws InvalidConfig if a symbol falls outside the offset's range.
SymbolHistogram build_histogram(std::span<const int> symbols, int offset);

struct HSParams {
  int peak = 0;
  int valley = 0;
  std::size_t capacity = 0;

  bool operator==(const HSParams&) const = default;
};

/// Peak maximizing capacity among bins that have an empty bin strictly to their
/// right (ties: smallest peak); valley is the nearest such empty bin.
HSParams choose_peak_valley(const SymbolHistogram& hist);

/// Variant for hosts where some symbols cannot be shifted. `movable` counts the
/// subset of `occupancy` that may move up by one. Non-movable symbols inside
/// [peak, valley) must be dropped from the host, each costing `drop_cost_bits`
/// of side information; the score is capacity - drop_cost_bits * dropped.
/// With movable == occupancy this is exactly choose_peak_valley(occupancy).
HSParams choose_peak_valley(const SymbolHistogram& occupancy, const SymbolHistogram& movable,
                            double drop_cost_bits);

/// Number of non-movable symbols that would be dropped for `params`.
std::size_t dropped_count(const SymbolHistogram& occupancy, const SymbolHistogram& movable, const HSParams& params);

/// Histogram-shift embedding. `bits` shorter than the peak count are padded with zeros.
std::vector<int> hs_embed(std::span<const int> host, std::span<const std::uint8_t> bits, const HSParams& params);

struct HSExtraction {
  BitString bits;             // one per peak cell, scan order
  std::vector<int> restored;  // original host
};

HSExtraction hs_extract(std::span<const int> marked, const HSParams& params);

inline constexpr std::uint16_t kPayloadMagic = 0x5257;  // "RW"
inline constexpr std::uint8_t kPayloadVersion = 1;
inline constexpr std::size_t kPayloadHeaderBits = 16 + 8 + 32 + 32 + 32;

struct PayloadFields {
  BitString message;
  BitString lsb_backup;

  bool operator==(const PayloadFields&) const = default;
};

BitString frame_payload(std::span<const std::uint8_t> message, std::span<const std::uint8_t> lsb_backup);

/// Parses a framed payload; trailing padding bits are ignored.
/// Throws BadMagic or CrcMismatch.
PayloadFields parse_payload(std::span<const std::uint8_t> bits);

}  // namespace nnrw
