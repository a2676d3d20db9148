#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nnrw/container.hpp"

namespace nnrw {

inline constexpr int kMinDigitPosition = 2;
inline constexpr int kMaxDigitPosition = 5;
inline constexpr int kDefaultOffset = 128;
inline constexpr int kMinOffset = 100;
inline constexpr int kMaxOffset = 65535 - 99;

/// Exact decimal view of a finite nonzero binary32 value:
/// |w| = 0.d1 d2 d3 ... x 10^(exponent+1), d1 != 0, digits terminate.
struct DigitView {
  int sign = 1;
  int exponent = 0;                 // 10^exponent <= |w| < 10^(exponent+1)
  std::vector<std::uint8_t> digits;  // full expansion, no trailing zeros
};

DigitView digit_view(float w);

/// Decimal exponent e with 10^e <= |w| < 10^(e+1), computed exactly.
int decimal_exponent(float w);

/// 10*n_c + n_(c+1): the two significant digits starting at position c (1-based).
int pair_value(float w, int c);

/// sign(w) * pair_value(w, c) + offset, always in [offset-99, offset+99].
int host_symbol(float w, int c, int offset);

/// Replaces digit pair c by `new_pair` and rounds to nearest binary32.
/// Returns nullopt (fragile) unless sign, decimal exponent and the new pair
/// survive rounding and writing the old pair back reproduces `w` bit-exactly.
std::optional<float> write_pair(float w, int c, int new_pair);

/// The raw substitution used by write_pair, without any verification:
/// round(sign * (|w| + (new_pair - pair_value(w,c)) * 10^(e-c))).
float shift_pair_unchecked(float w, int c, int new_pair);

/// Rounds sign * (|w| + delta * 10^(e-c)) to nearest binary32, e from w.
float add_pair_units(float w, int c, int delta);

inline bool is_usable_carrier(float w) noexcept {
  return std::isfinite(w) && w != 0.0f;
}

std::uint32_t float_bits(float w) noexcept;
float bits_float(std::uint32_t bits) noexcept;
float with_lsb(float w, unsigned bit) noexcept;

struct PairEntropy {
  int c = 0;
  double entropy_bits = 0.0;
  std::size_t usable_count = 0;
};

/// Empirical entropy of the symbol multiset for every c in [c_min, c_max];
/// returns the minimum (ties to smaller c) plus the full table.
std::pair<int, std::vector<PairEntropy>> select_pair_position(std::span<const float> weights, int offset,
                                                              int c_min = kMinDigitPosition,
                                                              int c_max = kMaxDigitPosition);

/// Shannon entropy in bits of a histogram given as counts. Deterministic in the
/// multiset of counts (summed in sorted order).
double histogram_entropy(std::span<const std::size_t> counts);

/// Flat tensor indices of the candidate positions for the first N channels of J:
/// channels in J order, input channels ascending, kernel entries row-major.
std::vector<std::uint32_t> candidate_coords(const WeightTensor& weights, std::span<const std::uint32_t> order,
                                            std::size_t n_channels);

/// 1 = excluded, one entry per candidate position.
struct ExclusionMap {
  std::vector<std::uint8_t> excluded;

  std::size_t size() const noexcept { return excluded.size(); }
  std::size_t excluded_count() const noexcept;
  std::vector<std::uint32_t> excluded_indices() const;
  static ExclusionMap from_indices(std::size_t size, std::span<const std::uint32_t> indices);

  bool operator==(const ExclusionMap&) const = default;
};

struct HostSequence {
  std::vector<int> symbols;
  std::vector<std::uint32_t> coords;  // flat tensor index per symbol
  int digit_position = kMinDigitPosition;
  int offset = kDefaultOffset;
};

struct HostBuild {
  HostSequence host;
  ExclusionMap exclusions;
};

/// Host sequence over the first N channels of `order`. Zero and non-finite
/// weights are excluded and emit no symbol.
HostBuild build_host(const WeightTensor& weights, std::span<const std::uint32_t> order, std::size_t n_channels,
                     int c, int offset);

/// Host sequence using a known exclusion map (extraction side). A non-excluded
/// position holding a zero or non-finite weight raises CorruptCarrier.
HostSequence build_host(const WeightTensor& weights, std::span<const std::uint32_t> order, std::size_t n_channels,
                        int c, int offset, const ExclusionMap& exclusions);

/// Whether a weight can carry a symbol, and whether its symbol may be shifted up by one.
enum class CarrierClass : std::uint8_t {
  Excluded,  // zero, non-finite, or (when exposed) its pair changes under a mantissa-LSB flip
  Readable,  // symbol is stable but the +1 shift is unrepresentable or fragile
  Movable,   // symbol stable and the +1 shift round-trips in both LSB states
};

/// Fragility screen for one weight at pair position c. `lsb_exposed` marks weights
/// inside the sidecar region, whose mantissa bit 0 may be overwritten by the plan;
/// for those both LSB states must read and restore identically.
CarrierClass classify_carrier(float w, int c, bool lsb_exposed = true);

}  // namespace nnrw
