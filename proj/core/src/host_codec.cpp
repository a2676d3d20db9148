#include "nnrw/host_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nnrw/error.hpp"

namespace nnrw {
namespace {

std::size_t per_channel(const WeightTensor& weights) {
  if (weights.shape.size() != 4) throw Error(ErrorCode::InvalidLayer, weights.name + " is not a rank-4 tensor");
  return static_cast<std::size_t>(weights.shape[1]) * weights.shape[2] * weights.shape[3];
}

void check_order(std::span<const std::uint32_t> order, std::size_t out_channels, std::size_t n_channels) {
  if (n_channels < 1 || n_channels > out_channels) {
    throw Error(ErrorCode::NOutOfRange,
                "N=" + std::to_string(n_channels) + " outside [1," + std::to_string(out_channels) + "]");
  }
  if (order.size() < n_channels) throw Error(ErrorCode::BadPermutation, "channel order shorter than N");
  std::vector<std::uint8_t> seen(out_channels, 0);
  for (std::uint32_t ch : order) {
    if (ch >= out_channels || seen[ch]) throw Error(ErrorCode::BadPermutation, "channel order is not a permutation");
    seen[ch] = 1;
  }
}

}  // namespace

double histogram_entropy(std::span<const std::size_t> counts) {
  std::vector<std::size_t> nonzero;
  std::size_t total = 0;
  for (std::size_t n : counts) {
    if (n > 0) nonzero.push_back(n);
    total += n;
  }
  if (total == 0) return 0.0;
  std::sort(nonzero.begin(), nonzero.end());
  double h = 0.0;
  for (std::size_t n : nonzero) {
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

std::pair<int, std::vector<PairEntropy>> select_pair_position(std::span<const float> weights, int offset, int c_min,
                                                              int c_max) {
  if (c_min < kMinDigitPosition || c_max < c_min) throw Error(ErrorCode::InvalidConfig, "bad digit position range");
  std::vector<float> usable;
  usable.reserve(weights.size());
  for (float w : weights) {
    if (is_usable_carrier(w)) usable.push_back(w);
  }
  if (usable.empty()) throw Error(ErrorCode::NoUsableWeights, "no finite nonzero candidate weights");

  std::vector<PairEntropy> table;
  int best = c_min;
  double best_entropy = 0.0;
  for (int c = c_min; c <= c_max; ++c) {
    std::vector<std::size_t> counts(199, 0);
    for (float w : usable) ++counts[static_cast<std::size_t>(host_symbol(w, c, offset) - offset + 99)];
    const double h = histogram_entropy(counts);
    table.push_back({c, h, usable.size()});
    if (c == c_min || h < best_entropy) {
      best = c;
      best_entropy = h;
    }
  }
  return {best, std::move(table)};
}

std::vector<std::uint32_t> candidate_coords(const WeightTensor& weights, std::span<const std::uint32_t> order,
                                            std::size_t n_channels) {
  const std::size_t per = per_channel(weights);
  check_order(order, weights.shape[0], n_channels);
  std::vector<std::uint32_t> coords;
  coords.reserve(n_channels * per);
  for (std::size_t i = 0; i < n_channels; ++i) {
    const std::size_t base = static_cast<std::size_t>(order[i]) * per;
    for (std::size_t j = 0; j < per; ++j) coords.push_back(static_cast<std::uint32_t>(base + j));
  }
  return coords;
}

std::size_t ExclusionMap::excluded_count() const noexcept {
  return static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), std::uint8_t{1}));
}

std::vector<std::uint32_t> ExclusionMap::excluded_indices() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < excluded.size(); ++i) {
    if (excluded[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

ExclusionMap ExclusionMap::from_indices(std::size_t size, std::span<const std::uint32_t> indices) {
  ExclusionMap map;
  map.excluded.assign(size, 0);
  for (std::uint32_t i : indices) {
    if (i >= size) throw Error(ErrorCode::MalformedPlan, "exclusion index out of range");
    map.excluded[i] = 1;
  }
  return map;
}

HostBuild build_host(const WeightTensor& weights, std::span<const std::uint32_t> order, std::size_t n_channels, int c,
                     int offset) {
  const auto coords = candidate_coords(weights, order, n_channels);
  HostBuild out;
  out.host.digit_position = c;
  out.host.offset = offset;
  out.exclusions.excluded.assign(coords.size(), 0);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const float w = weights.data[coords[i]];
    if (!is_usable_carrier(w)) {
      out.exclusions.excluded[i] = 1;
      continue;
    }
    out.host.symbols.push_back(host_symbol(w, c, offset));
    out.host.coords.push_back(coords[i]);
  }
  return out;
}

HostSequence build_host(const WeightTensor& weights, std::span<const std::uint32_t> order, std::size_t n_channels,
                        int c, int offset, const ExclusionMap& exclusions) {
  const auto coords = candidate_coords(weights, order, n_channels);
  if (exclusions.size() != coords.size()) {
    throw Error(ErrorCode::MalformedPlan, "exclusion map covers " + std::to_string(exclusions.size()) +
                                              " positions, layer has " + std::to_string(coords.size()));
  }
  HostSequence host;
  host.digit_position = c;
  host.offset = offset;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (exclusions.excluded[i]) continue;
    const float w = weights.data[coords[i]];
    if (!is_usable_carrier(w)) throw Error(ErrorCode::CorruptCarrier, "carrier is zero or non-finite");
    host.symbols.push_back(host_symbol(w, c, offset));
    host.coords.push_back(coords[i]);
  }
  return host;
}

CarrierClass classify_carrier(float w, int c, bool lsb_exposed) {
  if (!is_usable_carrier(w)) return CarrierClass::Excluded;
  const int e = decimal_exponent(w);
  const int pair = pair_value(w, c);
  const bool negative = std::signbit(w);

  auto reads_as = [&](float v, int expected_pair) {
    return is_usable_carrier(v) && std::signbit(v) == negative && decimal_exponent(v) == e &&
           pair_value(v, c) == expected_pair;
  };
  const std::uint32_t lsb = float_bits(w) & 1u;
  if (lsb_exposed && !reads_as(with_lsb(w, lsb ^ 1u), pair)) return CarrierClass::Excluded;

  // Shifting the symbol up by one moves the pair towards larger magnitude for
  // positive weights and smaller magnitude for negative ones.
  const int target = negative ? pair - 1 : pair + 1;
  if (target < 0 || target > 99) return CarrierClass::Readable;
  const auto written = write_pair(w, c, target);
  if (!written) return CarrierClass::Readable;
  if (!lsb_exposed) return CarrierClass::Movable;

  const float flipped = with_lsb(*written, (float_bits(*written) & 1u) ^ 1u);
  if (!reads_as(flipped, target)) return CarrierClass::Readable;
  const float restored = with_lsb(shift_pair_unchecked(flipped, c, pair), lsb);
  if (float_bits(restored) != float_bits(w)) return CarrierClass::Readable;
  return CarrierClass::Movable;
}

}  // namespace nnrw
