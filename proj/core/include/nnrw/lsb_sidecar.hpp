#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nnrw/bits.hpp"
#include "nnrw/host_codec.hpp"

namespace nnrw {

inline constexpr std::uint8_t kPlanVersion = 1;

/// Everything extraction needs, stored in the mantissa LSBs of the layer itself.
struct EmbedPlan {
  std::uint8_t plan_version = kPlanVersion;
  std::uint16_t layer_index = 0;
  std::uint16_t channels = 0;  // N
  std::uint8_t digit_position = kMinDigitPosition;
  std::uint16_t offset = kDefaultOffset;
  std::uint16_t peak = 0;
  std::uint16_t valley = 0;
  std::uint16_t out_channels = 0;  // d
  std::uint32_t region = 0;        // leading flat weights reserved for the plan, never carriers
  std::vector<std::uint32_t> order_prefix;  // first N entries of J
  /// Full bitmap. Positions whose flat index lies below `region` are implied and
  /// not serialized; the rest are listed as sorted indices.
  ExclusionMap exclusions;

  bool operator==(const EmbedPlan&) const = default;
};

/// Width of the fixed fields preceding the channel order.
inline constexpr std::size_t kPlanHeaderBits = 8 + 16 + 16 + 8 + 16 + 16 + 16 + 16 + 32;

std::size_t plan_bit_length(const EmbedPlan& plan);
/// Same length computed from the sizes alone; `listed` counts serialized exclusions.
std::size_t plan_bit_length(std::size_t channels, std::size_t out_channels, std::size_t candidates,
                            std::size_t listed);

/// Flat tensor index of candidate position i (channels in plan order, row-major inside).
std::uint32_t candidate_flat_index(const EmbedPlan& plan, std::size_t i);

BitString encode_plan(const EmbedPlan& plan);

/// Throws MalformedPlan for inconsistent fields or short input, CrcMismatch on checksum failure.
/// Encoding throws MalformedPlan if a reserved-region position is not marked excluded.
EmbedPlan decode_plan(std::span<const std::uint8_t> bits);

struct LsbReplacement {
  std::vector<float> weights;
  BitString original;
};

/// Sets mantissa bit 0 of weights[i] to bits[i]; returns the displaced bits.
/// Throws PlanTooLarge if there are more bits than weights.
LsbReplacement lsb_replace(std::span<const float> weights, std::span<const std::uint8_t> bits);

BitString lsb_read(std::span<const float> weights, std::size_t count);

/// Reads and decodes a plan from the start of a layer, learning the variable
/// field widths from the fixed header.
EmbedPlan read_plan(std::span<const float> weights);

/// Heuristic seal detector that survives any single bit flip: counts how many of
/// {version == 1, d matches, c in range, peak < valley inside the offset's symbol
/// range} hold for the fixed header. Random LSBs score >= 3 with probability ~1e-6.
int plan_signature_score(std::span<const float> weights, std::uint32_t out_channels);
inline constexpr int kSignatureThreshold = 3;

}  // namespace nnrw
