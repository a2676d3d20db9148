#include "nnrw/lsb_sidecar.hpp"

#include <algorithm>

#include "nnrw/error.hpp"

namespace nnrw {
namespace {

struct PlanHeader {
  std::uint8_t version = 0;
  std::uint16_t layer_index = 0;
  std::uint16_t channels = 0;
  std::uint8_t digit_position = 0;
  std::uint16_t offset = 0;
  std::uint16_t peak = 0;
  std::uint16_t valley = 0;
  std::uint16_t out_channels = 0;
  std::uint32_t region = 0;
};

PlanHeader read_header(BitReader& r) {
  PlanHeader h;
  h.version = static_cast<std::uint8_t>(r.get(8));
  h.layer_index = static_cast<std::uint16_t>(r.get(16));
  h.channels = static_cast<std::uint16_t>(r.get(16));
  h.digit_position = static_cast<std::uint8_t>(r.get(8));
  h.offset = static_cast<std::uint16_t>(r.get(16));
  h.peak = static_cast<std::uint16_t>(r.get(16));
  h.valley = static_cast<std::uint16_t>(r.get(16));
  h.out_channels = static_cast<std::uint16_t>(r.get(16));
  h.region = static_cast<std::uint32_t>(r.get(32));
  return h;
}

std::size_t per_channel(std::size_t candidates, std::size_t channels) {
  return channels == 0 ? 0 : candidates / channels;
}

std::uint32_t flat_index(std::span<const std::uint32_t> order, std::size_t per, std::size_t i) {
  return static_cast<std::uint32_t>(std::size_t{order[i / per]} * per + i % per);
}

std::vector<std::uint32_t> listed_exclusions(const EmbedPlan& plan) {
  std::vector<std::uint32_t> listed;
  const std::size_t per = per_channel(plan.exclusions.size(), plan.channels);
  for (std::size_t i = 0; i < plan.exclusions.size(); ++i) {
    const bool implied = flat_index(plan.order_prefix, per, i) < plan.region;
    if (implied && !plan.exclusions.excluded[i]) {
      throw Error(ErrorCode::MalformedPlan, "reserved-region position not marked excluded");
    }
    if (!implied && plan.exclusions.excluded[i]) listed.push_back(static_cast<std::uint32_t>(i));
  }
  return listed;
}

void check_shape(const EmbedPlan& plan) {
  if (plan.order_prefix.size() != plan.channels) {
    throw Error(ErrorCode::MalformedPlan, "channel order prefix does not have N entries");
  }
  const std::size_t candidates = plan.exclusions.size();
  if (plan.channels == 0 ? candidates != 0 : candidates % plan.channels != 0) {
    throw Error(ErrorCode::MalformedPlan, "candidate count is not a multiple of N");
  }
}

}  // namespace

std::uint32_t candidate_flat_index(const EmbedPlan& plan, std::size_t i) {
  return flat_index(plan.order_prefix, per_channel(plan.exclusions.size(), plan.channels), i);
}

std::size_t plan_bit_length(std::size_t channels, std::size_t out_channels, std::size_t candidates,
                            std::size_t listed) {
  return kPlanHeaderBits + channels * index_width(out_channels) + 32 + 32 + listed * index_width(candidates) + 32;
}

std::size_t plan_bit_length(const EmbedPlan& plan) {
  check_shape(plan);
  return plan_bit_length(plan.channels, plan.out_channels, plan.exclusions.size(), listed_exclusions(plan).size());
}

BitString encode_plan(const EmbedPlan& plan) {
  check_shape(plan);
  BitWriter w;
  w.put(plan.plan_version, 8);
  w.put(plan.layer_index, 16);
  w.put(plan.channels, 16);
  w.put(plan.digit_position, 8);
  w.put(plan.offset, 16);
  w.put(plan.peak, 16);
  w.put(plan.valley, 16);
  w.put(plan.out_channels, 16);
  w.put(plan.region, 32);
  const unsigned order_width = index_width(plan.out_channels);
  for (std::uint32_t ch : plan.order_prefix) {
    if (ch >= plan.out_channels) throw Error(ErrorCode::MalformedPlan, "channel index exceeds d");
    w.put(ch, order_width);
  }
  const auto excluded = listed_exclusions(plan);
  w.put(plan.exclusions.size(), 32);
  w.put(excluded.size(), 32);
  const unsigned index_bits = index_width(plan.exclusions.size());
  for (std::uint32_t i : excluded) w.put(i, index_bits);
  w.put(crc32_bits(w.bits()), 32);
  return std::move(w).take();
}

EmbedPlan decode_plan(std::span<const std::uint8_t> bits) {
  BitReader r(bits, ErrorCode::MalformedPlan);
  const PlanHeader h = read_header(r);
  const unsigned order_width = index_width(h.out_channels);
  if (r.remaining() < std::size_t{h.channels} * order_width) throw Error(ErrorCode::MalformedPlan, "plan truncated");
  std::vector<std::uint32_t> order(h.channels);
  for (auto& ch : order) ch = static_cast<std::uint32_t>(r.get(order_width));
  const std::uint64_t candidates = r.get(32);
  const std::uint64_t excluded_count = r.get(32);
  const unsigned index_bits = index_width(candidates);
  if (excluded_count > candidates || r.remaining() < excluded_count * index_bits + 32) {
    throw Error(ErrorCode::MalformedPlan, "plan truncated");
  }
  std::vector<std::uint32_t> excluded(excluded_count);
  for (auto& i : excluded) i = static_cast<std::uint32_t>(r.get(index_bits));
  const std::size_t covered = r.position();
  const auto stored = static_cast<std::uint32_t>(r.get(32));
  if (crc32_bits(bits.first(covered)) != stored) throw Error(ErrorCode::CrcMismatch, "plan checksum mismatch");

  if (h.version != kPlanVersion) throw Error(ErrorCode::MalformedPlan, "unknown plan version");
  if (h.channels > h.out_channels) throw Error(ErrorCode::MalformedPlan, "N exceeds d");
  std::vector<std::uint8_t> seen(h.out_channels, 0);
  for (std::uint32_t ch : order) {
    if (ch >= h.out_channels || seen[ch]) throw Error(ErrorCode::MalformedPlan, "channel order repeats an index");
    seen[ch] = 1;
  }
  if (!std::is_sorted(excluded.begin(), excluded.end()) ||
      std::adjacent_find(excluded.begin(), excluded.end()) != excluded.end()) {
    throw Error(ErrorCode::MalformedPlan, "exclusion indices not strictly increasing");
  }
  if (h.channels == 0 ? candidates != 0 : candidates % h.channels != 0) {
    throw Error(ErrorCode::MalformedPlan, "candidate count is not a multiple of N");
  }
  ExclusionMap map = ExclusionMap::from_indices(candidates, excluded);
  const std::size_t per = per_channel(candidates, h.channels);
  for (std::size_t i = 0; i < candidates; ++i) {
    if (flat_index(order, per, i) >= h.region) continue;
    if (map.excluded[i]) throw Error(ErrorCode::MalformedPlan, "reserved-region position listed explicitly");
    map.excluded[i] = 1;
  }

  EmbedPlan plan;
  plan.plan_version = h.version;
  plan.layer_index = h.layer_index;
  plan.channels = h.channels;
  plan.digit_position = h.digit_position;
  plan.offset = h.offset;
  plan.peak = h.peak;
  plan.valley = h.valley;
  plan.out_channels = h.out_channels;
  plan.region = h.region;
  plan.order_prefix = std::move(order);
  plan.exclusions = std::move(map);
  return plan;
}

LsbReplacement lsb_replace(std::span<const float> weights, std::span<const std::uint8_t> bits) {
  if (bits.size() > weights.size()) {
    throw Error(ErrorCode::PlanTooLarge, std::to_string(bits.size()) + " metadata bits for " +
                                             std::to_string(weights.size()) + " weights");
  }
  LsbReplacement out;
  out.weights.assign(weights.begin(), weights.end());
  out.original.reserve(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    out.original.push_back(static_cast<std::uint8_t>(float_bits(weights[i]) & 1u));
    out.weights[i] = with_lsb(weights[i], bits[i]);
  }
  return out;
}

BitString lsb_read(std::span<const float> weights, std::size_t count) {
  count = std::min(count, weights.size());
  BitString bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = static_cast<std::uint8_t>(float_bits(weights[i]) & 1u);
  return bits;
}

EmbedPlan read_plan(std::span<const float> weights) {
  if (weights.size() < kPlanHeaderBits) throw Error(ErrorCode::MalformedPlan, "layer too small to hold a plan");
  const BitString head = lsb_read(weights, kPlanHeaderBits);
  BitReader r(head);
  const PlanHeader h = read_header(r);
  const std::size_t counts_end = kPlanHeaderBits + std::size_t{h.channels} * index_width(h.out_channels) + 64;
  if (counts_end > weights.size()) throw Error(ErrorCode::MalformedPlan, "plan exceeds layer size");
  const BitString with_counts = lsb_read(weights, counts_end);
  BitReader counts(with_counts);
  counts.take(counts_end - 64);
  const std::uint64_t candidates = counts.get(32);
  const std::uint64_t excluded = counts.get(32);
  if (excluded > candidates || candidates > weights.size()) {
    throw Error(ErrorCode::MalformedPlan, "exclusion counts inconsistent with layer size");
  }
  const std::uint64_t total = counts_end + excluded * index_width(candidates) + 32;
  if (total > weights.size()) throw Error(ErrorCode::MalformedPlan, "plan exceeds layer size");
  return decode_plan(lsb_read(weights, static_cast<std::size_t>(total)));
}

int plan_signature_score(std::span<const float> weights, std::uint32_t out_channels) {
  if (weights.size() < kPlanHeaderBits) return 0;
  const BitString head = lsb_read(weights, kPlanHeaderBits);
  BitReader r(head);
  const PlanHeader h = read_header(r);
  int score = 0;
  score += h.version == kPlanVersion;
  score += h.out_channels == out_channels;
  score += h.digit_position >= kMinDigitPosition && h.digit_position <= kMaxDigitPosition;
  score += h.offset >= kMinOffset && h.offset <= kMaxOffset && h.peak + 99 >= h.offset && h.peak < h.valley &&
           h.valley <= h.offset + 99;
  return score;
}

}  // namespace nnrw
