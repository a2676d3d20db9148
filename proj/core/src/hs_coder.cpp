#include "nnrw/hs_coder.hpp"

#include <limits>
#include <numeric>

#include "nnrw/error.hpp"

namespace nnrw {

std::size_t SymbolHistogram::total() const noexcept { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

SymbolHistogram empty_histogram(int offset) {
  SymbolHistogram h;
  h.low = offset - 99;
  h.counts.assign(199, 0);
  return h;
}

SymbolHistogram build_histogram(std::span<const int> symbols, int offset) {
  SymbolHistogram h = empty_histogram(offset);
  for (int s : symbols) {
    if (!h.contains(s)) throw Error(ErrorCode::InvalidConfig, "symbol " + std::to_string(s) + " outside host range");
    ++h.counts[static_cast<std::size_t>(s - h.low)];
  }
  return h;
}

HSParams choose_peak_valley(const SymbolHistogram& hist) { return choose_peak_valley(hist, hist, 0.0); }

HSParams choose_peak_valley(const SymbolHistogram& occupancy, const SymbolHistogram& movable, double drop_cost_bits) {
  const std::size_t bins = occupancy.counts.size();
  if (movable.low != occupancy.low || movable.counts.size() != bins) {
    throw Error(ErrorCode::InvalidConfig, "histogram ranges differ");
  }
  // stuck[i] = non-movable symbols in bins [0, i)
  std::vector<std::size_t> stuck(bins + 1, 0);
  for (std::size_t i = 0; i < bins; ++i) stuck[i + 1] = stuck[i] + (occupancy.counts[i] - movable.counts[i]);

  bool found = false;
  HSParams best;
  double best_score = 0.0;
  std::size_t nearest_empty = std::numeric_limits<std::size_t>::max();
  // Scan right to left so the nearest empty bin to the right is known; ties keep the smaller peak.
  for (std::size_t i = bins; i-- > 0;) {
    if (occupancy.counts[i] == 0) {
      nearest_empty = i;
      continue;
    }
    if (nearest_empty == std::numeric_limits<std::size_t>::max()) continue;
    const std::size_t dropped = stuck[nearest_empty] - stuck[i];
    const double score =
        static_cast<double>(movable.counts[i]) - drop_cost_bits * static_cast<double>(dropped);
    if (!found || score >= best_score) {
      found = true;
      best_score = score;
      best.peak = occupancy.low + static_cast<int>(i);
      best.valley = occupancy.low + static_cast<int>(nearest_empty);
      best.capacity = movable.counts[i];
    }
  }
  if (!found) throw Error(ErrorCode::NoValley, "no empty histogram bin to the right of any occupied bin");
  return best;
}

std::size_t dropped_count(const SymbolHistogram& occupancy, const SymbolHistogram& movable, const HSParams& params) {
  std::size_t dropped = 0;
  for (int s = params.peak; s < params.valley; ++s) dropped += occupancy[s] - movable[s];
  return dropped;
}

std::vector<int> hs_embed(std::span<const int> host, std::span<const std::uint8_t> bits, const HSParams& params) {
  if (params.valley <= params.peak) throw Error(ErrorCode::InvalidConfig, "valley must lie right of the peak");
  std::size_t peak_cells = 0;
  for (int s : host) {
    if (s == params.peak) ++peak_cells;
    if (s == params.valley) throw Error(ErrorCode::InvalidConfig, "valley bin is not empty");
  }
  if (bits.size() > peak_cells) {
    throw Error(ErrorCode::CapacityExceeded,
                std::to_string(bits.size()) + " bits exceed capacity " + std::to_string(peak_cells));
  }
  std::vector<int> marked(host.begin(), host.end());
  std::size_t next_bit = 0;
  for (int& s : marked) {
    if (s == params.peak) {
      const std::uint8_t bit = next_bit < bits.size() ? bits[next_bit] : 0;
      ++next_bit;
      s += bit & 1;
    } else if (s > params.peak && s < params.valley) {
      s += 1;
    }
  }
  return marked;
}

HSExtraction hs_extract(std::span<const int> marked, const HSParams& params) {
  HSExtraction out;
  out.restored.reserve(marked.size());
  for (int s : marked) {
    if (s == params.peak) {
      out.bits.push_back(0);
    } else if (s == params.peak + 1) {
      out.bits.push_back(1);
    }
    out.restored.push_back(s > params.peak && s <= params.valley ? s - 1 : s);
  }
  return out;
}

BitString frame_payload(std::span<const std::uint8_t> message, std::span<const std::uint8_t> lsb_backup) {
  if (message.size() > std::numeric_limits<std::uint32_t>::max() ||
      lsb_backup.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::CapacityExceeded, "payload field longer than 2^32 bits");
  }
  BitWriter w;
  w.put(kPayloadMagic, 16);
  w.put(kPayloadVersion, 8);
  w.put(message.size(), 32);
  w.put(lsb_backup.size(), 32);
  w.append(lsb_backup);
  w.append(message);
  const std::uint32_t crc = crc32_bits(w.bits());
  w.put(crc, 32);
  return std::move(w).take();
}

PayloadFields parse_payload(std::span<const std::uint8_t> bits) {
  BitReader r(bits, ErrorCode::CrcMismatch);
  if (bits.size() < 16 || r.get(16) != kPayloadMagic) throw Error(ErrorCode::BadMagic, "payload magic missing");
  if (r.get(8) != kPayloadVersion) throw Error(ErrorCode::CrcMismatch, "unknown payload version");
  const std::uint64_t msg_len = r.get(32);
  const std::uint64_t backup_len = r.get(32);
  if (msg_len + backup_len + 32 > r.remaining()) throw Error(ErrorCode::CrcMismatch, "payload lengths exceed capacity");
  PayloadFields fields;
  fields.lsb_backup = r.take(backup_len);
  fields.message = r.take(msg_len);
  const std::size_t covered = r.position();
  const auto stored = static_cast<std::uint32_t>(r.get(32));
  if (crc32_bits(bits.first(covered)) != stored) throw Error(ErrorCode::CrcMismatch, "payload checksum mismatch");
  return fields;
}

}  // namespace nnrw
