#include "nnrw/protocol.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "nnrw/channel_scorer.hpp"
#include "nnrw/error.hpp"
#include "nnrw/parallel.hpp"

namespace nnrw {
namespace {

std::size_t checked_u16(std::size_t value, const char* what) {
  if (value > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " does not fit the 16-bit plan field");
  }
  return value;
}

const WeightTensor& layer_tensor(const ModelContainer& model, const LayerSpec& spec) {
  const WeightTensor* t = model.find(spec.weight_tensor);
  if (t == nullptr) throw Error(ErrorCode::ManifestDangling, "layer tensor " + spec.weight_tensor + " missing");
  if (t->shape.size() != 4) throw Error(ErrorCode::InvalidLayer, spec.weight_tensor + " is not a rank-4 tensor");
  return *t;
}

std::vector<std::uint32_t> channel_order(const LayerSpec& spec, const WeightTensor& t, const LayerConfig& layer,
                                         const EmbedConfig& config) {
  if (layer.channel_order) return *layer.channel_order;
  if (config.calibration) {
    const auto images = calibration_inputs(*config.calibration, spec.layer_index);
    if (images.empty()) {
      throw Error(ErrorCode::InvalidConfig,
                  "calibration container has no inputs for layer " + std::to_string(spec.layer_index));
    }
    return rank_channels(channel_scores(t, spec.stride, spec.padding, images)).order;
  }
  return rank_channels_by_weight_variance(t);
}

// Per-c carrier screen over the candidate channels of one layer.
class Screen {
 public:
  Screen(const WeightTensor& t, std::span<const std::uint32_t> channels, int c, int offset) {
    const std::size_t per = t.element_count() / t.shape[0];
    symbols_.assign(t.data.size(), 0);
    classes_.assign(t.data.size(), CarrierClass::Excluded);
    parallel_for(channels.size(), [&](std::size_t i) {
      const std::size_t base = static_cast<std::size_t>(channels[i]) * per;
      for (std::size_t j = base; j < base + per; ++j) {
        const float w = t.data[j];
        if (!is_usable_carrier(w)) continue;
        symbols_[j] = host_symbol(w, c, offset);
        classes_[j] = classify_carrier(w, c, false);
      }
    });
  }

  CarrierClass at(std::size_t flat) const { return classes_[flat]; }
  int symbol(std::size_t flat) const { return symbols_[flat]; }

 private:
  std::vector<int> symbols_;
  std::vector<CarrierClass> classes_;
};

struct Tally {
  SymbolHistogram occupancy;
  SymbolHistogram movable;
  std::size_t excluded = 0;

  void add(CarrierClass cls, int symbol, int sign) {
    if (cls == CarrierClass::Excluded) {
      excluded = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(excluded) + sign);
      return;
    }
    const auto bin = static_cast<std::size_t>(symbol - occupancy.low);
    occupancy.counts[bin] = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(occupancy.counts[bin]) + sign);
    if (cls == CarrierClass::Movable) {
      movable.counts[bin] = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(movable.counts[bin]) + sign);
    }
  }
};

struct Candidate {
  std::size_t channels = 0;
  int c = 0;
  std::size_t region = 0;
  HSParams hs;
  std::size_t plan_bits = 0;
  long long net = 0;
  std::vector<PairEntropy> entropies;
};

class LayerPlanner {
 public:
  LayerPlanner(const WeightTensor& t, std::vector<std::uint32_t> order, std::vector<int> digit_positions, int offset)
      : t_(t), order_(std::move(order)), offset_(offset), d_(t.shape[0]), per_(t.element_count() / t.shape[0]) {
    rank_of_.assign(d_, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < order_.size() && i < d_; ++i) {
      if (order_[i] < d_) rank_of_[order_[i]] = i;
    }
    for (int c : digit_positions) screens_.emplace(c, Screen(t, order_, c, offset));
  }

  const Screen& screen(int c) const { return screens_.at(c); }

  // Scores configuration (N, c). The reserved region starts at the plan length
  // without exclusions and grows until the plan fits inside it; carriers in the
  // region drop out of the host at no side-information cost.
  std::optional<Candidate> evaluate(std::size_t n, int c, const Tally& base) {
    const Screen& s = screen(c);
    const std::size_t candidates = n * per_;
    const double drop_cost = index_width(candidates);
    std::size_t region = plan_bit_length(n, d_, candidates, 0);
    std::size_t removed_to = 0;
    Tally tally = base;
    while (region <= t_.data.size()) {
      for (; removed_to < region; ++removed_to) {
        if (rank_of_[removed_to / per_] < n) tally.add(s.at(removed_to), s.symbol(removed_to), -1);
      }
      HSParams hs;
      try {
        hs = choose_peak_valley(tally.occupancy, tally.movable, drop_cost);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoValley) return std::nullopt;
        throw;
      }
      const std::size_t listed = tally.excluded + dropped_count(tally.occupancy, tally.movable, hs);
      const std::size_t bits = plan_bit_length(n, d_, candidates, listed);
      if (bits <= region) {
        Candidate cand;
        cand.channels = n;
        cand.c = c;
        cand.region = region;
        cand.hs = hs;
        cand.plan_bits = bits;
        cand.net = static_cast<long long>(hs.capacity) - static_cast<long long>(kPayloadHeaderBits) -
                   static_cast<long long>(bits);
        return cand;
      }
      region = bits;
    }
    oversized_ = true;
    return std::nullopt;
  }

  bool oversized() const noexcept { return oversized_; }

  // Running tallies over the first n channels of J, one per c.
  void add_channel(std::size_t rank, std::map<int, Tally>& tallies, std::map<int, std::vector<std::size_t>>& counts) {
    const std::size_t base = static_cast<std::size_t>(order_[rank]) * per_;
    for (auto& [c, tally] : tallies) {
      const Screen& s = screen(c);
      auto& hist = counts[c];
      for (std::size_t j = base; j < base + per_; ++j) {
        tally.add(s.at(j), s.symbol(j), +1);
        if (is_usable_carrier(t_.data[j])) ++hist[static_cast<std::size_t>(s.symbol(j) - offset_ + 99)];
      }
    }
  }

  LayerPlan finish(const Candidate& cand, std::size_t layer_index, const std::string& tensor_name) {
    const Screen& s = screen(cand.c);
    const auto coords = candidate_coords(t_, order_, cand.channels);
    LayerPlan lp;
    lp.layer_index = layer_index;
    lp.tensor = tensor_name;
    lp.hs = cand.hs;
    lp.pair_entropies = cand.entropies;
    lp.host.digit_position = cand.c;
    lp.host.offset = offset_;
    ExclusionMap exclusions;
    exclusions.excluded.assign(coords.size(), 0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const CarrierClass cls = s.at(coords[i]);
      const int sym = s.symbol(coords[i]);
      const bool dropped = cls == CarrierClass::Readable && sym >= cand.hs.peak && sym < cand.hs.valley;
      if (coords[i] < cand.region || cls == CarrierClass::Excluded || dropped) {
        exclusions.excluded[i] = 1;
        continue;
      }
      lp.host.symbols.push_back(sym);
      lp.host.coords.push_back(coords[i]);
    }

    EmbedPlan& plan = lp.plan;
    plan.layer_index = static_cast<std::uint16_t>(checked_u16(layer_index, "layer index"));
    plan.channels = static_cast<std::uint16_t>(cand.channels);
    plan.digit_position = static_cast<std::uint8_t>(cand.c);
    plan.offset = static_cast<std::uint16_t>(offset_);
    plan.peak = static_cast<std::uint16_t>(cand.hs.peak);
    plan.valley = static_cast<std::uint16_t>(cand.hs.valley);
    plan.out_channels = static_cast<std::uint16_t>(d_);
    plan.region = static_cast<std::uint32_t>(cand.region);
    plan.order_prefix.assign(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(cand.channels));
    plan.exclusions = std::move(exclusions);
    lp.plan_bits = plan_bit_length(plan);
    if (lp.plan_bits > t_.data.size()) {
      throw Error(ErrorCode::PlanTooLarge, std::to_string(lp.plan_bits) + " plan bits for " +
                                               std::to_string(t_.data.size()) + " weights in " + tensor_name);
    }
    return lp;
  }

  std::size_t out_channels() const noexcept { return d_; }

 private:
  const WeightTensor& t_;
  std::vector<std::uint32_t> order_;
  int offset_;
  std::size_t d_;
  std::size_t per_;
  std::vector<std::size_t> rank_of_;
  std::map<int, Screen> screens_;
  bool oversized_ = false;
};

std::vector<PairEntropy> entropy_table(const std::map<int, std::vector<std::size_t>>& counts) {
  std::vector<PairEntropy> table;
  for (const auto& [c, hist] : counts) {
    std::size_t total = 0;
    for (std::size_t n : hist) total += n;
    table.push_back({c, histogram_entropy(hist), total});
  }
  return table;
}

int min_entropy_c(const std::vector<PairEntropy>& table) {
  int best = table.front().c;
  double best_h = table.front().entropy_bits;
  for (const auto& row : table) {
    if (row.entropy_bits < best_h) {
      best = row.c;
      best_h = row.entropy_bits;
    }
  }
  return best;
}

struct ResolvedLayer {
  std::size_t position = 0;
  const LayerConfig* config = nullptr;
};

std::vector<ResolvedLayer> resolve_layers(const ModelContainer& model, const EmbedConfig& config) {
  if (config.layers.empty()) throw Error(ErrorCode::InvalidConfig, "no layers configured");
  std::vector<ResolvedLayer> out;
  for (const auto& layer : config.layers) out.push_back({model.resolve_layer(layer.layer), &layer});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.position < b.position; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].position == out[i - 1].position) throw Error(ErrorCode::InvalidConfig, "layer configured twice");
  }
  std::vector<std::string> names;
  for (const auto& r : out) names.push_back(model.manifest[r.position].weight_tensor);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw Error(ErrorCode::InvalidConfig, "two configured layers share a weight tensor");
  }
  return out;
}

std::vector<LayerPlan> plan_layers(const ModelContainer& model, const EmbedConfig& config) {
  std::vector<LayerPlan> plans;
  for (const auto& r : resolve_layers(model, config)) {
    LayerConfig layer = *r.config;
    layer.layer = static_cast<int>(r.position);
    plans.push_back(plan_layer(model, layer, config));
  }
  return plans;
}

LayerEmbedReport embed_layer(WeightTensor& tensor, const LayerPlan& lp, std::span<const std::uint8_t> chunk) {
  const std::vector<float> original = tensor.data;
  const int c = lp.plan.digit_position;
  const int offset = lp.plan.offset;
  const BitString backup = lsb_read(original, lp.plan_bits);
  const BitString payload = frame_payload(chunk, backup);
  if (payload.size() > lp.hs.capacity) {
    throw Error(ErrorCode::CapacityExceeded, "layer " + std::to_string(lp.layer_index) + ": payload of " +
                                                 std::to_string(payload.size()) + " bits exceeds capacity " +
                                                 std::to_string(lp.hs.capacity));
  }
  const auto marked = hs_embed(lp.host.symbols, payload, lp.hs);
  for (std::size_t i = 0; i < marked.size(); ++i) {
    if (marked[i] == lp.host.symbols[i]) continue;
    const std::uint32_t at = lp.host.coords[i];
    const auto written = write_pair(original[at], c, std::abs(marked[i] - offset));
    if (!written) throw Error(ErrorCode::CorruptCarrier, "screened carrier failed to take its new pair");
    tensor.data[at] = *written;
  }
  tensor.data = lsb_replace(tensor.data, encode_plan(lp.plan)).weights;

  LayerEmbedReport report;
  report.layer_index = lp.layer_index;
  report.channels = lp.plan.channels;
  report.digit_position = c;
  report.hs = lp.hs;
  report.carriers = lp.host.symbols.size();
  report.excluded = lp.plan.exclusions.excluded_count();
  report.plan_bits = lp.plan_bits;
  report.message_bits = chunk.size();
  report.message_capacity = lp.message_capacity();
  for (std::size_t i = 0; i < original.size(); ++i) {
    report.modified_weights += float_bits(original[i]) != float_bits(tensor.data[i]);
  }
  return report;
}

struct LayerRecovery {
  BitString message;
  EmbedPlan plan;
  std::vector<float> restored;
};

LayerRecovery recover_layer(const WeightTensor& tensor, const LayerSpec& spec) {
  LayerRecovery out;
  out.plan = read_plan(tensor.data);
  const EmbedPlan& plan = out.plan;
  if (plan.out_channels != tensor.shape[0] || plan.layer_index != spec.layer_index) {
    throw Error(ErrorCode::MalformedPlan, "plan does not describe layer " + std::to_string(spec.layer_index));
  }
  if (plan.digit_position < kMinDigitPosition || plan.digit_position > kMaxDigitPosition ||
      plan.offset < kMinOffset || plan.offset > kMaxOffset || plan.peak >= plan.valley ||
      plan.peak + 99 < plan.offset || plan.valley > plan.offset + 99) {
    throw Error(ErrorCode::MalformedPlan, "plan parameters out of range");
  }
  const std::size_t per = tensor.element_count() / tensor.shape[0];
  if (plan.exclusions.size() != std::size_t{plan.channels} * per || plan.region > tensor.data.size() ||
      plan.region < plan_bit_length(plan)) {
    throw Error(ErrorCode::MalformedPlan, "plan geometry does not match the layer");
  }
  const int c = plan.digit_position;
  const int offset = plan.offset;
  const HostSequence host = build_host(tensor, plan.order_prefix, plan.channels, c, offset, plan.exclusions);
  HSParams hs;
  hs.peak = plan.peak;
  hs.valley = plan.valley;
  const HSExtraction ext = hs_extract(host.symbols, hs);
  PayloadFields fields = parse_payload(ext.bits);
  const std::size_t plan_bits = plan_bit_length(plan);
  if (fields.lsb_backup.size() != plan_bits) {
    throw Error(ErrorCode::MalformedPlan, "LSB backup length does not match the plan");
  }

  out.restored = tensor.data;
  for (std::size_t i = 0; i < host.symbols.size(); ++i) {
    if (ext.restored[i] == host.symbols[i]) continue;
    const std::uint32_t at = host.coords[i];
    out.restored[at] = shift_pair_unchecked(tensor.data[at], c, std::abs(ext.restored[i] - offset));
  }
  for (std::size_t i = 0; i < plan_bits; ++i) out.restored[i] = with_lsb(out.restored[i], fields.lsb_backup[i]);
  out.message = std::move(fields.message);
  return out;
}

std::vector<std::size_t> resolve_positions(const ModelContainer& model, std::span<const int> layers) {
  std::vector<std::size_t> positions;
  if (layers.empty()) {
    for (int p : detect_sealed_layers(model)) positions.push_back(static_cast<std::size_t>(p));
  } else {
    for (int l : layers) positions.push_back(model.resolve_layer(l));
  }
  std::sort(positions.begin(), positions.end());
  if (std::adjacent_find(positions.begin(), positions.end()) != positions.end()) {
    throw Error(ErrorCode::InvalidConfig, "layer listed twice");
  }
  return positions;
}

bool any_tensor_signed(const ModelContainer& model) {
  for (const auto& t : model.tensors) {
    if (t.shape.size() == 4 && t.shape[0] > 0 && plan_signature_score(t.data, t.shape[0]) >= kSignatureThreshold) {
      return true;
    }
  }
  return false;
}

std::string hex_digest(const Digest& d) { return to_hex(d); }

}  // namespace

std::size_t LayerPlan::message_capacity() const noexcept {
  const std::size_t overhead = kPayloadHeaderBits + plan_bits;
  return hs.capacity > overhead ? hs.capacity - overhead : 0;
}

LayerPlan plan_layer(const ModelContainer& model, const LayerConfig& layer, const EmbedConfig& config) {
  if (config.offset < kMinOffset || config.offset > kMaxOffset) {
    throw Error(ErrorCode::InvalidConfig, "offset V=" + std::to_string(config.offset) + " outside [" +
                                              std::to_string(kMinOffset) + "," + std::to_string(kMaxOffset) + "]");
  }
  std::vector<int> positions;
  if (config.digit_position) {
    const int c = *config.digit_position;
    if (c < kMinDigitPosition || c > kMaxDigitPosition) {
      throw Error(ErrorCode::InvalidConfig, "digit position " + std::to_string(c) + " outside [2,5]");
    }
    positions.push_back(c);
  } else {
    for (int c = kMinDigitPosition; c <= kMaxDigitPosition; ++c) positions.push_back(c);
  }

  const std::size_t index = model.resolve_layer(layer.layer);
  const LayerSpec& spec = model.manifest[index];
  const WeightTensor& t = layer_tensor(model, spec);
  const std::size_t d = t.shape[0];
  if (d == 0 || t.element_count() == 0) throw Error(ErrorCode::InvalidShape, spec.weight_tensor + " is empty");
  checked_u16(d, "output channel count");

  auto order = channel_order(spec, t, layer, config);
  if (layer.channels) {
    (void)candidate_coords(t, order, *layer.channels);  // NOutOfRange / BadPermutation
  } else {
    (void)candidate_coords(t, order, d);
  }
  const std::size_t n_max = layer.channels.value_or(d);
  LayerPlanner planner(t, order, positions, config.offset);

  std::map<int, Tally> tallies;
  std::map<int, std::vector<std::size_t>> counts;
  for (int c : positions) {
    tallies[c] = Tally{empty_histogram(config.offset), empty_histogram(config.offset), 0};
    counts[c].assign(199, 0);
  }

  std::optional<Candidate> best;
  bool any_usable = false;
  for (std::size_t n = 1; n <= n_max; ++n) {
    planner.add_channel(n - 1, tallies, counts);
    if (layer.channels && n != n_max) continue;
    auto table = entropy_table(counts);
    if (table.front().usable_count == 0) continue;
    any_usable = true;
    const int c = min_entropy_c(table);
    auto cand = planner.evaluate(n, c, tallies.at(c));
    if (!cand) continue;
    cand->entropies = std::move(table);
    if (!best || cand->net > best->net) best = std::move(cand);
  }
  if (!any_usable) throw Error(ErrorCode::NoUsableWeights, "no finite nonzero weights among the candidate channels");
  if (!best && planner.oversized()) {
    throw Error(ErrorCode::PlanTooLarge, "side information does not fit in " + spec.weight_tensor);
  }
  if (!best) throw Error(ErrorCode::NoValley, "host histogram of " + spec.weight_tensor + " has no empty valley bin");
  return planner.finish(*best, spec.layer_index, spec.weight_tensor);
}

EmbedResult embed_watermark(const ModelContainer& model, std::span<const std::uint8_t> message,
                            const EmbedConfig& config) {
  validate(model);
  const auto plans = plan_layers(model, config);
  std::size_t total = 0;
  for (const auto& lp : plans) total += lp.message_capacity();
  if (message.size() > total) {
    throw Error(ErrorCode::CapacityExceeded, std::to_string(message.size()) + " message bits exceed aggregate capacity " +
                                                 std::to_string(total));
  }
  EmbedResult result;
  result.marked = model;
  std::size_t next = 0;
  for (const auto& lp : plans) {
    const std::size_t take = std::min(lp.message_capacity(), message.size() - next);
    result.layers.push_back(embed_layer(*result.marked.find(lp.tensor), lp, message.subspan(next, take)));
    next += take;
  }
  return result;
}

ExtractResult extract_watermark(const ModelContainer& marked, std::span<const int> layers) {
  validate(marked);
  const auto positions = resolve_positions(marked, layers);
  if (positions.empty()) throw Error(ErrorCode::BadMagic, "no watermarked layer found");
  ExtractResult result;
  result.restored = marked;
  for (std::size_t p : positions) {
    const LayerSpec& spec = marked.manifest[p];
    LayerRecovery rec = recover_layer(layer_tensor(marked, spec), spec);
    result.restored.find(spec.weight_tensor)->data = std::move(rec.restored);
    result.message.insert(result.message.end(), rec.message.begin(), rec.message.end());
    result.layers.push_back({spec.layer_index, std::move(rec.message), std::move(rec.plan)});
  }
  return result;
}

BitString digest_bits(const Digest& digest) { return unpack_bits(digest); }

EmbedResult seal(const ModelContainer& model, const EmbedConfig& config) {
  validate(model);
  const BitString digest = digest_bits(model_digest(model));
  const auto plans = plan_layers(model, config);
  EmbedResult result;
  result.marked = model;
  for (const auto& lp : plans) {
    if (lp.message_capacity() < digest.size()) {
      throw Error(ErrorCode::CapacityExceeded, "layer " + std::to_string(lp.layer_index) + " holds " +
                                                   std::to_string(lp.message_capacity()) +
                                                   " message bits, a seal needs 256");
    }
    result.layers.push_back(embed_layer(*result.marked.find(lp.tensor), lp, digest));
  }
  return result;
}

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::Intact:
      return "INTACT";
    case Verdict::Tampered:
      return "TAMPERED";
    case Verdict::NotSealed:
      return "NOT_SEALED";
  }
  return "UNKNOWN";
}

std::string VerifyReport::to_record() const {
  nlohmann::ordered_json j;
  j["verdict"] = std::string(to_string(verdict));
  j["extracted"] = extracted ? nlohmann::ordered_json(hex_digest(*extracted)) : nlohmann::ordered_json(nullptr);
  j["recomputed"] = recomputed ? nlohmann::ordered_json(hex_digest(*recomputed)) : nlohmann::ordered_json(nullptr);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& l : layers) arr.push_back({{"layer", l.layer_index}, {"ok", l.ok}, {"detail", l.detail}});
  j["layers"] = std::move(arr);
  return j.dump();
}

std::string VerifyReport::to_text() const {
  std::ostringstream os;
  os << "verdict:    " << to_string(verdict) << '\n';
  os << "extracted:  " << (extracted ? hex_digest(*extracted) : "-") << '\n';
  os << "recomputed: " << (recomputed ? hex_digest(*recomputed) : "-") << '\n';
  for (const auto& l : layers) {
    os << "layer " << l.layer_index << ": " << (l.ok ? "ok" : "FAIL");
    if (!l.detail.empty()) os << " (" << l.detail << ')';
    os << '\n';
  }
  return os.str();
}

std::vector<int> detect_sealed_layers(const ModelContainer& model) {
  std::vector<int> out;
  for (std::size_t i = 0; i < model.manifest.size(); ++i) {
    const WeightTensor* t = model.find(model.manifest[i].weight_tensor);
    if (t == nullptr || t->shape.size() != 4 || t->shape[0] == 0) continue;
    if (plan_signature_score(t->data, t->shape[0]) >= kSignatureThreshold) out.push_back(static_cast<int>(i));
  }
  return out;
}

VerifyReport verify(const ModelContainer& sealed, std::span<const int> layers) {
  VerifyReport report;
  if (!any_tensor_signed(sealed)) {
    report.verdict = Verdict::NotSealed;
    return report;
  }
  std::vector<std::size_t> positions;
  try {
    validate(sealed);
    positions = resolve_positions(sealed, layers);
  } catch (const Error& e) {
    report.verdict = Verdict::Tampered;
    report.layers.push_back({0, false, e.what()});
    return report;
  }
  report.verdict = Verdict::Tampered;
  if (positions.empty()) {
    report.layers.push_back({0, false, "seal signature found outside the layer manifest"});
    return report;
  }

  ModelContainer restored = sealed;
  bool extracted_all = true;
  bool agree = true;
  for (std::size_t p : positions) {
    const LayerSpec& spec = sealed.manifest[p];
    LayerStatus status{spec.layer_index, false, {}};
    try {
      LayerRecovery rec = recover_layer(layer_tensor(sealed, spec), spec);
      restored.find(spec.weight_tensor)->data = std::move(rec.restored);
      if (rec.message.size() != 256) {
        status.detail = "message is " + std::to_string(rec.message.size()) + " bits, not a digest";
        extracted_all = false;
      } else {
        const auto bytes = pack_bits(rec.message);
        Digest d{};
        std::copy(bytes.begin(), bytes.end(), d.begin());
        if (!report.extracted) {
          report.extracted = d;
        } else if (*report.extracted != d) {
          agree = false;
          status.detail = "digest differs from layer " + std::to_string(report.layers.front().layer_index);
        }
        status.ok = true;
      }
    } catch (const Error& e) {
      status.detail = e.what();
      extracted_all = false;
    }
    report.layers.push_back(std::move(status));
  }
  if (!extracted_all) return report;
  report.recomputed = model_digest(restored);
  if (agree && report.extracted == report.recomputed) report.verdict = Verdict::Intact;
  for (auto& l : report.layers) {
    if (l.ok && report.verdict != Verdict::Intact && l.detail.empty()) l.detail = "digest mismatch";
    l.ok = l.ok && report.verdict == Verdict::Intact;
  }
  return report;
}

VerifyReport verify_bytes(std::span<const std::uint8_t> bytes, std::span<const int> layers) {
  ModelContainer model;
  try {
    model = parse_container(bytes);
  } catch (const Error& e) {
    VerifyReport report;
    report.verdict = Verdict::Tampered;
    report.layers.push_back({0, false, e.what()});
    return report;
  }
  return verify(model, layers);
}

}  // namespace nnrw
