#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnrw/bits.hpp"
#include "nnrw/container.hpp"
#include "nnrw/hs_coder.hpp"
#include "nnrw/host_codec.hpp"
#include "nnrw/lsb_sidecar.hpp"

namespace nnrw {

struct LayerConfig {
  int layer = -1;                                       // negative counts from the end
  std::optional<std::size_t> channels;                  // N; nullopt = maximize message capacity
  std::optional<std::vector<std::uint32_t>> channel_order;  // J supplied by the caller
};

struct EmbedConfig {
  std::vector<LayerConfig> layers{LayerConfig{}};
  std::optional<int> digit_position;  // nullopt = minimum-entropy scan over [2,5]
  int offset = kDefaultOffset;
  /// Calibration tensors ("input_*" or "L<i>/input_*"). Absent: weight-variance ranking.
  std::shared_ptr<const ModelContainer> calibration;
};

/// Everything decided for one layer before any bit is written.
struct LayerPlan {
  std::size_t layer_index = 0;
  std::string tensor;
  EmbedPlan plan;
  HostSequence host;
  HSParams hs;
  std::size_t plan_bits = 0;
  std::vector<PairEntropy> pair_entropies;

  /// Bits available for message data after header and LSB backup.
  std::size_t message_capacity() const noexcept;
};

/// Ranks channels, selects c, screens carriers and picks peak/valley for one layer.
LayerPlan plan_layer(const ModelContainer& model, const LayerConfig& layer, const EmbedConfig& config);

struct LayerEmbedReport {
  std::size_t layer_index = 0;
  std::size_t channels = 0;
  int digit_position = 0;
  HSParams hs;
  std::size_t carriers = 0;
  std::size_t excluded = 0;
  std::size_t plan_bits = 0;
  std::size_t message_bits = 0;
  std::size_t message_capacity = 0;
  std::size_t modified_weights = 0;
};

struct EmbedResult {
  ModelContainer marked;
  std::vector<LayerEmbedReport> layers;
};

/// Splits `message` greedily over the configured layers in order.
EmbedResult embed_watermark(const ModelContainer& model, std::span<const std::uint8_t> message,
                            const EmbedConfig& config);

struct LayerExtraction {
  std::size_t layer_index = 0;
  BitString message;
  EmbedPlan plan;
};

struct ExtractResult {
  BitString message;  // concatenation of per-layer chunks
  ModelContainer restored;
  std::vector<LayerExtraction> layers;
};

ExtractResult extract_watermark(const ModelContainer& marked, std::span<const int> layers);

/// Embeds model_digest(model) into every configured layer.
EmbedResult seal(const ModelContainer& model, const EmbedConfig& config);

enum class Verdict { Intact, Tampered, NotSealed };
std::string_view to_string(Verdict verdict) noexcept;

struct LayerStatus {
  std::size_t layer_index = 0;
  bool ok = false;
  std::string detail;
};

struct VerifyReport {
  Verdict verdict = Verdict::NotSealed;
  std::optional<Digest> extracted;    // WM2
  std::optional<Digest> recomputed;   // WM3
  std::vector<LayerStatus> layers;

  std::string to_record() const;  // single-line JSON
  std::string to_text() const;
};

VerifyReport verify(const ModelContainer& sealed, std::span<const int> layers);

/// Parses then verifies; unreadable bytes yield Tampered.
VerifyReport verify_bytes(std::span<const std::uint8_t> bytes, std::span<const int> layers);

/// Manifest layers whose LSBs carry a plan signature.
std::vector<int> detect_sealed_layers(const ModelContainer& model);

BitString digest_bits(const Digest& digest);

}  // namespace nnrw
