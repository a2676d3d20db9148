#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nnrw/container.hpp"

namespace nnrw {

/// c x h x w activation tensor, row-major.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
};

/// Interprets a rank-3 (c,h,w) or rank-4 (1,c,h,w) tensor as a feature map.
FeatureMap as_feature_map(const WeightTensor& tensor);

/// Cross-correlation with zero padding, no bias, no activation. Each output is
/// accumulated in double and rounded to float once.
FeatureMap conv_forward(const FeatureMap& input, const WeightTensor& weights, unsigned stride, unsigned padding);

/// mu x d matrix of channel scores; rows are calibration images.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const { return values[row * cols + col]; }
  std::vector<double> column(std::size_t col) const;
};

/// Row g is the global average pool of conv_forward(images[g]). Images are
/// convolved in parallel; row order follows `images`.
ScoreMatrix channel_scores(const WeightTensor& weights, unsigned stride, unsigned padding,
                           std::span<const FeatureMap> images);

/// Largest m in [1, size] whose equal-width partition of [min, max] leaves no bin empty.
std::size_t bin_count_search(std::span<const double> column);

/// Bin of `value` among m equal-width bins over [lo, hi]. Interior edges go to the
/// higher bin, `hi` goes to the last bin.
std::size_t bin_index(double value, double lo, double hi, std::size_t m);

/// Shannon entropy (bits) of the m-bin histogram. Throws EmptyBin if a bin is empty.
double channel_entropy(std::span<const double> column, std::size_t m);

struct ChannelRank {
  std::vector<double> entropies;
  std::vector<std::uint32_t> order;  // ascending entropy, ties by channel index
  std::vector<std::size_t> bin_counts;
};

ChannelRank rank_channels(const ScoreMatrix& scores);

/// Fallback ordering when no calibration data is available: ascending variance of
/// each output channel's weight magnitudes, ties by index. Non-finite weights are ignored.
std::vector<std::uint32_t> rank_channels_by_weight_variance(const WeightTensor& weights);

/// Calibration inputs for a layer: tensors named "L<layer>/input_*" if present,
/// otherwise "input_*", in container order.
std::vector<FeatureMap> calibration_inputs(const ModelContainer& calibration, std::size_t layer_index);

}  // namespace nnrw
