#include "nnrw/channel_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <boost/multiprecision/cpp_int.hpp>

#include "nnrw/error.hpp"
#include "nnrw/host_codec.hpp"
#include "nnrw/parallel.hpp"

namespace nnrw {

FeatureMap as_feature_map(const WeightTensor& tensor) {
  const auto& s = tensor.shape;
  FeatureMap map;
  if (s.size() == 3) {
    map.channels = s[0];
    map.height = s[1];
    map.width = s[2];
  } else if (s.size() == 4 && s[0] == 1) {
    map.channels = s[1];
    map.height = s[2];
    map.width = s[3];
  } else {
    throw Error(ErrorCode::ShapeMismatch, tensor.name + " is not a (c,h,w) or (1,c,h,w) input");
  }
  map.data = tensor.data;
  return map;
}

FeatureMap conv_forward(const FeatureMap& input, const WeightTensor& weights, unsigned stride, unsigned padding) {
  if (weights.shape.size() != 4 || weights.shape[2] != weights.shape[3]) {
    throw Error(ErrorCode::InvalidLayer, weights.name + " is not a d x c x k x k tensor");
  }
  const std::size_t d = weights.shape[0];
  const std::size_t c = weights.shape[1];
  const std::size_t k = weights.shape[2];
  if (c != input.channels) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(input.channels) + " channels, kernel expects " +
                                              std::to_string(c));
  }
  if (stride == 0) throw Error(ErrorCode::InvalidConfig, "stride must be positive");
  const std::size_t padded_h = input.height + 2 * std::size_t{padding};
  const std::size_t padded_w = input.width + 2 * std::size_t{padding};
  if (k > padded_h || k > padded_w) throw Error(ErrorCode::ShapeMismatch, "kernel larger than padded input");

  FeatureMap out;
  out.channels = d;
  out.height = (padded_h - k) / stride + 1;
  out.width = (padded_w - k) / stride + 1;
  out.data.assign(out.channels * out.height * out.width, 0.0f);

  const auto pad = static_cast<std::ptrdiff_t>(padding);
  const auto h = static_cast<std::ptrdiff_t>(input.height);
  const auto w = static_cast<std::ptrdiff_t>(input.width);
  for (std::size_t oc = 0; oc < d; ++oc) {
    const float* kernel = weights.data.data() + oc * c * k * k;
    for (std::size_t oy = 0; oy < out.height; ++oy) {
      for (std::size_t ox = 0; ox < out.width; ++ox) {
        double acc = 0.0;
        const auto y0 = static_cast<std::ptrdiff_t>(oy * stride) - pad;
        const auto x0 = static_cast<std::ptrdiff_t>(ox * stride) - pad;
        for (std::size_t ic = 0; ic < c; ++ic) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto y = y0 + static_cast<std::ptrdiff_t>(ky);
            if (y < 0 || y >= h) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto x = x0 + static_cast<std::ptrdiff_t>(kx);
              if (x < 0 || x >= w) continue;
              acc += static_cast<double>(kernel[(ic * k + ky) * k + kx]) *
                     static_cast<double>(input.at(ic, static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
            }
          }
        }
        out.data[(oc * out.height + oy) * out.width + ox] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

std::vector<double> ScoreMatrix::column(std::size_t col) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, col);
  return out;
}

ScoreMatrix channel_scores(const WeightTensor& weights, unsigned stride, unsigned padding,
                           std::span<const FeatureMap> images) {
  if (images.empty()) throw Error(ErrorCode::InvalidConfig, "at least one calibration input is required");
  if (weights.shape.size() != 4) throw Error(ErrorCode::InvalidLayer, weights.name + " is not a rank-4 tensor");
  ScoreMatrix scores;
  scores.rows = images.size();
  scores.cols = weights.shape[0];
  scores.values.assign(scores.rows * scores.cols, 0.0);
  parallel_for(images.size(), [&](std::size_t g) {
    const FeatureMap out = conv_forward(images[g], weights, stride, padding);
    const std::size_t plane = out.height * out.width;
    for (std::size_t l = 0; l < out.channels; ++l) {
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += out.data[l * plane + i];
      scores.values[g * scores.cols + l] = sum / static_cast<double>(plane);
    }
  });
  return scores;
}

namespace {

using boost::multiprecision::cpp_int;

// Exact test of m*(value - lo) >= k*(hi - lo) on the dyadic expansions.
bool at_or_above_edge(double value, double lo, double hi, std::size_t m, std::size_t k) {
  constexpr int kMantBits = std::numeric_limits<double>::digits;
  int e_min = std::numeric_limits<int>::max();
  const double parts[] = {value, lo, hi};
  for (double x : parts) {
    if (x == 0.0) continue;
    int e = 0;
    std::frexp(x, &e);
    e_min = std::min(e_min, e - kMantBits);
  }
  if (e_min == std::numeric_limits<int>::max()) return true;
  const auto as_int = [e_min](double x) {
    if (x == 0.0) return cpp_int{0};
    int e = 0;
    const double frac = std::frexp(x, &e);
    cpp_int mant = static_cast<std::int64_t>(std::ldexp(frac, kMantBits));
    return cpp_int{mant << (e - kMantBits - e_min)};
  };
  const cpp_int v = as_int(value);
  const cpp_int l = as_int(lo);
  const cpp_int h = as_int(hi);
  return cpp_int{m} * (v - l) >= cpp_int{k} * (h - l);
}

}  // namespace

std::size_t bin_index(double value, double lo, double hi, std::size_t m) {
  if (m <= 1 || !(hi > lo)) return 0;
  const double scaled = (value - lo) * static_cast<double>(m) / (hi - lo);
  if (!(scaled > 0.0)) return 0;
  auto bin = std::min(static_cast<std::size_t>(std::floor(scaled)), m - 1);
  const double edge = std::round(scaled);
  if (edge >= 1.0 && edge <= static_cast<double>(m - 1) && std::abs(scaled - edge) < 1e-6) {
    const auto k = static_cast<std::size_t>(edge);
    bin = at_or_above_edge(value, lo, hi, m, k) ? k : k - 1;
  }
  return bin;
}

namespace {

std::vector<std::size_t> bin_counts(std::span<const double> column, std::size_t m) {
  const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  std::vector<std::size_t> counts(m, 0);
  for (double v : column) ++counts[bin_index(v, *lo_it, *hi_it, m)];
  return counts;
}

}  // namespace

std::size_t bin_count_search(std::span<const double> column) {
  if (column.empty()) return 1;
  const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  if (!(*hi_it > *lo_it)) return 1;
  for (std::size_t m = column.size(); m > 1; --m) {
    const auto counts = bin_counts(column, m);
    if (std::find(counts.begin(), counts.end(), std::size_t{0}) == counts.end()) return m;
  }
  return 1;
}

double channel_entropy(std::span<const double> column, std::size_t m) {
  if (m == 0 || column.empty()) throw Error(ErrorCode::EmptyBin, "entropy needs at least one value and one bin");
  const auto counts = bin_counts(column, m);
  if (std::find(counts.begin(), counts.end(), std::size_t{0}) != counts.end()) {
    throw Error(ErrorCode::EmptyBin, std::to_string(m) + " bins leave a bin empty");
  }
  return histogram_entropy(counts);
}

ChannelRank rank_channels(const ScoreMatrix& scores) {
  ChannelRank rank;
  rank.entropies.resize(scores.cols);
  rank.bin_counts.resize(scores.cols);
  for (std::size_t l = 0; l < scores.cols; ++l) {
    const auto column = scores.column(l);
    rank.bin_counts[l] = bin_count_search(column);
    rank.entropies[l] = channel_entropy(column, rank.bin_counts[l]);
  }
  // Every column holds the same count, so entropy falls as prod(n^n) grows.
  std::vector<cpp_int> mass(scores.cols);
  for (std::size_t l = 0; l < scores.cols; ++l) {
    mass[l] = 1;
    for (std::size_t n : bin_counts(scores.column(l), rank.bin_counts[l])) {
      mass[l] *= boost::multiprecision::pow(cpp_int{n}, static_cast<unsigned>(n));
    }
  }
  rank.order.resize(scores.cols);
  std::iota(rank.order.begin(), rank.order.end(), 0u);
  std::stable_sort(rank.order.begin(), rank.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return mass[a] > mass[b]; });
  return rank;
}

std::vector<std::uint32_t> rank_channels_by_weight_variance(const WeightTensor& weights) {
  if (weights.shape.size() != 4) throw Error(ErrorCode::InvalidLayer, weights.name + " is not a rank-4 tensor");
  const std::size_t d = weights.shape[0];
  const std::size_t per = weights.element_count() / std::max<std::size_t>(d, 1);
  std::vector<double> variance(d, 0.0);
  for (std::size_t l = 0; l < d; ++l) {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < per; ++i) {
      const float w = weights.data[l * per + i];
      if (!std::isfinite(w)) continue;
      const double a = std::fabs(static_cast<double>(w));
      sum += a;
      sum_sq += a * a;
      ++n;
    }
    if (n > 0) {
      const double mean = sum / static_cast<double>(n);
      variance[l] = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    }
  }
  std::vector<std::uint32_t> order(d);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return variance[a] < variance[b]; });
  return order;
}

std::vector<FeatureMap> calibration_inputs(const ModelContainer& calibration, std::size_t layer_index) {
  const std::string scoped = "L" + std::to_string(layer_index) + "/input_";
  std::vector<FeatureMap> out;
  for (const auto& t : calibration.tensors) {
    if (t.name.starts_with(scoped)) out.push_back(as_feature_map(t));
  }
  if (!out.empty()) return out;
  for (const auto& t : calibration.tensors) {
    if (t.name.starts_with("input_")) out.push_back(as_feature_map(t));
  }
  return out;
}

}  // namespace nnrw
