#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nnrw/bits.hpp"
#include "nnrw/container.hpp"
#include "nnrw/protocol.hpp"

namespace nnrw::testing {

using Rng = std::mt19937_64;

/// Weight population of a synthetic conv layer.
struct WeightMix {
  double gaussian_sigma = 0.05;
  std::size_t gaussian_cap = 400;  // at most this many N(0, sigma) draws per layer
  std::size_t zeros = 2;
  std::size_t subnormals = 2;
  std::size_t specials = 0;  // NaN / +-inf
};

/// Exact dyadic value +-(2j+1)/128, j in [0, 3] with probabilities 0.4 / 0.3 / 0.2 / 0.1,
/// as produced by a 3-bit midrise quantizer.
float quantized_exact(Rng& rng);

/// d x c x k x k weights: up to `gaussian_cap` Gaussian draws, the given number of
/// zeros / subnormals / specials, quantized exacts elsewhere; positions shuffled.
WeightTensor conv_weights(Rng& rng, const std::string& name, std::uint32_t d, std::uint32_t c, std::uint32_t k,
                          const WeightMix& mix = {});

struct ModelShape {
  std::size_t min_layers = 2;
  std::size_t max_layers = 4;
  std::uint32_t min_channels = 4;
  std::uint32_t max_channels = 64;
  std::uint32_t min_in_channels = 8;
  std::uint32_t max_in_channels = 32;
  std::uint32_t kernel = 3;
  bool extra_tensor = true;  // one non-layer tensor (e.g. a bias)
  WeightMix mix;
};

/// Default shape with the layer count fixed and the output channel count capped.
ModelShape with_layers(std::size_t layers, std::uint32_t max_channels = 64);

/// Random model of conv layers with independent channel counts.
ModelContainer random_model(Rng& rng, const ModelShape& shape = {});

BitString random_bits(Rng& rng, std::size_t count);

/// Whether the plan leaves room for the payload header, the LSB backup and
/// `message_bits` of message.
bool has_room(const LayerPlan& plan, std::size_t message_bits = 0);

/// Draws random models until the last layer has room for `message_bits` with
/// default settings.
ModelContainer sealable_model(Rng& rng, std::size_t message_bits = 256, const ModelShape& shape = {});

/// Flips bit `bit` (0 = LSB of byte 0) of a byte buffer.
void flip_bit(std::vector<std::uint8_t>& bytes, std::size_t bit);

}  // namespace nnrw::testing
