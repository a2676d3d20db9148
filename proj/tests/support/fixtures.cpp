#include "fixtures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "nnrw/protocol.hpp"

namespace nnrw::testing {

float quantized_exact(Rng& rng) {
  std::discrete_distribution<int> level({0.4, 0.3, 0.2, 0.1});
  std::bernoulli_distribution negative(0.5);
  const float v = static_cast<float>(2 * level(rng) + 1) / 128.0f;
  return negative(rng) ? -v : v;
}

WeightTensor conv_weights(Rng& rng, const std::string& name, std::uint32_t d, std::uint32_t c, std::uint32_t k,
                          const WeightMix& mix) {
  WeightTensor t;
  t.name = name;
  t.shape = {d, c, k, k};
  const std::size_t n = std::size_t{d} * c * k * k;
  t.data.reserve(n);

  std::normal_distribution<float> gauss(0.0f, static_cast<float>(mix.gaussian_sigma));
  std::uniform_int_distribution<std::uint32_t> sub_mantissa(1, 0x7FFFFF);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t i = 0; i < mix.zeros && t.data.size() < n; ++i) t.data.push_back(sign(rng) ? -0.0f : 0.0f);
  for (std::size_t i = 0; i < mix.subnormals && t.data.size() < n; ++i) {
    const std::uint32_t bits = sub_mantissa(rng) | (sign(rng) ? 0x80000000u : 0u);
    t.data.push_back(std::bit_cast<float>(bits));
  }
  const float specials[] = {std::numeric_limits<float>::quiet_NaN(), std::numeric_limits<float>::infinity(),
                            -std::numeric_limits<float>::infinity()};
  for (std::size_t i = 0; i < mix.specials && t.data.size() < n; ++i) t.data.push_back(specials[i % 3]);
  const std::size_t gaussian = std::min(mix.gaussian_cap, (n - t.data.size()) / 3);
  for (std::size_t i = 0; i < gaussian; ++i) {
    float w = 0.0f;
    while (w == 0.0f) w = gauss(rng);
    t.data.push_back(w);
  }
  while (t.data.size() < n) t.data.push_back(quantized_exact(rng));
  std::shuffle(t.data.begin(), t.data.end(), rng);
  return t;
}

ModelShape with_layers(std::size_t layers, std::uint32_t max_channels) {
  ModelShape shape;
  shape.min_layers = layers;
  shape.max_layers = layers;
  shape.max_channels = max_channels;
  return shape;
}

ModelContainer random_model(Rng& rng, const ModelShape& shape) {
  std::uniform_int_distribution<std::size_t> layer_count(shape.min_layers, shape.max_layers);
  std::uniform_int_distribution<std::uint32_t> channels(shape.min_channels, shape.max_channels);
  std::uniform_int_distribution<std::uint32_t> in_channels(shape.min_in_channels, shape.max_in_channels);

  ModelContainer m;
  const std::size_t layers = layer_count(rng);
  for (std::size_t i = 0; i < layers; ++i) {
    const std::uint32_t k = shape.kernel;
    const std::string name = "conv" + std::to_string(i) + ".weight";
    m.tensors.push_back(conv_weights(rng, name, channels(rng), in_channels(rng), k, shape.mix));
    LayerSpec spec;
    spec.layer_index = static_cast<std::uint32_t>(i);
    spec.weight_tensor = name;
    spec.stride = 1;
    spec.padding = static_cast<std::uint16_t>(k / 2);
    m.manifest.push_back(spec);
  }
  if (shape.extra_tensor) {
    WeightTensor bias;
    bias.name = "head.bias";
    bias.shape = {8};
    std::normal_distribution<float> gauss(0.0f, 0.1f);
    for (int i = 0; i < 8; ++i) bias.data.push_back(gauss(rng));
    m.tensors.push_back(std::move(bias));
  }
  return m;
}

BitString random_bits(Rng& rng, std::size_t count) {
  std::bernoulli_distribution coin(0.5);
  BitString bits(count);
  for (auto& b : bits) b = coin(rng) ? 1 : 0;
  return bits;
}

bool has_room(const LayerPlan& plan, std::size_t message_bits) {
  return plan.hs.capacity >= kPayloadHeaderBits + plan.plan_bits + message_bits;
}

ModelContainer sealable_model(Rng& rng, std::size_t message_bits, const ModelShape& shape) {
  for (;;) {
    ModelContainer m = random_model(rng, shape);
    try {
      if (has_room(plan_layer(m, LayerConfig{}, EmbedConfig{}), message_bits)) return m;
    } catch (const Error&) {
    }
  }
}

void flip_bit(std::vector<std::uint8_t>& bytes, std::size_t bit) {
  bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
}

}  // namespace nnrw::testing
