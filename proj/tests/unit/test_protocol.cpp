#include <doctest.h>

#include <bit>
#include <cmath>
#include <numeric>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "nnrw/channel_scorer.hpp"
#include "nnrw/protocol.hpp"

using namespace nnrw;
using testing::Rng;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Io;
}

EmbedConfig layers_config(std::initializer_list<int> layers) {
  EmbedConfig config;
  config.layers.clear();
  for (int l : layers) config.layers.push_back(LayerConfig{l, std::nullopt, std::nullopt});
  return config;
}

std::size_t capacity_of(const ModelContainer& m, const EmbedConfig& config) {
  std::size_t total = 0;
  for (const auto& l : config.layers) total += plan_layer(m, l, config).message_capacity();
  return total;
}

// Random model whose last two layers each offer `bits` message bits.
ModelContainer two_layer_capacity(Rng& rng, std::size_t bits) {
  for (;;) {
    ModelContainer m = testing::random_model(rng, testing::with_layers(3));
    try {
      const EmbedConfig config = layers_config({-1, -2});
      if (testing::has_room(plan_layer(m, config.layers[0], config), bits) &&
          testing::has_room(plan_layer(m, config.layers[1], config), bits)) {
        return m;
      }
    } catch (const Error&) {
    }
  }
}

bool bytes_outside_layers_equal(const ModelContainer& a, const ModelContainer& b, std::span<const std::string> names) {
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    if (std::find(names.begin(), names.end(), a.tensors[i].name) != names.end()) continue;
    if (!(a.tensors[i] == b.tensors[i])) return false;
  }
  return a.manifest == b.manifest;
}

double pair_unit(float w, int c) { return std::pow(10.0, decimal_exponent(w) - c); }

}  // namespace

TEST_CASE("empty message still marks and restores") {
  Rng rng(1);
  const ModelContainer m = testing::sealable_model(rng, 0);
  const EmbedResult r = embed_watermark(m, BitString{}, EmbedConfig{});
  CHECK_FALSE(r.marked == m);
  const std::vector<int> last{-1};
  const ExtractResult x = extract_watermark(r.marked, last);
  CHECK(x.message.empty());
  CHECK(x.restored == m);
  CHECK(serialize_container(x.restored) == serialize_container(m));
}

TEST_CASE("1024-bit message into the last layer of a three-layer model") {
  Rng rng(2);
  const ModelContainer m = testing::sealable_model(rng, 1024, testing::with_layers(3));
  const BitString msg = testing::random_bits(rng, 1024);
  const EmbedResult r = embed_watermark(m, msg, EmbedConfig{});
  REQUIRE(r.layers.size() == 1);
  CHECK(r.layers[0].message_bits == 1024);
  const ExtractResult x = extract_watermark(r.marked, std::vector<int>{});
  CHECK(x.message == msg);
  CHECK(x.restored == m);
}

TEST_CASE("message over capacity") {
  Rng rng(3);
  const ModelContainer m = testing::sealable_model(rng, 0);
  const EmbedConfig config;
  const std::size_t cap = capacity_of(m, config);
  CHECK_NOTHROW(embed_watermark(m, testing::random_bits(rng, cap), config));
  CHECK(code_of([&] { embed_watermark(m, testing::random_bits(rng, cap + 1), config); }) ==
        ErrorCode::CapacityExceeded);
}

TEST_CASE("unmarked models have no payload") {
  Rng rng(4);
  const ModelContainer m = testing::random_model(rng);
  const ErrorCode code = code_of([&] { extract_watermark(m, std::vector<int>{-1}); });
  CHECK((code == ErrorCode::BadMagic || code == ErrorCode::CrcMismatch || code == ErrorCode::MalformedPlan));
  CHECK(code_of([&] { extract_watermark(m, std::vector<int>{}); }) == ErrorCode::BadMagic);
}

TEST_CASE("random models round trip byte-exactly and touch only configured layers") {
  Rng rng(5);
  for (int round = 0; round < 12; ++round) {
    const ModelContainer m = two_layer_capacity(rng, 64);
    const bool multi = round % 2 == 1;
    const EmbedConfig config = multi ? layers_config({-1, -2}) : layers_config({-1});
    const std::size_t cap = capacity_of(m, config);
    const BitString msg = testing::random_bits(rng, std::uniform_int_distribution<std::size_t>(0, cap)(rng));
    const EmbedResult r = embed_watermark(m, msg, config);

    std::vector<std::string> names;
    for (const auto& l : config.layers) names.push_back(m.layer(l.layer).weight_tensor);
    CHECK(bytes_outside_layers_equal(m, r.marked, names));

    for (const auto& rep : r.layers) {
      const LayerPlan lp = plan_layer(m, LayerConfig{static_cast<int>(rep.layer_index), std::nullopt, std::nullopt}, config);
      std::vector<std::uint8_t> carrier(m.find(lp.tensor)->data.size(), 0);
      for (std::uint32_t coord : lp.host.coords) carrier[coord] = 1;
      const WeightTensor& before = *m.find(lp.tensor);
      const WeightTensor& after = *r.marked.find(lp.tensor);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < before.data.size(); ++i) {
        const float w = before.data[i], v = after.data[i];
        const std::uint32_t diff = std::bit_cast<std::uint32_t>(w) ^ std::bit_cast<std::uint32_t>(v);
        if (diff == 0) continue;
        ++changed;
        if (carrier[i]) {
          CHECK(std::abs(static_cast<double>(v) - static_cast<double>(w)) <= 2.0 * pair_unit(w, rep.digit_position));
        } else {
          CHECK(diff == 1u);
          CHECK(i < lp.plan.region);
        }
      }
      CHECK(changed == rep.modified_weights);
    }

    const ExtractResult x = extract_watermark(r.marked, std::vector<int>{});
    CHECK(x.message == msg);
    CHECK(serialize_container(x.restored) == serialize_container(m));
  }
}

TEST_CASE("multi-layer extraction is independent of layer order") {
  Rng rng(6);
  const ModelContainer m = two_layer_capacity(rng, 300);
  const EmbedConfig config = layers_config({1, 2});
  const std::size_t cap = capacity_of(m, config);
  const BitString msg = testing::random_bits(rng, cap);
  const EmbedResult r = embed_watermark(m, msg, config);
  REQUIRE(r.layers.size() == 2);
  CHECK(r.layers[0].layer_index == 1);

  const ExtractResult a = extract_watermark(r.marked, std::vector<int>{1, 2});
  const ExtractResult b = extract_watermark(r.marked, std::vector<int>{2, 1});
  CHECK(a.message == msg);
  CHECK(b.message == msg);
  CHECK(a.restored == m);
  CHECK(b.restored == m);

  // embedding order does not matter either
  const EmbedResult swapped = embed_watermark(m, msg, layers_config({2, 1}));
  CHECK(swapped.marked == r.marked);
}

TEST_CASE("embedding is deterministic") {
  Rng rng(7);
  const ModelContainer m = testing::sealable_model(rng, 200);
  const BitString msg = testing::random_bits(rng, 200);
  CHECK(serialize_container(embed_watermark(m, msg, {}).marked) ==
        serialize_container(embed_watermark(m, msg, {}).marked));
}

TEST_CASE("plans report consistent capacity") {
  Rng rng(8);
  const ModelContainer m = testing::sealable_model(rng, 0);
  const LayerPlan p = plan_layer(m, LayerConfig{}, EmbedConfig{});
  const SymbolHistogram h = build_histogram(p.host.symbols, p.host.offset);
  CHECK(p.hs.capacity == h[p.hs.peak]);
  CHECK(h[p.hs.valley] == 0);
  CHECK(p.plan_bits == plan_bit_length(p.plan));
  CHECK(p.plan.region >= p.plan_bits);
  CHECK(p.message_capacity() == p.hs.capacity - kPayloadHeaderBits - p.plan_bits);
  for (std::uint32_t coord : p.host.coords) CHECK(coord >= p.plan.region);
  CHECK(p.pair_entropies.size() == 4);
}

TEST_CASE("explicit channel count, digit position and channel order") {
  Rng rng(9);
  const ModelContainer m = testing::sealable_model(rng, 100);
  const WeightTensor& t = *m.find(m.layer(-1).weight_tensor);
  const std::size_t d = t.shape[0];

  EmbedConfig config;
  config.digit_position = 5;
  config.layers[0].channels = d;
  std::vector<std::uint32_t> order(d);
  std::iota(order.rbegin(), order.rend(), 0u);
  config.layers[0].channel_order = order;
  const LayerPlan p = plan_layer(m, config.layers[0], config);
  CHECK(p.plan.channels == d);
  CHECK(p.plan.digit_position == 5);
  CHECK(p.plan.order_prefix == order);

  const std::size_t cap = p.message_capacity();
  const BitString msg = testing::random_bits(rng, cap);
  const EmbedResult r = embed_watermark(m, msg, config);
  const ExtractResult x = extract_watermark(r.marked, std::vector<int>{-1});
  CHECK(x.message == msg);
  CHECK(x.restored == m);

  EmbedConfig bad = config;
  bad.layers[0].channels = d + 1;
  CHECK(code_of([&] { plan_layer(m, bad.layers[0], bad); }) == ErrorCode::NOutOfRange);
  bad = config;
  bad.digit_position = 6;
  CHECK(code_of([&] { plan_layer(m, bad.layers[0], bad); }) == ErrorCode::InvalidConfig);
  bad = config;
  bad.offset = 99;
  CHECK(code_of([&] { plan_layer(m, bad.layers[0], bad); }) == ErrorCode::InvalidConfig);
  bad = config;
  (*bad.layers[0].channel_order)[0] = (*bad.layers[0].channel_order)[1];
  CHECK(code_of([&] { plan_layer(m, bad.layers[0], bad); }) == ErrorCode::BadPermutation);
}

TEST_CASE("a different offset round trips") {
  Rng rng(10);
  const ModelContainer m = testing::sealable_model(rng, 0);
  EmbedConfig config;
  config.offset = 1000;
  const std::size_t cap = capacity_of(m, config);
  const BitString msg = testing::random_bits(rng, cap);
  const EmbedResult r = embed_watermark(m, msg, config);
  const ExtractResult x = extract_watermark(r.marked, std::vector<int>{});
  CHECK(x.message == msg);
  CHECK(x.restored == m);
}

TEST_CASE("calibration ranking drives the channel order") {
  Rng rng(11);
  const ModelContainer m = testing::sealable_model(rng, 0);
  const LayerSpec& spec = m.layer(-1);
  const WeightTensor& t = *m.find(spec.weight_tensor);
  auto calib = std::make_shared<ModelContainer>();
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (int i = 0; i < 8; ++i) {
    WeightTensor in{"input_" + std::to_string(i), {t.shape[1], 6, 6}, std::vector<float>(std::size_t{t.shape[1]} * 36)};
    for (auto& v : in.data) v = g(rng);
    calib->tensors.push_back(std::move(in));
  }
  EmbedConfig config;
  config.calibration = calib;
  config.layers[0].channels = t.shape[0];
  const LayerPlan p = plan_layer(m, config.layers[0], config);
  const auto images = calibration_inputs(*calib, spec.layer_index);
  const ChannelRank rank = rank_channels(channel_scores(t, spec.stride, spec.padding, images));
  CHECK(p.plan.order_prefix == rank.order);

  EmbedConfig empty_calib = config;
  empty_calib.calibration = std::make_shared<ModelContainer>();
  CHECK(code_of([&] { plan_layer(m, empty_calib.layers[0], empty_calib); }) == ErrorCode::InvalidConfig);

  const BitString msg = testing::random_bits(rng, p.message_capacity());
  const ExtractResult x = extract_watermark(embed_watermark(m, msg, config).marked, std::vector<int>{});
  CHECK(x.message == msg);
  CHECK(x.restored == m);
}

TEST_CASE("layers without usable weights or room") {
  ModelContainer zeros;
  zeros.tensors.push_back({"z", {4, 2, 3, 3}, std::vector<float>(72, 0.0f)});
  zeros.manifest.push_back({0, "z", 1, 1});
  CHECK(code_of([&] { plan_layer(zeros, LayerConfig{}, EmbedConfig{}); }) == ErrorCode::NoUsableWeights);

  Rng rng(12);
  ModelContainer tiny;
  tiny.tensors.push_back(testing::conv_weights(rng, "t", 2, 1, 3));
  tiny.manifest.push_back({0, "t", 1, 1});
  const ErrorCode code = code_of([&] { plan_layer(tiny, LayerConfig{}, EmbedConfig{}); });
  CHECK((code == ErrorCode::PlanTooLarge || code == ErrorCode::NoValley));

  ModelContainer uniform;
  WeightTensor w{"u", {64, 16, 3, 3}, std::vector<float>(9216)};
  std::uniform_real_distribution<float> u(0.01f, 1.0f);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : w.data) v = sign(rng) ? u(rng) : -u(rng);
  uniform.tensors.push_back(std::move(w));
  uniform.manifest.push_back({0, "u", 1, 1});
  EmbedConfig all_channels;
  all_channels.layers[0].channels = 64;
  CHECK(code_of([&] { plan_layer(uniform, all_channels.layers[0], all_channels); }) == ErrorCode::NoValley);
}

TEST_CASE("duplicate layers are rejected") {
  Rng rng(13);
  const ModelContainer m = testing::random_model(rng, testing::with_layers(2));
  CHECK(code_of([&] { embed_watermark(m, BitString{}, layers_config({1, -1})); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("seal and verify") {
  Rng rng(14);
  const ModelContainer m = testing::sealable_model(rng);
  const EmbedResult sealed = seal(m, EmbedConfig{});

  const VerifyReport ok = verify(sealed.marked, std::vector<int>{});
  CHECK(ok.verdict == Verdict::Intact);
  REQUIRE(ok.extracted.has_value());
  CHECK(*ok.extracted == model_digest(m));
  CHECK(ok.recomputed == ok.extracted);
  CHECK(verify_bytes(serialize_container(sealed.marked), std::vector<int>{-1}).verdict == Verdict::Intact);

  const auto record = nlohmann::json::parse(ok.to_record());
  CHECK(record["verdict"] == "INTACT");
  CHECK(record["extracted"] == to_hex(model_digest(m)));
  CHECK(record["layers"].size() == 1);
  CHECK(ok.to_text().starts_with("verdict:    INTACT\n"));

  SUBCASE("unsealed model") {
    const VerifyReport r = verify(m, std::vector<int>{});
    CHECK(r.verdict == Verdict::NotSealed);
    CHECK(nlohmann::json::parse(r.to_record())["extracted"].is_null());
  }
  SUBCASE("flipped weight bits anywhere") {
    const auto bytes = serialize_container(sealed.marked);
    std::uniform_int_distribution<std::size_t> pos(0, bytes.size() * 8 - 1);
    for (int i = 0; i < 150; ++i) {
      auto bad = bytes;
      testing::flip_bit(bad, pos(rng));
      CHECK(verify_bytes(bad, std::vector<int>{}).verdict == Verdict::Tampered);
    }
  }
  SUBCASE("an unrelated tensor zeroed") {
    ModelContainer bad = sealed.marked;
    auto& bias = bad.find("head.bias")->data;
    std::fill(bias.begin(), bias.end(), 0.0f);
    const VerifyReport r = verify(bad, std::vector<int>{});
    CHECK(r.verdict == Verdict::Tampered);
    REQUIRE(r.extracted.has_value());
    CHECK(r.extracted != r.recomputed);
  }
  SUBCASE("unparseable bytes") {
    auto bytes = serialize_container(sealed.marked);
    bytes.pop_back();
    CHECK(verify_bytes(bytes, std::vector<int>{}).verdict == Verdict::Tampered);
  }
  SUBCASE("a non-digest message is not a seal") {
    const EmbedResult marked = embed_watermark(m, testing::random_bits(rng, 100), EmbedConfig{});
    CHECK(verify(marked.marked, std::vector<int>{}).verdict == Verdict::Tampered);
  }
}

TEST_CASE("seals with different layer sets verify independently") {
  Rng rng(15);
  const ModelContainer m = two_layer_capacity(rng, 256);
  const EmbedResult a = seal(m, layers_config({-1}));
  const EmbedResult b = seal(m, layers_config({-2, -1}));
  CHECK(verify(a.marked, std::vector<int>{}).verdict == Verdict::Intact);
  CHECK(verify(b.marked, std::vector<int>{}).verdict == Verdict::Intact);
  CHECK(detect_sealed_layers(a.marked) == std::vector<int>{2});
  CHECK(detect_sealed_layers(b.marked) == std::vector<int>{1, 2});
  CHECK(verify(b.marked, std::vector<int>{1, 2}).verdict == Verdict::Intact);
  // restoring only one of two sealed layers leaves the other marked, so the digest cannot match
  CHECK(verify(b.marked, std::vector<int>{1}).verdict == Verdict::Tampered);

  // a tamper in either sealed layer is caught
  ModelContainer bad = b.marked;
  auto& w = bad.find(m.layer(1).weight_tensor)->data.back();
  w = std::bit_cast<float>(std::bit_cast<std::uint32_t>(w) ^ 0x100u);
  CHECK(verify(bad, std::vector<int>{}).verdict == Verdict::Tampered);
}

TEST_CASE("a seal needs 256 message bits per layer") {
  Rng rng(16);
  for (;;) {
    const ModelContainer m = testing::random_model(rng, testing::with_layers(2, 12));
    std::size_t cap = 0;
    try {
      cap = plan_layer(m, LayerConfig{}, EmbedConfig{}).message_capacity();
    } catch (const Error&) {
      continue;
    }
    if (cap >= 256) continue;
    CHECK(code_of([&] { seal(m, EmbedConfig{}); }) == ErrorCode::CapacityExceeded);
    break;
  }
}

TEST_CASE("digest bits are MSB first") {
  Digest d{};
  d[0] = 0x80;
  d[31] = 0x01;
  const BitString bits = digest_bits(d);
  CHECK(bits.size() == 256);
  CHECK(bits[0] == 1);
  CHECK(bits[1] == 0);
  CHECK(bits[255] == 1);
  CHECK(to_string(Verdict::Intact) == "INTACT");
  CHECK(to_string(Verdict::Tampered) == "TAMPERED");
  CHECK(to_string(Verdict::NotSealed) == "NOT_SEALED");
}
