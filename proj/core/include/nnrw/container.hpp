#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nnrw {

inline constexpr std::uint16_t kContainerVersion = 1;

/// Named f32 tensor, row-major. Weight tensors of convolution layers are d x c x k x k.
struct WeightTensor {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t element_count() const noexcept;
  bool operator==(const WeightTensor& other) const noexcept;  // bitwise on data
};

struct LayerSpec {
  std::uint32_t layer_index = 0;
  std::string weight_tensor;
  std::uint16_t stride = 1;
  std::uint16_t padding = 0;

  bool operator==(const LayerSpec&) const = default;
};

/// Ordered tensors plus a convolution-layer manifest.
///
/// Equality is bitwise on tensor data, so NaN payloads compare by pattern.
struct ModelContainer {
  std::uint16_t version = kContainerVersion;
  std::vector<WeightTensor> tensors;
  std::vector<LayerSpec> manifest;

  const WeightTensor* find(std::string_view name) const noexcept;
  WeightTensor* find(std::string_view name) noexcept;

  /// Resolves a layer position; negative values count from the end of the manifest.
  /// Throws Error{InvalidConfig} when out of range.
  const LayerSpec& layer(int index) const;
  std::size_t resolve_layer(int index) const;

  bool operator==(const ModelContainer& other) const noexcept;
};

using Digest = std::array<std::uint8_t, 32>;

/// Checks every container invariant; throws Error on the first violation.
void validate(const ModelContainer& model);

std::vector<std::uint8_t> serialize_container(const ModelContainer& model);
ModelContainer parse_container(std::span<const std::uint8_t> bytes);

/// SHA-256 over the canonical serialized bytes.
Digest model_digest(const ModelContainer& model);
Digest sha256(std::span<const std::uint8_t> bytes);

ModelContainer load_container(const std::filesystem::path& path);
void save_container(const std::filesystem::path& path, const ModelContainer& model);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace nnrw
