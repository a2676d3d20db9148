#include "nnrw/container.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <unordered_set>

#include "nnrw/error.hpp"

namespace nnrw {
namespace {

constexpr std::uint8_t kMagic[4] = {'N', 'N', 'R', 'W'};
constexpr std::uint8_t kDtypeF32 = 0;
// Upper bound on elements per tensor; keeps size arithmetic well inside 64 bits.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  std::vector<std::uint8_t> take() && { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> raw(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::TruncatedFile, "container ends early");
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return raw(1)[0]; }
  std::uint16_t u16() {
    auto b = raw(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    auto b = raw(4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t shape_product(std::span<const std::uint32_t> shape) {
  std::uint64_t n = 1;
  for (std::uint32_t dim : shape) {
    if (dim == 0) throw Error(ErrorCode::InvalidShape, "zero-sized dimension");
    if (n > kMaxElements / dim) throw Error(ErrorCode::InvalidShape, "tensor too large");
    n *= dim;
  }
  return n;
}

}  // namespace

std::size_t WeightTensor::element_count() const noexcept {
  std::size_t n = 1;
  for (std::uint32_t dim : shape) n *= dim;
  return n;
}

bool WeightTensor::operator==(const WeightTensor& other) const noexcept {
  return name == other.name && shape == other.shape && data.size() == other.data.size() &&
         (data.empty() || std::memcmp(data.data(), other.data.data(), data.size() * sizeof(float)) == 0);
}

const WeightTensor* ModelContainer::find(std::string_view name) const noexcept {
  auto it = std::find_if(tensors.begin(), tensors.end(), [&](const WeightTensor& t) { return t.name == name; });
  return it == tensors.end() ? nullptr : &*it;
}

WeightTensor* ModelContainer::find(std::string_view name) noexcept {
  auto it = std::find_if(tensors.begin(), tensors.end(), [&](const WeightTensor& t) { return t.name == name; });
  return it == tensors.end() ? nullptr : &*it;
}

std::size_t ModelContainer::resolve_layer(int index) const {
  const auto count = static_cast<long>(manifest.size());
  const long resolved = index < 0 ? count + index : index;
  if (resolved < 0 || resolved >= count) {
    throw Error(ErrorCode::InvalidConfig,
                "layer " + std::to_string(index) + " out of range for " + std::to_string(count) + " layers");
  }
  return static_cast<std::size_t>(resolved);
}

const LayerSpec& ModelContainer::layer(int index) const { return manifest[resolve_layer(index)]; }

bool ModelContainer::operator==(const ModelContainer& other) const noexcept {
  return version == other.version && tensors == other.tensors && manifest == other.manifest;
}

void validate(const ModelContainer& model) {
  if (model.version != kContainerVersion) {
    throw Error(ErrorCode::VersionUnsupported, "version " + std::to_string(model.version));
  }
  if (model.tensors.size() > std::numeric_limits<std::uint32_t>::max() ||
      model.manifest.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidShape, "too many entries");
  }
  std::unordered_set<std::string_view> names;
  for (const auto& t : model.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::InvalidShape, "tensor name too long");
    }
    if (t.shape.size() > std::numeric_limits<std::uint8_t>::max()) {
      throw Error(ErrorCode::InvalidShape, "rank too large for " + t.name);
    }
    if (!names.insert(t.name).second) throw Error(ErrorCode::DuplicateTensorName, t.name);
    if (shape_product(t.shape) != t.data.size()) {
      throw Error(ErrorCode::InvalidShape, "shape does not match data length for " + t.name);
    }
  }
  if (model.tensors.size() > std::numeric_limits<std::uint16_t>::max() && !model.manifest.empty()) {
    throw Error(ErrorCode::InvalidShape, "manifest can only address the first 65535 tensors");
  }
  for (std::size_t i = 0; i < model.manifest.size(); ++i) {
    const auto& layer = model.manifest[i];
    if (layer.layer_index != i) throw Error(ErrorCode::InvalidLayer, "layer indices must be 0..L-1 in order");
    const auto* t = model.find(layer.weight_tensor);
    if (t == nullptr) throw Error(ErrorCode::ManifestDangling, layer.weight_tensor);
    if (t->shape.size() != 4) throw Error(ErrorCode::InvalidLayer, layer.weight_tensor + " is not rank 4");
    if (layer.stride == 0) throw Error(ErrorCode::InvalidLayer, "stride must be positive");
  }
}

std::vector<std::uint8_t> serialize_container(const ModelContainer& model) {
  validate(model);
  ByteWriter w;
  std::size_t data_bytes = 0;
  for (const auto& t : model.tensors) data_bytes += t.data.size() * 4;
  w.reserve(64 + data_bytes);

  w.raw(kMagic);
  w.u16(model.version);
  w.u32(static_cast<std::uint32_t>(model.tensors.size()));
  for (const auto& t : model.tensors) {
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.raw({reinterpret_cast<const std::uint8_t*>(t.name.data()), t.name.size()});
    w.u8(kDtypeF32);
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (std::uint32_t dim : t.shape) w.u32(dim);
  }
  w.u32(static_cast<std::uint32_t>(model.manifest.size()));
  for (const auto& layer : model.manifest) {
    const auto pos = std::find_if(model.tensors.begin(), model.tensors.end(),
                                  [&](const WeightTensor& t) { return t.name == layer.weight_tensor; }) -
                     model.tensors.begin();
    w.u16(static_cast<std::uint16_t>(pos));
    w.u16(layer.stride);
    w.u16(layer.padding);
  }
  for (const auto& t : model.tensors) {
    for (float value : t.data) w.u32(std::bit_cast<std::uint32_t>(value));
  }
  return std::move(w).take();
}

ModelContainer parse_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw Error(ErrorCode::BadMagic, "not an NNRW container");
  }
  ModelContainer model;
  model.version = r.u16();
  if (model.version != kContainerVersion) {
    throw Error(ErrorCode::VersionUnsupported, "version " + std::to_string(model.version));
  }
  const std::uint32_t tensor_count = r.u32();
  // Each tensor entry takes at least 4 bytes; reject absurd counts before allocating.
  if (tensor_count > r.remaining() / 4) throw Error(ErrorCode::TruncatedFile, "tensor table ends early");
  model.tensors.resize(tensor_count);
  std::uint64_t total_elements = 0;
  for (auto& t : model.tensors) {
    const std::uint16_t name_len = r.u16();
    auto name = r.raw(name_len);
    t.name.assign(reinterpret_cast<const char*>(name.data()), name.size());
    const std::uint8_t dtype = r.u8();
    if (dtype != kDtypeF32) throw Error(ErrorCode::UnsupportedDtype, "dtype " + std::to_string(dtype));
    const std::uint8_t rank = r.u8();
    t.shape.resize(rank);
    for (auto& dim : t.shape) dim = r.u32();
    total_elements += shape_product(t.shape);
    if (total_elements > kMaxElements) throw Error(ErrorCode::InvalidShape, "container too large");
  }
  const std::uint32_t layer_count = r.u32();
  if (layer_count > r.remaining() / 6) throw Error(ErrorCode::TruncatedFile, "layer table ends early");
  model.manifest.resize(layer_count);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    auto& layer = model.manifest[i];
    const std::uint16_t tensor_pos = r.u16();
    layer.layer_index = i;
    layer.stride = r.u16();
    layer.padding = r.u16();
    if (tensor_pos >= model.tensors.size()) {
      throw Error(ErrorCode::ManifestDangling, "layer " + std::to_string(i) + " names tensor #" +
                                                   std::to_string(tensor_pos));
    }
    layer.weight_tensor = model.tensors[tensor_pos].name;
  }
  if (r.remaining() < total_elements * 4) throw Error(ErrorCode::TruncatedFile, "tensor data ends early");
  for (auto& t : model.tensors) {
    t.data.resize(shape_product(t.shape));
    auto raw = r.raw(t.data.size() * 4);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                                 static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                                 static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                                 static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
      t.data[i] = std::bit_cast<float>(bits);
    }
  }
  if (r.remaining() != 0) throw Error(ErrorCode::TrailingData, std::to_string(r.remaining()) + " extra bytes");
  validate(model);
  return model;
}

Digest sha256(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  Digest out{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
    throw Error(ErrorCode::Io, "SHA-256 computation failed");
  }
  return out;
}

Digest model_digest(const ModelContainer& model) { return sha256(serialize_container(model)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

ModelContainer load_container(const std::filesystem::path& path) { return parse_container(read_file(path)); }

void save_container(const std::filesystem::path& path, const ModelContainer& model) {
  write_file(path, serialize_container(model));
}

}  // namespace nnrw
