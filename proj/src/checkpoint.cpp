#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dts/model.hpp"

namespace dts {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    at_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    at_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::string_view take(std::size_t n) {
    need(n);
    const auto out = bytes_.substr(at_, n);
    at_ += n;
    return out;
  }

  bool done() const { return at_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - at_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(at_));
  }

  std::string_view bytes_;
  std::size_t at_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Mlp& model) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(model.layer_sizes().size()));
  for (const int s : model.layer_sizes()) put_u32(out, static_cast<std::uint32_t>(s));
  for (const auto& layer : model.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) put_f64(out, layer.weights(r, c));
    }
    for (Eigen::Index c = 0; c < layer.bias.size(); ++c) put_f64(out, layer.bias(c));
  }
  return out;
}

Mlp deserialize_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("not a model checkpoint (bad magic bytes)");
  }
  in.take(4);
  const auto version = in.u32();
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto count = in.u32();
  if (count < 2 || count > 1024) throw CheckpointError("implausible layer count " + std::to_string(count));
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto s = in.u32();
    if (s < 1 || s > (1U << 24)) throw CheckpointError("implausible layer size " + std::to_string(s));
    sizes.push_back(static_cast<int>(s));
  }
  Mlp model(sizes);
  for (auto& layer : model.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = in.f64();
    }
    for (Eigen::Index c = 0; c < layer.bias.size(); ++c) layer.bias(c) = in.f64();
  }
  if (!in.done()) throw CheckpointError("trailing bytes after checkpoint payload");
  for (const auto& layer : model.layers()) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) throw CheckpointError("checkpoint holds non-finite values");
  }
  return model;
}

void save_checkpoint(const Mlp& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  const std::string bytes = serialize_checkpoint(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace dts
