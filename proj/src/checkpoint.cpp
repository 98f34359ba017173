#include "gdqn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gdqn/error.hpp"

namespace gdqn {
namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;
// Sanity bound so a corrupt header cannot request absurd allocations.
constexpr std::uint64_t kMaxDim = 1u << 24;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  double take_f64(const char* what) { return std::bit_cast<double>(take(8, what)); }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_net(const DenseNet& net) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + kMagicSize);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layer_dims.size()));
  for (std::size_t d : net.layer_dims) put_u64(out, d);
  for (const auto& layer : net.layers) {
    for (double w : layer.weights) put_u64(out, std::bit_cast<std::uint64_t>(w));
    for (double b : layer.biases) put_u64(out, std::bit_cast<std::uint64_t>(b));
  }
  return out;
}

DenseNet decode_net(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagicSize ||
      std::memcmp(bytes.data(), kCheckpointMagic, kMagicSize) != 0) {
    throw ParseError("bad checkpoint magic", 0);
  }
  Reader in(bytes);
  in.take(kMagicSize, "magic");
  const std::size_t version_at = in.pos();
  const auto version = in.take(4, "version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::size_t count_at = in.pos();
  const auto n_dims = in.take(4, "dimension count");
  if (n_dims < 2 || n_dims > 64) {
    throw ParseError("implausible layer count " + std::to_string(n_dims), count_at);
  }
  DenseNet net;
  for (std::uint64_t i = 0; i < n_dims; ++i) {
    const std::size_t at = in.pos();
    const auto d = in.take(8, "layer dimension");
    if (d == 0 || d > kMaxDim) throw ParseError("invalid layer dimension", at);
    net.layer_dims.push_back(static_cast<std::size_t>(d));
  }
  for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
    LayerParams layer;
    layer.cols = net.layer_dims[l];
    layer.rows = net.layer_dims[l + 1];
    const std::size_t needed = (layer.rows * layer.cols + layer.rows) * 8;
    if (in.remaining() < needed) {
      throw ParseError("truncated checkpoint while reading layer " + std::to_string(l) +
                           " parameters",
                       in.pos());
    }
    layer.weights.resize(layer.rows * layer.cols);
    layer.biases.resize(layer.rows);
    for (double& w : layer.weights) {
      const std::size_t at = in.pos();
      w = in.take_f64("weight");
      if (!std::isfinite(w)) throw ParseError("non-finite weight", at);
    }
    for (double& b : layer.biases) {
      const std::size_t at = in.pos();
      b = in.take_f64("bias");
      if (!std::isfinite(b)) throw ParseError("non-finite bias", at);
    }
    net.layers.push_back(std::move(layer));
  }
  if (in.remaining() != 0) throw ParseError("trailing bytes after checkpoint", in.pos());
  return net;
}

void write_net_file(const std::string& path, const DenseNet& net) {
  const auto bytes = encode_net(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

DenseNet read_net_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_net(bytes);
}

}  // namespace gdqn
