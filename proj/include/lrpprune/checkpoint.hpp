#pragma once

// Binary network checkpoints.
//
// Layout (all integers little-endian, reals IEEE-754 binary64):
//   magic      8 bytes  "LRPPNET\0"
//   version    u32      kCheckpointVersion
//   mode       u8       0 = train, 1 = eval
//   n_layers   u32
//   per layer: kind u8 (0 dense, 1 relu, 2 dropout), fan_in u64, fan_out u64, dropout_p f64
//   n_dense    u32
//   per dense: rows u64, cols u64, weights f64[rows*cols] row-major,
//              bias f64[rows], neuron_ids u64[rows]
//   checksum   u64      FNV-1a over every preceding byte

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lrpprune/error.hpp"
#include "lrpprune/network.hpp"

namespace lrpprune {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic{'L', 'R', 'P', 'P', 'N', 'E', 'T', '\0'};

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

class ByteWriter {
 public:
  template <typename UInt>
  void put_uint(UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void put_real(double v) { put_uint(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename UInt>
  UInt get_uint() {
    need(sizeof(UInt));
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i)
      v |= static_cast<UInt>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(UInt);
    return v;
  }
  double get_real() { return std::bit_cast<double>(get_uint<std::uint64_t>()); }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("truncated checkpoint");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize(const Network& net) {
  detail::ByteWriter w;
  w.put_bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.put_uint<std::uint32_t>(kCheckpointVersion);
  w.put_uint<std::uint8_t>(net.mode() == Mode::train ? 0 : 1);
  w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    w.put_uint<std::uint8_t>(static_cast<std::uint8_t>(l.kind));
    w.put_uint<std::uint64_t>(l.fan_in);
    w.put_uint<std::uint64_t>(l.fan_out);
    w.put_real(l.dropout_p);
  }
  w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(net.num_dense()));
  for (std::size_t d = 0; d < net.num_dense(); ++d) {
    const auto& p = net.dense(d);
    w.put_uint<std::uint64_t>(static_cast<std::uint64_t>(p.weights.rows()));
    w.put_uint<std::uint64_t>(static_cast<std::uint64_t>(p.weights.cols()));
    for (Index r = 0; r < p.weights.rows(); ++r)
      for (Index c = 0; c < p.weights.cols(); ++c) w.put_real(p.weights(r, c));
    for (Index r = 0; r < p.bias.size(); ++r) w.put_real(p.bias(r));
    for (auto id : p.neuron_ids) w.put_uint<std::uint64_t>(id);
  }
  w.put_uint<std::uint64_t>(fnv1a(w.bytes()));
  return w.bytes();
}

inline Network deserialize(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.get_bytes(kCheckpointMagic.size()) != std::string_view(kCheckpointMagic.data(), kCheckpointMagic.size()))
    throw FormatError("not a network checkpoint (bad magic)");
  const auto version = r.get_uint<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto mode = r.get_uint<std::uint8_t>();
  if (mode > 1) throw FormatError("bad mode byte");
  const auto n_layers = r.get_uint<std::uint32_t>();
  std::vector<LayerSpec> layers;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const auto kind = r.get_uint<std::uint8_t>();
    if (kind > 2) throw FormatError("bad layer kind " + std::to_string(kind));
    l.kind = static_cast<LayerKind>(kind);
    l.fan_in = r.get_uint<std::uint64_t>();
    l.fan_out = r.get_uint<std::uint64_t>();
    l.dropout_p = r.get_real();
    layers.push_back(l);
  }
  const auto n_dense = r.get_uint<std::uint32_t>();
  std::vector<DenseParams> dense(n_dense);
  for (auto& p : dense) {
    const auto rows = r.get_uint<std::uint64_t>();
    const auto cols = r.get_uint<std::uint64_t>();
    // 8 bytes per weight, bias, and id.
    if (rows == 0 || cols == 0 || rows > r.remaining() / 8 || cols > r.remaining() / 8 / rows)
      throw FormatError("implausible dense layer shape");
    p.weights.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < p.weights.rows(); ++i)
      for (Index j = 0; j < p.weights.cols(); ++j) p.weights(i, j) = r.get_real();
    p.bias.resize(static_cast<Index>(rows));
    for (Index i = 0; i < p.bias.size(); ++i) p.bias(i) = r.get_real();
    p.neuron_ids.resize(rows);
    for (auto& id : p.neuron_ids) id = r.get_uint<std::uint64_t>();
  }
  const auto body = r.position();
  const auto stored = r.get_uint<std::uint64_t>();
  if (stored != fnv1a(bytes.substr(0, body))) throw FormatError("checkpoint checksum mismatch");
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");
  Network net(std::move(layers), std::move(dense));
  net.set_mode(mode == 0 ? Mode::train : Mode::eval);
  return net;
}

inline void save_checkpoint(const std::string& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  const auto bytes = serialize(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path);
}

inline Network load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace lrpprune
