// SPDX-License-Identifier: Apache-2.0
#include "strokesense/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace strokesense::nn {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("checkpoint truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params, const OptState* opt) {
  const ModelConfig& c = params.config;
  Writer w;
  w.bytes("SSNN", 4);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.num_classes));
  w.u8(static_cast<std::uint8_t>((c.extra_dense ? 1 : 0) | (c.hard_sigmoid_everywhere ? 2 : 0) |
                                 (opt ? 4 : 0)));
  w.u32(static_cast<std::uint32_t>(c.input_dim));
  w.u32(static_cast<std::uint32_t>(c.lstm1_units));
  w.u32(static_cast<std::uint32_t>(c.lstm2_units));
  w.u32(static_cast<std::uint32_t>(c.dense_units));
  for (const auto& t : params.tensors()) {
    for (double x : t) w.f64(x);
  }
  if (opt) {
    if (!(opt->v.config == c)) throw std::invalid_argument("optimizer state does not match model");
    w.f64(opt->hyper.learning_rate);
    w.f64(opt->hyper.rho);
    w.f64(opt->hyper.epsilon);
    for (const auto& t : opt->v.tensors()) {
      for (double x : t) w.f64(x);
    }
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes, const ModelConfig* expected) {
  Reader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), "SSNN", 4) != 0) throw DataError("not a checkpoint (bad magic)");
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  c.num_classes = static_cast<int>(r.u32());
  const std::uint8_t flags = r.u8();
  if (flags & ~0x07u) throw DataError("unknown checkpoint flags");
  c.extra_dense = flags & 1;
  c.hard_sigmoid_everywhere = flags & 2;
  c.input_dim = static_cast<int>(r.u32());
  c.lstm1_units = static_cast<int>(r.u32());
  c.lstm2_units = static_cast<int>(r.u32());
  c.dense_units = static_cast<int>(r.u32());
  if (c.num_classes < 2 || c.num_classes > 1 << 16 || c.input_dim < 1 || c.input_dim > 1 << 16 ||
      c.lstm1_units < 1 || c.lstm1_units > 1 << 16 || c.lstm2_units < 1 ||
      c.lstm2_units > 1 << 16 || c.dense_units < 1 || c.dense_units > 1 << 16) {
    throw DataError("checkpoint dimensions out of range");
  }
  if (expected && !(*expected == c)) throw DataError("checkpoint dimensions do not match model");

  const auto d = static_cast<std::size_t>(c.input_dim);
  const auto h1 = static_cast<std::size_t>(c.lstm1_units);
  const auto h2 = static_cast<std::size_t>(c.lstm2_units);
  const auto du = static_cast<std::size_t>(c.dense_units);
  const auto nc = static_cast<std::size_t>(c.num_classes);
  const std::size_t count = 4 * h1 * (d + h1 + 1) + 4 * h2 * (h1 + h2 + 1) + du * (h2 + 1) +
                            (c.extra_dense ? du * (du + 1) : 0) + nc * (du + 1);
  if (r.remaining() < 8 * count) throw DataError("checkpoint truncated");

  Checkpoint ck{ModelParams::zeros(c), std::nullopt};
  for (auto t : ck.params.tensors()) {
    for (double& x : t) x = r.f64();
  }
  if (flags & 4) {
    OptState opt{ModelParams::zeros(c), {}};
    opt.hyper.learning_rate = r.f64();
    opt.hyper.rho = r.f64();
    opt.hyper.epsilon = r.f64();
    for (auto t : opt.v.tensors()) {
      for (double& x : t) x = r.f64();
    }
    ck.opt = std::move(opt);
  }
  if (!r.done()) throw DataError("trailing bytes after checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptState* opt) {
  const auto bytes = serialize_checkpoint(params, opt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected);
}

}  // namespace strokesense::nn
