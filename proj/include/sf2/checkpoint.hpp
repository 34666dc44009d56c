// Copyright 2026 The sf2lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SF2_CHECKPOINT_HPP
#define SF2_CHECKPOINT_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sf2/error.hpp"
#include "sf2/model.hpp"
#include "sf2/rng.hpp"

namespace sf2 {

// Binary layout, all integers little-endian u64 unless noted:
//   magic "SF2LABCK" | u32 version | config_hash | epoch | rng key | rng counter
//   | loss kind (len + bytes) | config text (len + bytes)
//   | param count | per param: name (len + bytes), u8 flags, rows, cols, f64 payload
//   | buffer count | per buffer: rows, cols, f64 payload
inline constexpr std::array<char, 8> kCheckpointMagic = {'S', 'F', '2', 'L', 'A', 'B', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;
  std::uint64_t config_hash = 0;
  std::uint64_t epoch = 0;
  Rng rng;
  Model<double> model;
  Grads<double> velocity;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.config_text == b.config_text && a.config_hash == b.config_hash &&
           a.epoch == b.epoch && a.rng == b.rng && a.model.kind() == b.model.kind() &&
           a.model.params() == b.model.params() && a.velocity == b.velocity;
  }
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes_.append(s);
  }
  void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  void matrix(const Matrix<double>& m) {
    u64(m.rows());
    u64(m.cols());
    for (double v : m.flat()) f64(v);
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Matrix<double> matrix() {
    const auto rows = u64();
    const auto cols = u64();
    if (cols != 0 && rows > (bytes_.size() - pos_) / 8 / cols)
      fail(ErrorKind::ParseError, "checkpoint: matrix shape exceeds payload");
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = f64();
    return Matrix<double>(rows, cols, std::move(data));
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) {
    if (n > bytes_.size() - pos_)
      fail(ErrorKind::ParseError, "checkpoint: truncated at byte offset " + std::to_string(pos_));
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  w.u64(ck.config_hash);
  w.u64(ck.epoch);
  w.u64(ck.rng.key());
  w.u64(ck.rng.counter());
  w.str(std::string(to_string(ck.model.kind())));
  w.str(ck.config_text);
  const auto& params = ck.model.params();
  w.u64(params.size());
  for (const auto& p : params) {
    w.str(p.name);
    w.u8(static_cast<std::uint8_t>((p.unit_rows ? 1 : 0) | (p.positive ? 2 : 0)));
    w.matrix(p.value);
  }
  w.u64(ck.velocity.size());
  for (const auto& v : ck.velocity) w.matrix(v);
  return w.bytes();
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kCheckpointMagic.size() ||
      std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0)
    fail(ErrorKind::ParseError, "checkpoint: bad magic bytes");
  detail::ByteReader r(bytes);
  for (std::size_t i = 0; i < kCheckpointMagic.size(); ++i) r.u8();
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    fail(ErrorKind::ParseError, "checkpoint: unsupported format version " + std::to_string(version));
  Checkpoint ck;
  ck.config_hash = r.u64();
  ck.epoch = r.u64();
  const auto key = r.u64();
  const auto counter = r.u64();
  ck.rng = Rng(key, counter);
  const LossKind kind = parse_loss_kind(r.str());
  ck.config_text = r.str();
  std::vector<Param<double>> params(r.u64());
  for (auto& p : params) {
    p.name = r.str();
    const auto flags = r.u8();
    p.unit_rows = flags & 1;
    p.positive = flags & 2;
    p.value = r.matrix();
  }
  ck.velocity.resize(r.u64());
  for (auto& v : ck.velocity) v = r.matrix();
  if (!r.at_end()) fail(ErrorKind::ParseError, "checkpoint: trailing bytes");
  ck.model = Model<double>::from_params(kind, std::move(params));
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  const std::string bytes = encode_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "failed writing " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace sf2

#endif  // SF2_CHECKPOINT_HPP
