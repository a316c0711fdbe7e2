/**
 * Copyright 2026 The Retina Screening Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef RETINA_TRAIN_CHECKPOINT_HPP_
#define RETINA_TRAIN_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "retina/error.hpp"
#include "retina/train/state.hpp"

// Container layout, all integers little-endian:
//
//   "RDRC"  u32 version  u64 checksum (FNV-1a 64 of everything that follows)
//   str     network descriptor (UTF-8)
//   u64 n   n x tensor record                      parameters
//   u64 n   n x tensor record   u64 step           Adam moments (m then v)
//   str     generator state
//   u64     epoch counter
//   u64 n   n x str                                epoch records
//
// str = u64 length + bytes. tensor record = str name, u8 rank, rank x u64
// dims, raw float32 values. An epoch record's bytes are u64 epoch followed
// by four float64: train kappa, validation kappa, train loss, validation
// accuracy.

namespace retina::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'R', 'D', 'R', 'C'};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

class Writer {
 public:
  template <class T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void str(std::string_view s) {
    pod<std::uint64_t>(s.size());
    out_.append(s);
  }
  void tensor(const std::string& name, const nnet::Tensor<float>& t) {
    str(name);
    pod<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (const auto d : t.shape()) pod<std::uint64_t>(d);
    out_.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
  }
  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : in_(bytes) {}

  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  nnet::Tensor<float> tensor(std::string* name) {
    *name = str();
    const auto rank = pod<std::uint8_t>();
    nnet::Shape shape;
    std::uint64_t count = rank > 0 ? 1 : 0;
    for (int i = 0; i < rank; ++i) {
      shape.push_back(pod<std::uint64_t>());
      if (shape.back() == 0 || count > (in_.size() / sizeof(float)) / shape.back()) {
        fail(ErrorKind::CorruptCheckpoint, "implausible tensor shape for " + *name);
      }
      count *= shape.back();
    }
    need(count * sizeof(float));
    nnet::Tensor<float> t(shape);
    std::memcpy(t.data(), in_.data() + pos_, count * sizeof(float));
    pos_ += count * sizeof(float);
    return t;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) fail(ErrorKind::CorruptCheckpoint, "payload ends early");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const TrainState& state) {
  detail::Writer w;
  w.str(nnet::describe(state.spec));

  std::uint64_t n = 0;
  state.params.for_each([&](const std::string&, const nnet::Tensor<float>&, bool) { ++n; });
  w.pod(n);
  state.params.for_each([&](const std::string& name, const nnet::Tensor<float>& t, bool) { w.tensor(name, t); });

  w.pod<std::uint64_t>(state.adam.m.size() + state.adam.v.size());
  for (std::size_t i = 0; i < state.adam.m.size(); ++i) w.tensor("adam.m." + std::to_string(i), state.adam.m[i]);
  for (std::size_t i = 0; i < state.adam.v.size(); ++i) w.tensor("adam.v." + std::to_string(i), state.adam.v[i]);
  w.pod<std::uint64_t>(state.adam.step);

  w.str(state.rng.state());
  w.pod<std::uint64_t>(state.epoch);
  w.pod<std::uint64_t>(state.history.size());
  for (const auto& r : state.history) {
    detail::Writer rec;
    rec.pod<std::uint64_t>(r.epoch);
    rec.pod(r.train_kappa);
    rec.pod(r.val_kappa);
    rec.pod(r.train_loss);
    rec.pod(r.val_accuracy);
    w.str(rec.bytes());
  }

  std::string file(kCheckpointMagic, 4);
  detail::Writer header;
  header.pod(kCheckpointVersion);
  header.pod(fnv1a64(w.bytes()));
  return file + header.bytes() + w.bytes();
}

inline TrainState decode_checkpoint(std::string_view file) {
  constexpr std::size_t header = 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (file.size() < header || file.substr(0, 4) != std::string_view(kCheckpointMagic, 4)) {
    fail(ErrorKind::CorruptCheckpoint, "not a checkpoint (bad magic or too short)");
  }
  detail::Reader head(file.substr(4, header - 4));
  const auto version = head.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                         std::to_string(kCheckpointVersion));
  }
  const auto checksum = head.pod<std::uint64_t>();
  const std::string_view payload = file.substr(header);
  if (fnv1a64(payload) != checksum) fail(ErrorKind::CorruptCheckpoint, "checksum mismatch");

  detail::Reader r(payload);
  TrainState state;
  state.spec = nnet::parse_descriptor(r.str());
  try {
    nnet::shape_chain(state.spec);
  } catch (const Error& e) {
    fail(ErrorKind::CorruptCheckpoint, std::string("invalid network: ") + e.what());
  }
  Rng scratch;
  state.params = nnet::init_params<float>(state.spec, scratch);

  std::vector<std::pair<std::string, nnet::Tensor<float>*>> slots;
  state.params.for_each([&](const std::string& name, nnet::Tensor<float>& t, bool) { slots.emplace_back(name, &t); });
  const auto count = r.pod<std::uint64_t>();
  if (count != slots.size()) fail(ErrorKind::CorruptCheckpoint, "parameter count does not match network");
  for (auto& [name, target] : slots) {
    std::string stored;
    nnet::Tensor<float> t = r.tensor(&stored);
    if (stored != name || t.shape() != target->shape()) {
      fail(ErrorKind::CorruptCheckpoint, "unexpected tensor " + stored + " (wanted " + name + ")");
    }
    *target = std::move(t);
  }

  const auto moments = r.pod<std::uint64_t>();
  if (moments % 2 != 0) fail(ErrorKind::CorruptCheckpoint, "odd number of Adam moment tensors");
  std::string name;
  for (std::uint64_t i = 0; i < moments / 2; ++i) state.adam.m.push_back(r.tensor(&name));
  for (std::uint64_t i = 0; i < moments / 2; ++i) state.adam.v.push_back(r.tensor(&name));
  state.adam.step = r.pod<std::uint64_t>();

  state.rng.restore(r.str());
  state.epoch = r.pod<std::uint64_t>();
  const auto records = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < records; ++i) {
    const std::string bytes = r.str();
    detail::Reader rec(bytes);
    EpochRecord e;
    e.epoch = rec.pod<std::uint64_t>();
    e.train_kappa = rec.pod<double>();
    e.val_kappa = rec.pod<double>();
    e.train_loss = rec.pod<double>();
    e.val_accuracy = rec.pod<double>();
    state.history.push_back(e);
  }
  if (!r.done()) fail(ErrorKind::CorruptCheckpoint, "trailing bytes after payload");
  return state;
}

/// Writes through a temporary file and renames, so a crash never leaves a
/// half-written checkpoint under the final name.
inline void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(state);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace retina::train

#endif  // RETINA_TRAIN_CHECKPOINT_HPP_
