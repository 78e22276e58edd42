//
// Copyright 2026 The fedhkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fedhkd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fedhkd/error.hpp"

namespace fedhkd {

namespace {

constexpr char kMagic[4] = {'F', 'H', 'K', 'D'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : out_(path, std::ios::binary), path_(path.string()) {
    if (!out_) throw Error("save_checkpoint: cannot open " + path_);
  }

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>(v >> (8 * i));
    out_.write(bytes, 4);
  }

  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>(bits >> (8 * i));
    out_.write(bytes, 8);
  }

  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d = 0; d < t.rank(); ++d)
      u32(static_cast<std::uint32_t>(t.dim(d)));
    for (double v : t.values()) f64(v);
  }

  void finish() {
    out_.flush();
    if (!out_) throw Error("save_checkpoint: write failed for " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_checkpoint: cannot open " + path_);
    bytes_.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<std::uint8_t>(bytes_[pos_++]))
           << (8 * i);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<std::uint8_t>(bytes_[pos_++]))
           << (8 * i);
    return std::bit_cast<double>(v);
  }

  Tensor tensor() {
    const std::uint32_t rank = u32();
    if (rank > 2)
      throw FormatError("load_checkpoint: tensor rank " +
                        std::to_string(rank) + " in " + path_);
    std::vector<std::size_t> shape;
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(u32());
      count *= shape.back();
    }
    if (rank == 0) count = 0;
    std::vector<double> values(count);
    for (auto& v : values) v = f64();
    return Tensor(std::move(shape), std::move(values));
  }

  void expect_magic() {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, kMagic, 4) != 0)
      throw FormatError("load_checkpoint: bad magic in " + path_);
    pos_ += 4;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw FormatError("load_checkpoint: " + path_ + " truncated at byte " +
                        std::to_string(pos_));
  }

  std::vector<char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

void write_layer(Writer& w, const Layer& layer) {
  switch (layer.kind) {
    case LayerKind::kDense:
      w.u8(0);
      w.tensor(layer.weight);
      w.tensor(layer.bias);
      break;
    case LayerKind::kRelu:
      w.u8(1);
      break;
    case LayerKind::kBatchNorm:
      w.u8(2);
      w.f64(layer.momentum);
      w.f64(layer.epsilon);
      w.tensor(layer.scale);
      w.tensor(layer.shift);
      w.tensor(layer.running_mean);
      w.tensor(layer.running_var);
      break;
  }
}

Layer read_layer(Reader& r) {
  const std::uint8_t tag = r.u8();
  Layer layer;
  switch (tag) {
    case 0:
      layer.kind = LayerKind::kDense;
      layer.weight = r.tensor();
      layer.bias = r.tensor();
      break;
    case 1:
      layer.kind = LayerKind::kRelu;
      break;
    case 2:
      layer.kind = LayerKind::kBatchNorm;
      layer.momentum = r.f64();
      layer.epsilon = r.f64();
      layer.scale = r.tensor();
      layer.shift = r.tensor();
      layer.running_mean = r.tensor();
      layer.running_var = r.tensor();
      break;
    default:
      throw FormatError("load_checkpoint: unknown layer tag " +
                        std::to_string(tag));
  }
  return layer;
}

}  // namespace

void save_checkpoint(const SplitModel& model,
                     const std::filesystem::path& path) {
  Writer w(path);
  w.u8(kMagic[0]);
  w.u8(kMagic[1]);
  w.u8(kMagic[2]);
  w.u8(kMagic[3]);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model.extractor.size()));
  w.u32(static_cast<std::uint32_t>(model.classifier.size()));
  for (const auto& layer : model.extractor) write_layer(w, layer);
  for (const auto& layer : model.classifier) write_layer(w, layer);
  w.finish();
}

SplitModel load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic();
  const std::uint32_t version = r.u32();
  if (version > kVersion)
    throw FormatError("load_checkpoint: unsupported version " +
                      std::to_string(version) + " (supported up to " +
                      std::to_string(kVersion) + ")");
  const std::uint32_t n_ext = r.u32();
  const std::uint32_t n_cls = r.u32();
  SplitModel model;
  model.extractor.reserve(n_ext);
  model.classifier.reserve(n_cls);
  for (std::uint32_t i = 0; i < n_ext; ++i)
    model.extractor.push_back(read_layer(r));
  for (std::uint32_t i = 0; i < n_cls; ++i)
    model.classifier.push_back(read_layer(r));
  if (!r.exhausted())
    throw FormatError("load_checkpoint: trailing bytes in " + path.string());
  return model;
}

}  // namespace fedhkd
