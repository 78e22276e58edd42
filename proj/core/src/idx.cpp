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

#include <cstdint>
#include <fstream>
#include <vector>

#include "fedhkd/data.hpp"
#include "fedhkd/error.hpp"

namespace fedhkd {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("load_idx: cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

class BigEndianReader {
 public:
  BigEndianReader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::uint32_t read_u32() {
    if (pos_ + 4 > bytes_.size())
      throw FormatError("load_idx: " + name_ + " truncated at byte " +
                        std::to_string(pos_));
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }

  const std::uint8_t* take(std::size_t count) {
    if (pos_ + count > bytes_.size())
      throw FormatError("load_idx: " + name_ + " truncated; expected " +
                        std::to_string(count) + " payload bytes at offset " +
                        std::to_string(pos_));
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += count;
    return p;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);

  BigEndianReader images(image_bytes, images_path.filename().string());
  const std::uint32_t image_magic = images.read_u32();
  if (image_magic != kImageMagic)
    throw FormatError("load_idx: bad image magic in " + images_path.string() +
                      " (got " + std::to_string(image_magic) + ", want " +
                      std::to_string(kImageMagic) + ")");
  const std::uint32_t image_count = images.read_u32();
  const std::uint32_t rows = images.read_u32();
  const std::uint32_t cols = images.read_u32();

  BigEndianReader labels(label_bytes, labels_path.filename().string());
  const std::uint32_t label_magic = labels.read_u32();
  if (label_magic != kLabelMagic)
    throw FormatError("load_idx: bad label magic in " + labels_path.string() +
                      " (got " + std::to_string(label_magic) + ", want " +
                      std::to_string(kLabelMagic) + ")");
  const std::uint32_t label_count = labels.read_u32();

  if (image_count != label_count)
    throw FormatError("load_idx: image count " + std::to_string(image_count) +
                      " does not match label count " +
                      std::to_string(label_count));

  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  if (dim == 0) throw FormatError("load_idx: zero image dimensions");

  const std::uint8_t* pixels =
      images.take(static_cast<std::size_t>(image_count) * dim);
  const std::uint8_t* label_data = labels.take(label_count);

  Dataset out;
  out.inputs = Tensor({image_count, dim});
  out.labels.reserve(label_count);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < image_count; ++i) {
    auto dst = out.inputs.row_span(i);
    for (std::size_t d = 0; d < dim; ++d)
      dst[d] = static_cast<double>(pixels[i * dim + d]) / 255.0;
    const std::size_t label = label_data[i];
    max_label = std::max(max_label, label);
    out.labels.push_back(label);
  }
  out.class_count = max_label + 1;
  return out;
}

}  // namespace fedhkd
