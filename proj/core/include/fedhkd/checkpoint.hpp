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

#pragma once

#include <filesystem>

#include "fedhkd/model.hpp"

namespace fedhkd {

// Binary model checkpoint. Layout (all integers little-endian):
//   magic "FHKD" | u32 version (1) | u32 extractor layers | u32 classifier
//   layers | layers in order. Per layer: u8 kind tag (0 dense, 1 relu,
//   2 batchnorm), then the layer's tensors; batchnorm additionally stores
//   momentum and epsilon as f64. Tensors are u32 rank, u32 dims, f64 data.
// load(save(m)) reproduces m bit for bit.
void save_checkpoint(const SplitModel& model,
                     const std::filesystem::path& path);
SplitModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fedhkd
