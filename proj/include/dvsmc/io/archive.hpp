// Copyright 2026 The dvsmc Authors.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dvsmc/autodiff/tensor.hpp"

namespace dvsmc::io {

// Binary container shared by checkpoints, datasets and filter traces.
//
//   offset  size  field
//   0       8     magic "DVSMCARC"
//   8       4     format version, uint32 little-endian (currently 1)
//   12      8     header length L, uint64 little-endian
//   20      L     UTF-8 JSON header:
//                   {"format_version": 1, "kind": str, "meta": {...},
//                    "tensors": [{"name": str, "shape": [..], "dtype": "f64",
//                                 "offset": bytes from payload start}, ...]}
//   20+L    ...   payload: tensors in header order, row-major float64 LE
//
// Tensors are stored in name order and the JSON header is written with sorted
// keys, so equal archives serialize to identical bytes.
class Archive {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  std::string kind;
  nlohmann::json meta = nlohmann::json::object();

  void put(const std::string& name, const ad::Tensor& t);
  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  const ad::Tensor& get(const std::string& name) const;
  const std::map<std::string, ad::Tensor>& tensors() const { return tensors_; }

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  std::map<std::string, ad::Tensor> tensors_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dvsmc::io
