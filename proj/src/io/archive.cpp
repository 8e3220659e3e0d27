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

#include "dvsmc/io/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dvsmc::io {
namespace {

constexpr char kMagic[8] = {'D', 'V', 'S', 'M', 'C', 'A', 'R', 'C'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <class T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("archive truncated");
  return value;
}

}  // namespace

void Archive::put(const std::string& name, const ad::Tensor& t) { tensors_.insert_or_assign(name, t.detach()); }

const ad::Tensor& Archive::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw FormatError("archive has no tensor '" + name + "'");
  return it->second;
}

void Archive::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = kind;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors_) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f64"}, {"offset", offset}});
    offset += t.size() * sizeof(double);
  }
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kFormatVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : tensors_) {
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("'" + path.string() + "' is not a dvsmc archive");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw FormatError("unsupported archive version " + std::to_string(version));
  }
  const auto length = read_pod<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw FormatError("archive header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("archive header is not valid JSON: ") + e.what());
  }
  Archive archive;
  archive.kind = header.value("kind", "");
  archive.meta = header.value("meta", nlohmann::json::object());
  const auto payload_start = in.tellg();
  for (const auto& entry : header.at("tensors")) {
    if (entry.value("dtype", "f64") != "f64") throw FormatError("unsupported dtype");
    auto shape = entry.at("shape").get<ad::Shape>();
    std::vector<double> data(ad::numel(shape));
    in.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw FormatError("archive payload truncated");
    archive.tensors_.emplace(entry.at("name").get<std::string>(), ad::Tensor(std::move(shape), std::move(data)));
  }
  return archive;
}

}  // namespace dvsmc::io
