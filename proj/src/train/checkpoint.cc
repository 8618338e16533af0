/* Copyright 2026 The EdgeAttNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "edgeattnet/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

namespace edgeattnet::checkpoint {
namespace {

constexpr const char* kFormat = "edgeattnet-checkpoint";

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t get_u64(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void put_doubles(std::ostream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
}

struct Entry {
  std::string name;
  std::string kind;
  Shape shape;
  std::span<double> values;
};

std::vector<Entry> entries_of(model::Model& m) {
  std::vector<Entry> out;
  for (auto& p : m.parameters()) {
    out.push_back({p.name, "param", p.tensor.shape(), p.tensor.mutable_data()});
  }
  for (auto& b : m.buffers()) {
    out.push_back({b.name, "buffer", {static_cast<std::int64_t>(b.values->size())},
                   std::span<double>(*b.values)});
  }
  return out;
}

struct Loaded {
  nlohmann::json header;
  std::vector<char> payload;
};

Loaded read_file(const std::filesystem::path& path, bool with_payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  unsigned char len_bytes[8];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) {
    throw CheckpointError(path.string() + ": truncated checkpoint");
  }
  const std::uint64_t len = get_u64(len_bytes);
  if (len > (std::uint64_t{1} << 32)) throw CheckpointError(path.string() + ": bad header size");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw CheckpointError(path.string() + ": truncated header");
  }
  Loaded out;
  try {
    out.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(path.string() + ": invalid header: " + e.what());
  }
  if (out.header.value("format", "") != kFormat) {
    throw CheckpointError(path.string() + ": not a checkpoint");
  }
  if (with_payload) {
    out.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

}  // namespace

void save(const std::filesystem::path& path, model::Model& model, const nlohmann::json& info) {
  auto entries = entries_of(model);
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    table.push_back({{"name", e.name}, {"kind", e.kind}, {"shape", e.shape},
                     {"offset", offset}, {"count", e.values.size()}});
    offset += e.values.size();
  }
  const nlohmann::json header{{"format", kFormat},
                              {"version", 1},
                              {"spec", model::spec_to_json(model.spec())},
                              {"info", info},
                              {"tensors", table}};
  const std::string text = header.dump();
  // Write beside the target and rename so a crash never leaves a torn file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : entries) put_doubles(out, e.values);
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json read_header(const std::filesystem::path& path) {
  return read_file(path, false).header;
}

void load_into(const std::filesystem::path& path, model::Model& model) {
  const Loaded file = read_file(path, true);
  if (model::spec_from_json(file.header.at("spec")) != model.spec()) {
    throw CheckpointError(path.string() + ": stored model spec differs from the target model");
  }
  auto entries = entries_of(model);
  const auto& table = file.header.at("tensors");
  if (table.size() != entries.size()) {
    throw CheckpointError(path.string() + ": tensor count mismatch");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = table[i];
    const Entry& e = entries[i];
    if (t.at("name") != e.name || t.at("kind") != e.kind ||
        t.at("shape").get<Shape>() != e.shape) {
      throw CheckpointError(path.string() + ": tensor " + t.at("name").get<std::string>() +
                            " does not match " + e.name);
    }
    const auto offset = t.at("offset").get<std::uint64_t>();
    const auto count = t.at("count").get<std::uint64_t>();
    if (count != e.values.size() || (offset + count) * 8 > file.payload.size()) {
      throw CheckpointError(path.string() + ": truncated tensor data for " + e.name);
    }
    const char* src = file.payload.data() + offset * 8;
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(e.values.data(), src, count * 8);
    } else {
      for (std::uint64_t k = 0; k < count; ++k) {
        e.values[k] = std::bit_cast<double>(
            get_u64(reinterpret_cast<const unsigned char*>(src + 8 * k)));
      }
    }
  }
}

model::Model load(const std::filesystem::path& path, nlohmann::json* info) {
  const nlohmann::json header = read_header(path);
  model::Model m(model::spec_from_json(header.at("spec")));
  load_into(path, m);
  if (info != nullptr) *info = header.value("info", nlohmann::json::object());
  return m;
}

}  // namespace edgeattnet::checkpoint
