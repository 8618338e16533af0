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

#include <cctype>
#include <fstream>
#include <set>

#include "edgeattnet/data.h"
#include "edgeattnet/image_io.h"

namespace edgeattnet::data {
namespace {

constexpr const char* kIndexFile = "index.json";
constexpr const char* kFormat = "edgeattnet-samples";

std::string file_stem(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

}  // namespace

void save_samples(const std::filesystem::path& dir, const std::vector<Sample>& samples,
                  const nlohmann::json& meta) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::set<std::string> stems;
  nlohmann::json entries = nlohmann::json::array();
  for (const Sample& s : samples) {
    const std::string stem = file_stem(s.id);
    if (!stems.insert(stem).second) throw DataError("duplicate sample file name " + stem);
    nlohmann::json entry{{"id", s.id}, {"image", "images/" + stem + ".png"}};
    io::write_png(dir / entry["image"].get<std::string>(), s.image);
    nlohmann::json masks = nlohmann::json::array();
    for (std::size_t k = 0; k < s.instances.size(); ++k) {
      const std::string rel = "masks/" + stem + "_" + std::to_string(k) + ".png";
      io::write_mask_png(dir / rel, s.instances[k]);
      masks.push_back(rel);
    }
    entry["instances"] = std::move(masks);
    entries.push_back(std::move(entry));
  }
  const nlohmann::json index{{"format", kFormat}, {"version", 1}, {"meta", meta},
                             {"samples", entries}};
  std::ofstream out(dir / kIndexFile);
  if (!out) throw DataError("cannot write " + (dir / kIndexFile).string());
  out << index.dump(2) << '\n';
}

std::vector<IndexEntry> load_index(const std::filesystem::path& dir, nlohmann::json* meta) {
  std::ifstream in(dir / kIndexFile);
  if (!in) throw DataError("no sample index in " + dir.string());
  nlohmann::json index;
  try {
    in >> index;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("invalid sample index: " + std::string(e.what()));
  }
  if (index.value("format", "") != kFormat) throw DataError("not a sample index: " + dir.string());
  if (meta != nullptr) *meta = index.value("meta", nlohmann::json::object());
  std::vector<IndexEntry> entries;
  for (const auto& e : index.at("samples")) {
    entries.push_back({e.at("id").get<std::string>(), e.at("image").get<std::string>(),
                       e.at("instances").get<std::vector<std::string>>()});
  }
  return entries;
}

Sample load_sample(const std::filesystem::path& dir, const IndexEntry& entry) {
  Sample s;
  s.id = entry.id;
  s.image = io::read_unit_image(dir / entry.image);
  for (const auto& rel : entry.instances) {
    s.instances.push_back(io::read_mask_png(dir / rel));
    if (!s.instances.back().same_size(BinaryMask(s.image.width, s.image.height))) {
      throw DataError("mask size differs from image for sample " + entry.id);
    }
  }
  if (s.instances.empty()) throw DataError("sample " + entry.id + " has no instances");
  s.union_mask = mask_union(s.instances);
  return s;
}

}  // namespace edgeattnet::data
