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

#ifndef EDGEATTNET_CHECKPOINT_H_
#define EDGEATTNET_CHECKPOINT_H_

#include <filesystem>
#include <stdexcept>

#include "edgeattnet/model.h"
#include "json.hpp"

namespace edgeattnet::checkpoint {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File layout: 8-byte little-endian header length, a JSON header holding the
// model spec, free-form info and a tensor table, then every parameter and
// buffer as little-endian float64 in table order.
void save(const std::filesystem::path& path, model::Model& model,
          const nlohmann::json& info = nlohmann::json::object());

// Header only; the tensor payload is not read.
nlohmann::json read_header(const std::filesystem::path& path);

// Copies stored values into `model`, whose spec must equal the stored one.
void load_into(const std::filesystem::path& path, model::Model& model);

// Builds a model from the stored spec and loads its values.
model::Model load(const std::filesystem::path& path, nlohmann::json* info = nullptr);

}  // namespace edgeattnet::checkpoint

#endif  // EDGEATTNET_CHECKPOINT_H_
