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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "edgeattnet/cli.h"

namespace edgeattnet::cli {

nlohmann::json config_to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"input", c.input},
          {"output", c.output},
          {"data", c.data},
          {"annotations", c.annotations},
          {"images", c.images},
          {"checkpoint", c.checkpoint},
          {"predictions", c.predictions},
          {"split_file", c.split_file},
          {"subset", c.subset},
          {"variant", c.variant},
          {"input_size", c.input_size},
          {"width_divisor", c.width_divisor},
          {"model", c.model},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"batch", c.batch},
          {"seed", c.seed},
          {"split", c.split},
          {"stop_at_dice", c.stop_at_dice},
          {"preprocess", c.preprocess},
          {"overlay", c.overlay},
          {"synthetic", data::synthetic_to_json(c.synthetic)},
          {"scales", c.scales},
          {"threshold", c.threshold}};
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  RunConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("command", c.command);
    get("input", c.input);
    get("output", c.output);
    get("data", c.data);
    get("annotations", c.annotations);
    get("images", c.images);
    get("checkpoint", c.checkpoint);
    get("predictions", c.predictions);
    get("split_file", c.split_file);
    get("subset", c.subset);
    get("variant", c.variant);
    get("input_size", c.input_size);
    get("width_divisor", c.width_divisor);
    get("epochs", c.epochs);
    get("lr", c.lr);
    get("batch", c.batch);
    get("seed", c.seed);
    get("split", c.split);
    get("stop_at_dice", c.stop_at_dice);
    get("preprocess", c.preprocess);
    get("overlay", c.overlay);
    get("scales", c.scales);
    get("threshold", c.threshold);
    if (j.contains("model")) {
      if (!j["model"].is_object()) throw UsageError("config: model must be an object");
      c.model = j["model"];
    }
    if (j.contains("synthetic")) c.synthetic = data::synthetic_from_json(j["synthetic"]);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(config).dump())));
  return buf;
}

int worker_count() {
  int n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EDGEATTNET_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

}  // namespace edgeattnet::cli
