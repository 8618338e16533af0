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

#ifndef EDGEATTNET_CLI_H_
#define EDGEATTNET_CLI_H_

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgeattnet/data.h"
#include "json.hpp"

namespace edgeattnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a command needs, serialized next to its outputs.
struct RunConfig {
  std::string command;
  // Paths; unused ones stay empty.
  std::string input;
  std::string output;
  std::string data;
  std::string annotations;
  std::string images;
  std::string checkpoint;
  std::string predictions;
  std::string split_file;
  std::string subset;

  std::string variant = "edgeattnet";
  int input_size = 0;  // 0: taken from the data (train) or 256 (params)
  int width_divisor = 1;
  nlohmann::json model = nlohmann::json::object();  // ModelSpec field overrides

  int epochs = 50;
  double lr = 1e-4;
  int batch = 4;
  std::uint64_t seed = 0;
  std::vector<int> split;  // train, val, test counts; empty: 75/12.5/12.5 %
  double stop_at_dice = 0.0;
  bool preprocess = false;
  bool overlay = false;

  data::SyntheticConfig synthetic;
  std::vector<double> scales = metrics::default_scales();
  double threshold = 0.5;
};

nlohmann::json config_to_json(const RunConfig& config);
// Fields missing from `json` keep their defaults. Throws UsageError.
RunConfig config_from_json(const nlohmann::json& json);

// 64-bit FNV-1a of the compact JSON serialization, as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::uint64_t fnv1a64(const std::string& bytes);

// Worker count: hardware concurrency capped by EDGEATTNET_THREADS.
int worker_count();

// Runs one command line (argv[0] is the program name). Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Command bodies, callable without argument parsing.
int cmd_preprocess(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_params(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace edgeattnet::cli

#endif  // EDGEATTNET_CLI_H_
