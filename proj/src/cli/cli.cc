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

#include <fstream>

#include "CLI11.hpp"
#include "edgeattnet/cli.h"

namespace edgeattnet::cli {
namespace {

// Returns the value of --config, scanning before full parsing so that file
// values can serve as defaults that flags then override.
std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return "";
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("invalid config " + path + ": " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    if (const std::string path = find_config_path(args); !path.empty()) {
      cfg = load_config_file(path);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Filament segmentation with edge-guided attention"};
  app.name(args.empty() ? "edgeattnet" : args[0]);
  app.require_subcommand(1);
  app.fallthrough();  // --config may follow the subcommand
  std::string config_path;
  app.add_option("--config", config_path, "JSON config; flags override its values");

  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--variant", cfg.variant, "unet | mhsa-nope | mhsa-pe | edgeattnet");
    sub->add_option("--input-size", cfg.input_size, "Square input size in pixels");
    sub->add_option("--width-divisor", cfg.width_divisor, "Divide all channel widths by this");
  };
  auto add_eval_flags = [&](CLI::App* sub) {
    sub->add_option("--scales", cfg.scales, "Comma-separated grid scales, starting at 1")
        ->delimiter(',');
    sub->add_option("--threshold", cfg.threshold, "Probability threshold");
  };

  CLI::App* pre = app.add_subcommand("preprocess", "Run the disk preprocessing pipeline");
  pre->add_option("--input", cfg.input, "Image file or directory");
  pre->add_option("--output", cfg.output, "Output directory");

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic filament dataset");
  synth->add_option("--output", cfg.output, "Output directory");
  synth->add_option("--count", cfg.synthetic.count, "Number of images");
  synth->add_option("--size", cfg.synthetic.image_size, "Image size in pixels");
  synth->add_option("--noise", cfg.synthetic.noise_sigma, "Gaussian noise sigma");
  CLI::Option* synth_seed = synth->add_option("--seed", cfg.seed, "Random seed");

  CLI::App* train = app.add_subcommand("train", "Train a model");
  train->add_option("--data", cfg.data, "Sample directory (index.json)");
  train->add_option("--annotations", cfg.annotations, "COCO-style annotation file");
  train->add_option("--images", cfg.images, "Image directory for --annotations");
  train->add_option("--output", cfg.output, "Run directory");
  add_model_flags(train);
  train->add_option("--epochs", cfg.epochs, "Training epochs");
  train->add_option("--lr", cfg.lr, "Adam learning rate");
  train->add_option("--batch", cfg.batch, "Batch size");
  train->add_option("--seed", cfg.seed, "Seed for splits, initialization and dropout");
  train->add_option("--split", cfg.split, "Train,val,test counts")->delimiter(',');
  train->add_option("--stop-at-dice", cfg.stop_at_dice, "Stop at this training Dice");
  train->add_flag("--preprocess", cfg.preprocess, "Run the disk pipeline on raw images");
  add_eval_flags(train);

  CLI::App* predict = app.add_subcommand("predict", "Predict binary masks");
  predict->add_option("--checkpoint", cfg.checkpoint, "Checkpoint file");
  predict->add_option("--input", cfg.input, "Image file or directory");
  predict->add_option("--output", cfg.output, "Output directory");
  predict->add_option("--threshold", cfg.threshold, "Probability threshold");
  predict->add_flag("--overlay", cfg.overlay, "Also write boundary overlays");
  predict->add_flag("--preprocess", cfg.preprocess, "Run the disk pipeline on raw images");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predicted masks");
  evaluate->add_option("--predictions", cfg.predictions, "Directory of predicted masks");
  evaluate->add_option("--data", cfg.data, "Ground-truth sample directory");
  evaluate->add_option("--annotations", cfg.annotations, "Ground-truth COCO-style file");
  evaluate->add_option("--split-file", cfg.split_file, "split.json written by train");
  evaluate->add_option("--subset", cfg.subset, "Subset of the split file (default test)");
  evaluate->add_option("--output", cfg.output, "Report directory");
  add_eval_flags(evaluate);

  CLI::App* params = app.add_subcommand("params", "Print parameter counts");
  params->add_option("--variant", cfg.variant, "A variant name or all");
  params->add_option("--input-size", cfg.input_size, "Square input size in pixels");
  params->add_option("--width-divisor", cfg.width_divisor, "Divide all channel widths by this");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      cfg.command = "synth";
      if (synth_seed->count() > 0) cfg.synthetic.seed = cfg.seed;
      return cmd_synth(cfg, out, err);
    }
    if (pre->parsed()) {
      cfg.command = "preprocess";
      return cmd_preprocess(cfg, out, err);
    }
    if (train->parsed()) {
      cfg.command = "train";
      return cmd_train(cfg, out, err);
    }
    if (predict->parsed()) {
      cfg.command = "predict";
      return cmd_predict(cfg, out, err);
    }
    if (evaluate->parsed()) {
      cfg.command = "evaluate";
      return cmd_evaluate(cfg, out, err);
    }
    if (params->parsed()) {
      cfg.command = "params";
      if (cfg.variant == "edgeattnet" && params->count("--variant") == 0) cfg.variant = "all";
      return cmd_params(cfg, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace edgeattnet::cli
