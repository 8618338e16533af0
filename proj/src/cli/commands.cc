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
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "edgeattnet/checkpoint.h"
#include "edgeattnet/cli.h"
#include "edgeattnet/image_io.h"
#include "edgeattnet/metrics.h"
#include "edgeattnet/model.h"
#include "edgeattnet/preprocess.h"
#include "edgeattnet/trainer.h"

namespace edgeattnet::cli {
namespace {

namespace fs = std::filesystem;

// Runs fn(i) for i in [0, n) on up to worker_count() threads.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, worker_count());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_run_config(const fs::path& dir, const RunConfig& config,
                      const nlohmann::json& resolved = nlohmann::json::object()) {
  nlohmann::json doc{{"config", config_to_json(config)}, {"config_hash", config_hash(config)}};
  if (!resolved.empty()) doc["resolved"] = resolved;
  write_text(dir / "run_config.json", doc.dump(2) + "\n");
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".png" || ext == ".pgm";
}

std::vector<fs::path> list_images(const fs::path& input) {
  if (fs::is_regular_file(input)) return {input};
  if (!fs::is_directory(input)) throw std::runtime_error("no such input: " + input.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

model::ModelSpec resolve_spec(const RunConfig& config, int height, int width) {
  try {
    model::ModelSpec spec = model::ModelSpec::preset(model::parse_variant(config.variant), height);
    spec.input_height = height;
    spec.input_width = width;
    if (config.width_divisor != 1) spec = spec.with_width_divisor(config.width_divisor);
    if (!config.model.empty()) {
      nlohmann::json j = model::spec_to_json(spec);
      j.merge_patch(config.model);
      spec = model::spec_from_json(j);
    }
    spec.validate();
    return spec;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("model override: ") + e.what());
  }
}

void validate_common(const RunConfig& config) {
  try {
    metrics::validate_scales(config.scales);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
    throw UsageError("threshold must lie in (0, 1)");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::array<std::size_t, 3> split_sizes(const RunConfig& config, std::size_t n) {
  if (config.split.empty()) {
    const std::size_t val = n / 8, test = n / 8;
    return {n - val - test, val, test};
  }
  if (config.split.size() != 3 ||
      std::any_of(config.split.begin(), config.split.end(), [](int v) { return v < 0; })) {
    throw UsageError("--split needs three non-negative counts");
  }
  return {static_cast<std::size_t>(config.split[0]), static_cast<std::size_t>(config.split[1]),
          static_cast<std::size_t>(config.split[2])};
}

// Key under which predictions and ground truth are matched: the image file
// name without extension.
std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

struct GroundTruth {
  std::string key;
  metrics::MaskSet instances;
};

std::vector<GroundTruth> load_ground_truth(const RunConfig& config, std::ostream& err) {
  std::vector<GroundTruth> out;
  if (!config.data.empty()) {
    for (const auto& entry : data::load_index(config.data)) {
      GroundTruth gt{stem_of(entry.image), {}};
      for (const auto& rel : entry.instances) {
        gt.instances.push_back(io::read_mask_png(fs::path(config.data) / rel));
      }
      out.push_back(std::move(gt));
    }
    return out;
  }
  data::LoadReport report;
  const auto records = data::load_annotations(config.annotations, &report);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  std::map<std::string, std::size_t> slot;
  for (const auto& rec : records) {
    const BinaryMask m = data::rasterize_record(rec);
    if (m.count() == 0) continue;
    const std::string key = stem_of(rec.file_name);
    auto [it, inserted] = slot.emplace(key, out.size());
    if (inserted) out.push_back({key, {}});
    out[it->second].instances.push_back(m);
  }
  return out;
}

std::optional<std::set<std::string>> subset_keys(const RunConfig& config) {
  if (config.split_file.empty()) return std::nullopt;
  const std::string subset = config.subset.empty() ? "test" : config.subset;
  const nlohmann::json split = read_json(config.split_file);
  if (!split.contains(subset)) throw UsageError("split file has no subset " + subset);
  std::set<std::string> keys;
  for (const auto& k : split.at(subset)) keys.insert(k.get<std::string>());
  return keys;
}

std::vector<std::uint8_t> overlay_rgb(const GrayImage& image, const BinaryMask& mask) {
  std::vector<std::uint8_t> rgb(image.pixels.size() * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * image.width + x;
      const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255));
      bool edge = false;
      if (mask.at(x, y)) {
        edge = x == 0 || y == 0 || x == image.width - 1 || y == image.height - 1 ||
               !mask.at(x - 1, y) || !mask.at(x + 1, y) || !mask.at(x, y - 1) ||
               !mask.at(x, y + 1);
      }
      rgb[3 * i] = edge ? 255 : g;
      rgb[3 * i + 1] = edge ? 0 : g;
      rgb[3 * i + 2] = edge ? 0 : g;
    }
  }
  return rgb;
}

}  // namespace

int cmd_preprocess(const RunConfig& config, std::ostream& out, std::ostream& err) {
  require(config.input, "--input");
  require(config.output, "--output");
  const auto files = list_images(config.input);
  if (files.empty()) {
    err << "error: no PNG or PGM images in " << config.input << "\n";
    return kExitFailure;
  }
  fs::create_directories(config.output);
  struct Outcome {
    bool ok = false;
    preprocess::DiskGeometry disk;
    int width = 0, height = 0;
    std::string error;
  };
  std::vector<Outcome> outcomes(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    Outcome& o = outcomes[i];
    try {
      const GrayImage raw = io::read_image(files[i]);
      const auto result = preprocess::run_pipeline(raw);
      io::write_png(fs::path(config.output) / (files[i].stem().string() + ".png"), result.image);
      o = {true, result.disk, raw.width, raw.height, ""};
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });
  nlohmann::json images = nlohmann::json::array(), failures = nlohmann::json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    const Outcome& o = outcomes[i];
    const std::string name = files[i].filename().string();
    if (o.ok) {
      images.push_back({{"file", name},
                        {"output", files[i].stem().string() + ".png"},
                        {"width", o.width},
                        {"height", o.height},
                        {"disk", {{"cx", o.disk.cx}, {"cy", o.disk.cy}, {"r", o.disk.r}}}});
    } else {
      failures.push_back({{"file", name}, {"error", o.error}});
      err << "failed: " << name << ": " << o.error << "\n";
    }
  }
  write_text(fs::path(config.output) / "manifest.json",
             nlohmann::json{{"images", images}, {"failures", failures},
                            {"config_hash", config_hash(config)}}
                     .dump(2) +
                 "\n");
  write_run_config(config.output, config);
  out << "preprocessed " << images.size() << " of " << files.size() << " images\n";
  return images.empty() ? kExitFailure : kExitOk;
}

int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream&) {
  require(config.output, "--output");
  try {
    config.synthetic.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::vector<data::Sample> samples;
  for (const auto& s : data::generate_synthetic(config.synthetic)) {
    samples.push_back(data::to_sample(s));
  }
  data::save_samples(config.output, samples,
                     {{"source", "synthetic"},
                      {"synthetic", data::synthetic_to_json(config.synthetic)}});
  write_run_config(config.output, config);
  out << "wrote " << samples.size() << " synthetic samples to " << config.output << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
  require(config.output, "--output");
  if (config.data.empty() == config.annotations.empty()) {
    throw UsageError("train needs exactly one of --data or --annotations");
  }
  if (!config.annotations.empty()) require(config.images, "--images");
  if (config.epochs < 0) throw UsageError("--epochs must be non-negative");
  if (config.batch <= 0) throw UsageError("--batch must be positive");
  if (!(config.lr > 0)) throw UsageError("--lr must be positive");
  validate_common(config);

  // Split on ids first so that test images are never opened.
  std::vector<data::Sample> train_set, val_set;
  nlohmann::json split_doc{{"seed", config.seed}};
  auto record_split = [&](const std::vector<std::string>& keys, const data::SplitIndices& idx) {
    for (const char* part : {"train", "val", "test"}) split_doc[part] = nlohmann::json::array();
    for (auto i : idx.train) split_doc["train"].push_back(keys[i]);
    for (auto i : idx.val) split_doc["val"].push_back(keys[i]);
    for (auto i : idx.test) split_doc["test"].push_back(keys[i]);
  };
  if (!config.data.empty()) {
    const auto entries = data::load_index(config.data);
    const auto sizes = split_sizes(config, entries.size());
    const auto idx = data::split_indices(entries.size(), sizes[0], sizes[1], sizes[2], config.seed);
    std::vector<std::string> keys;
    for (const auto& e : entries) keys.push_back(stem_of(e.image));
    record_split(keys, idx);
    for (auto i : idx.train) train_set.push_back(data::load_sample(config.data, entries[i]));
    for (auto i : idx.val) val_set.push_back(data::load_sample(config.data, entries[i]));
  } else {
    data::LoadReport load;
    const auto records = data::load_annotations(config.annotations, &load);
    for (const auto& w : load.warnings) err << "warning: " << w << "\n";
    std::vector<std::string> image_ids, keys;
    std::map<std::string, std::vector<data::AnnotationRecord>> by_image;
    for (const auto& rec : records) {
      if (by_image[rec.image_id].empty()) {
        image_ids.push_back(rec.image_id);
        keys.push_back(stem_of(rec.file_name));
      }
      by_image[rec.image_id].push_back(rec);
    }
    const auto sizes = split_sizes(config, image_ids.size());
    const auto idx = data::split_indices(image_ids.size(), sizes[0], sizes[1], sizes[2], config.seed);
    record_split(keys, idx);
    data::BuildOptions build;
    build.preprocess = config.preprocess;
    auto gather = [&](const std::vector<std::size_t>& part) {
      std::vector<data::AnnotationRecord> subset;
      for (auto i : part) {
        const auto& recs = by_image[image_ids[i]];
        subset.insert(subset.end(), recs.begin(), recs.end());
      }
      data::BuildReport report;
      auto samples = data::build_samples(subset, config.images, build, &report);
      for (const auto& w : report.warnings) err << "warning: " << w << "\n";
      return samples;
    };
    train_set = gather(idx.train);
    val_set = gather(idx.val);
  }
  if (train_set.empty() && config.epochs > 0) {
    err << "error: the training split is empty\n";
    return kExitFailure;
  }
  const GrayImage& probe = !train_set.empty() ? train_set[0].image : val_set.at(0).image;
  if (config.input_size > 0 &&
      (probe.width != config.input_size || probe.height != config.input_size)) {
    err << "error: images are " << probe.width << "x" << probe.height
        << " but --input-size is " << config.input_size << "\n";
    return kExitFailure;
  }
  const model::ModelSpec spec = resolve_spec(config, probe.height, probe.width);
  for (const auto* set : {&train_set, &val_set}) {
    for (const auto& s : *set) {
      if (s.image.width != spec.input_width || s.image.height != spec.input_height) {
        err << "error: sample " << s.id << " does not match the model input size\n";
        return kExitFailure;
      }
    }
  }

  const fs::path dir = config.output;
  fs::create_directories(dir);
  write_run_config(dir, config, {{"spec", model::spec_to_json(spec)}});
  write_text(dir / "spec.json", model::spec_to_json(spec).dump(2) + "\n");
  write_text(dir / "split.json", split_doc.dump(2) + "\n");

  model::Model net(spec, config.seed);
  const std::string hash = config_hash(config);
  checkpoint::save(dir / "best.ckpt", net, {{"epoch", 0}, {"config_hash", hash}});

  std::ofstream log(dir / "train_log.csv", std::ios::trunc);
  log << "epoch,train_loss,train_bce,train_dice_loss,train_dice,val_loss,val_dice,"
         "val_miou_pairwise,val_miou_multiscale,best,seconds\n";
  std::ofstream steps(dir / "steps.csv", std::ios::trunc);
  steps << "step,loss\n";

  train::TrainOptions options;
  options.epochs = config.epochs;
  options.lr = config.lr;
  options.batch_size = config.batch;
  options.seed = config.seed;
  options.threshold = config.threshold;
  options.scales = config.scales;
  options.stop_at_train_dice = config.stop_at_dice;
  train::TrainCallbacks callbacks;
  callbacks.on_step = [&](std::int64_t step, double loss) {
    steps << step << "," << fmt(loss) << "\n";
  };
  callbacks.on_epoch = [&](const train::EpochRecord& r) {
    auto opt = [](bool has, double v) { return has ? fmt(v) : std::string(); };
    log << r.epoch << "," << fmt(r.train_loss) << "," << fmt(r.train_bce) << ","
        << fmt(r.train_dice_loss) << "," << opt(r.has_train_eval, r.train_eval.dice) << ","
        << opt(r.has_val, r.val.loss) << "," << opt(r.has_val, r.val.dice) << ","
        << opt(r.has_val, r.val.miou_pairwise) << "," << opt(r.has_val, r.val.miou_multiscale)
        << "," << (r.best ? 1 : 0) << "," << fmt(r.seconds) << std::endl;
    if (r.best) {
      checkpoint::save(dir / "best.ckpt", net, {{"epoch", r.epoch}, {"config_hash", hash}});
    }
    out << "epoch " << r.epoch << " train_loss " << r.train_loss;
    if (r.has_val) out << " val_loss " << r.val.loss << " val_dice " << r.val.dice;
    out << (r.best ? " *" : "") << "\n";
  };
  train::TrainResult result;
  try {
    result = train::fit(net, train_set, val_set, options, callbacks);
  } catch (const train::TrainingDiverged& e) {
    checkpoint::save(dir / "last_good.ckpt", net,
                     {{"epoch", e.epoch - 1}, {"step", e.step - 1}, {"config_hash", hash}});
    err << "error: " << e.what() << "\n"
        << "parameters before the failing step saved to " << (dir / "last_good.ckpt").string()
        << "\n";
    return kExitFailure;
  }
  const int last_epoch = result.epochs.empty() ? 0 : result.epochs.back().epoch;
  checkpoint::save(dir / "last.ckpt", net, {{"epoch", last_epoch}, {"config_hash", hash}});
  out << "trained " << last_epoch << " epochs; best epoch " << result.best_epoch << "\n";
  return kExitOk;
}

int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err) {
  require(config.checkpoint, "--checkpoint");
  require(config.input, "--input");
  require(config.output, "--output");
  validate_common(config);
  model::Model net = checkpoint::load(config.checkpoint);
  const model::ModelSpec& spec = net.spec();
  const auto files = list_images(config.input);
  if (files.empty()) {
    err << "error: no PNG or PGM images in " << config.input << "\n";
    return kExitFailure;
  }
  std::vector<GrayImage> images;
  for (const auto& f : files) {
    GrayImage img = config.preprocess ? preprocess::run_pipeline(io::read_image(f)).image
                                      : io::read_unit_image(f);
    if (img.width != spec.input_width || img.height != spec.input_height) {
      err << "error: " << f.string() << " is " << img.width << "x" << img.height
          << " but the model expects " << spec.input_width << "x" << spec.input_height << "\n";
      return kExitFailure;
    }
    images.push_back(std::move(img));
  }
  fs::create_directories(config.output);
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const Tensor x = Tensor::from_data({1, 1, images[i].height, images[i].width}, images[i].pixels);
    const BinaryMask mask = train::logits_to_masks(net.forward(x, false), config.threshold)[0];
    const std::string stem = files[i].stem().string();
    io::write_mask_png(fs::path(config.output) / (stem + "_mask.png"), mask);
    if (config.overlay) {
      io::write_rgb_png(fs::path(config.output) / (stem + "_overlay.png"), mask.width,
                        mask.height, overlay_rgb(images[i], mask));
    }
  }
  write_run_config(config.output, config, {{"spec", model::spec_to_json(spec)}});
  out << "predicted " << files.size() << " masks\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  require(config.predictions, "--predictions");
  require(config.output, "--output");
  if (config.data.empty() == config.annotations.empty()) {
    throw UsageError("evaluate needs exactly one of --data or --annotations");
  }
  validate_common(config);
  auto truth = load_ground_truth(config, err);
  std::set<std::string> all_keys;
  for (const auto& g : truth) all_keys.insert(g.key);
  if (const auto keys = subset_keys(config)) {
    std::erase_if(truth, [&](const GroundTruth& g) { return !keys->count(g.key); });
  }
  // Mask files written by predict end in _mask; when present, other images in
  // the directory (overlays) are ignored.
  const auto files = list_images(config.predictions);
  const bool suffixed = std::any_of(files.begin(), files.end(), [](const fs::path& f) {
    return f.stem().string().ends_with("_mask");
  });
  std::map<std::string, fs::path> predicted;
  for (const auto& f : files) {
    std::string key = f.stem().string();
    if (suffixed) {
      if (!key.ends_with("_mask")) continue;
      key.resize(key.size() - 5);
    }
    predicted[key] = f;
  }
  std::vector<std::string> missing;
  std::vector<const GroundTruth*> matched;
  std::set<std::string> used;
  for (const auto& g : truth) {
    if (predicted.count(g.key)) {
      matched.push_back(&g);
      used.insert(g.key);
    } else {
      missing.push_back(g.key);
    }
  }
  std::vector<std::string> unmatched;
  for (const auto& [key, path] : predicted) {
    if (!used.count(key) && !all_keys.count(key)) unmatched.push_back(key);
  }
  for (const auto& k : missing) err << "id mismatch: no prediction for " << k << "\n";
  for (const auto& k : unmatched) err << "id mismatch: prediction " << k << " has no ground truth\n";
  if (matched.empty()) {
    err << "error: no prediction matches a ground-truth id\n";
    return kExitFailure;
  }

  std::vector<metrics::ImageRecord> records(matched.size());
  std::vector<std::string> errors(matched.size());
  parallel_for(matched.size(), [&](std::size_t i) {
    try {
      const BinaryMask mask = io::read_mask_png(predicted[matched[i]->key]);
      if (!matched[i]->instances.empty() && !mask.same_size(matched[i]->instances[0])) {
        throw std::runtime_error("prediction size differs from ground truth");
      }
      records[i] = metrics::evaluate_image(matched[i]->key, matched[i]->instances,
                                           metrics::connected_components(mask), config.scales);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::vector<metrics::ImageRecord> usable;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    if (errors[i].empty()) {
      usable.push_back(std::move(records[i]));
    } else {
      err << "error: " << matched[i]->key << ": " << errors[i] << "\n";
    }
  }
  metrics::EvalReport report;
  try {
    report = metrics::evaluate_dataset(usable, config.scales);
  } catch (const metrics::NoEvaluablePairs& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  report.config_hash = config_hash(config);
  fs::create_directories(config.output);
  nlohmann::json doc = metrics::report_to_json(report);
  doc["missing_predictions"] = missing;
  doc["unmatched_predictions"] = unmatched;
  write_text(fs::path(config.output) / "report.json", doc.dump(2) + "\n");
  write_text(fs::path(config.output) / "pairs.csv", metrics::pairs_csv(report));
  write_run_config(config.output, config);
  char line[160];
  std::snprintf(line, sizeof(line), "mIoU_pairwise %.4f  mIoU_multiscale %.4f  (%d images)\n",
                report.miou_pairwise, report.miou_multiscale, report.evaluated_images);
  out << line;
  return kExitOk;
}

int cmd_params(const RunConfig& config, std::ostream& out, std::ostream&) {
  const int size = config.input_size > 0 ? config.input_size : 256;
  std::vector<model::Variant> variants;
  if (config.variant == "all") {
    variants.assign(std::begin(model::kAllVariants), std::end(model::kAllVariants));
  } else {
    try {
      variants.push_back(model::parse_variant(config.variant));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  std::map<model::Variant, std::int64_t> totals;
  for (auto v : variants) {
    RunConfig one = config;
    one.variant = std::string(model::variant_name(v));
    const model::ParamReport report = model::param_report(resolve_spec(one, size, size));
    totals[v] = report.total;
    out << model::format_param_report(report) << "\n";
  }
  if (variants.size() == 4) {
    char line[160];
    std::snprintf(line, sizeof(line), "mhsa-pe - mhsa-nope = %lld\n",
                  static_cast<long long>(totals[model::Variant::kMhsaPe] -
                                         totals[model::Variant::kMhsaNoPe]));
    out << line;
    std::snprintf(line, sizeof(line), "edgeattnet / unet = %.4f\n",
                  static_cast<double>(totals[model::Variant::kEdgeAttNet]) /
                      static_cast<double>(totals[model::Variant::kUnet]));
    out << line;
  }
  return kExitOk;
}

}  // namespace edgeattnet::cli
