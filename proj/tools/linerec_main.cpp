/* Copyright 2026 The Linerec Authors. All Rights Reserved.

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

// linerec CLI: synthesize datasets, train, evaluate and inspect recognizers.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 training
// aborted (no step could be taken), 5 checkpoint/charset digest mismatch.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "linerec/checkpoint.hpp"
#include "linerec/kernels.hpp"
#include "linerec/synthesis.hpp"
#include "linerec/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitAborted = 4;
constexpr int kExitDigest = 5;

// JSON config overlay: values apply wherever the flag was not given on the
// command line; unknown keys are rejected.
class ConfigOverlay {
 public:
  ConfigOverlay(CLI::App* cmd, const std::string& path) : cmd_(cmd) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    in >> values_;
    if (!values_.is_object()) {
      throw std::invalid_argument("config file must hold a JSON object");
    }
  }

  template <typename T>
  void apply(const std::string& flag, const std::string& key, T& var) {
    known_.insert(key);
    if (!values_.contains(key)) return;
    if (cmd_->count(flag) > 0) return;  // flags override file values
    var = values_.at(key).get<T>();
  }

  void finish() const {
    for (const auto& [key, value] : values_.items()) {
      if (!known_.count(key)) {
        throw std::invalid_argument("unknown config key '" + key + "'");
      }
    }
  }

 private:
  CLI::App* cmd_;
  json values_ = json::object();
  std::set<std::string> known_;
};

std::array<int, 4> parse_blocks(const std::string& digits) {
  std::array<int, 4> blocks{};
  std::string cleaned;
  for (char c : digits) {
    if (c != ',' && c != ' ') cleaned += c;
  }
  if (cleaned.size() != 4) {
    throw std::invalid_argument("--blocks expects 4 digits (e.g. 2451), got '" +
                                digits + "'");
  }
  for (size_t i = 0; i < 4; ++i) {
    if (cleaned[i] < '1' || cleaned[i] > '9') {
      throw std::invalid_argument("--blocks digits must be 1..9, got '" + digits + "'");
    }
    blocks[i] = cleaned[i] - '0';
  }
  return blocks;
}

std::array<int, 4> parse_channels(const std::string& text) {
  std::array<int, 4> out{};
  std::stringstream ss(text);
  std::string item;
  size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 4) throw std::invalid_argument("--channels expects 4 values");
    out[i++] = std::stoi(item);
  }
  if (i != 4) throw std::invalid_argument("--channels expects 4 values");
  return out;
}

std::array<double, 5> parse_dropout(const std::string& text) {
  std::array<double, 5> out{};
  std::stringstream ss(text);
  std::string item;
  size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 5) throw std::invalid_argument("--dropout expects 5 rates");
    out[i++] = std::stod(item);
  }
  if (i != 5) throw std::invalid_argument("--dropout expects 5 rates");
  return out;
}

struct ArchFlags {
  std::string arch = "resnet";
  std::string blocks = "1111";
  std::string channels = "64,128,256,512";
  int height = 128;
  std::string dropout = "0.0,0.3,0.3,0.3,0.9";
  std::string flatten = "ch";

  void add_options(CLI::App* cmd) {
    cmd->add_option("--arch", arch, "Architecture family: vgg16 | resnet")
        ->check(CLI::IsMember({"vgg16", "resnet"}));
    cmd->add_option("--blocks", blocks, "Residual units per stage, e.g. 2451");
    cmd->add_option("--channels", channels, "Stage channels, e.g. 64,128,256,512");
    cmd->add_option("--height", height, "Input height in pixels (multiple of 16)");
    cmd->add_option("--dropout", dropout,
                    "Dropout schedule: stages 1-4 and linear input");
    cmd->add_option("--flatten", flatten, "Flatten mode: ch | hw")
        ->check(CLI::IsMember({"ch", "hw"}));
  }

  void apply_overlay(ConfigOverlay& overlay) {
    overlay.apply("--arch", "arch", arch);
    overlay.apply("--blocks", "blocks", blocks);
    overlay.apply("--channels", "channels", channels);
    overlay.apply("--height", "height", height);
    overlay.apply("--dropout", "dropout", dropout);
    overlay.apply("--flatten", "flatten", flatten);
  }

  linerec::ArchConfig to_config(int vocab_size) const {
    linerec::ArchConfig config;
    config.family = arch == "vgg16" ? linerec::ArchFamily::kVgg16Baseline
                                    : linerec::ArchFamily::kResidualVariant;
    config.block_digits = parse_blocks(blocks);
    config.stage_channels = parse_channels(channels);
    config.input_height = height;
    config.vocab_size = vocab_size;
    config.dropout.rates = parse_dropout(dropout);
    config.flatten_mode = flatten == "ch" ? linerec::FlattenMode::kChannelHeight
                                          : linerec::FlattenMode::kHeightWidth;
    config.validate();
    return config;
  }
};

void write_resolved_config(const fs::path& out_dir, const ordered_json& resolved) {
  std::ofstream out(out_dir / "config.json");
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "config.json").string());
  out << resolved.dump(2) << "\n";
}

std::vector<linerec::PreparedSample> load_prepared(const fs::path& manifest,
                                                   const linerec::Charset& charset,
                                                   int height,
                                                   const linerec::NormalizeParams& norm,
                                                   bool verbose) {
  linerec::LoadReport report;
  const auto samples = linerec::load_dataset(manifest, charset, &report);
  if (!report.rejects.empty() && verbose) {
    for (const auto& r : report.rejects) {
      std::cerr << manifest.string() << ":" << r.line_number << ": rejected: "
                << r.detail << "\n";
    }
  }
  std::vector<linerec::PreparedSample> prepared;
  prepared.reserve(samples.size());
  for (const auto& s : samples) {
    prepared.push_back(linerec::prepare_sample(s, charset, height, norm));
  }
  return prepared;
}

struct SynthOpts {
  std::string config_path, out_dir, templates_dir, charset_path, format = "pgm";
  int classes = 20, per_class = 50, glyph_size = 40;
  int count = 0, eval_count = 0;
  int line_height = 64, min_chars = 3, max_chars = 8, box_width = 30, box_height = 46;
  uint64_t seed = 1;
};

void setup_synth(CLI::App* cmd) {
  auto o = std::make_shared<SynthOpts>();
  cmd->add_option("--config", o->config_path, "JSON config file (flags override)");
  cmd->add_option("--out", o->out_dir, "Output directory")->required();
  cmd->add_option("--count", o->count, "Number of training lines")->required();
  cmd->add_option("--eval-count", o->eval_count, "Also emit this many eval lines");
  cmd->add_option("--procedural-classes", o->classes, "Classes for procedural glyphs");
  cmd->add_option("--per-class", o->per_class, "Glyph samples per class");
  cmd->add_option("--glyph-size", o->glyph_size, "Procedural glyph canvas in pixels");
  cmd->add_option("--line-height", o->line_height, "Template line height");
  cmd->add_option("--min-chars", o->min_chars, "Minimum characters per line");
  cmd->add_option("--max-chars", o->max_chars, "Maximum characters per line");
  cmd->add_option("--box-width", o->box_width, "Nominal character box width");
  cmd->add_option("--box-height", o->box_height, "Nominal character box height");
  cmd->add_option("--templates", o->templates_dir,
                  "Directory of template images with JSON box sidecars");
  cmd->add_option("--charset", o->charset_path, "Existing charset file to reuse");
  cmd->add_option("--format", o->format, "Image format: pgm | png")
      ->check(CLI::IsMember({"pgm", "png"}));
  cmd->add_option("--seed", o->seed, "Run seed");

  cmd->callback([cmd, o]() {
    ConfigOverlay overlay(cmd, o->config_path);
    overlay.apply("--out", "out", o->out_dir);
    overlay.apply("--count", "count", o->count);
    overlay.apply("--eval-count", "eval_count", o->eval_count);
    overlay.apply("--procedural-classes", "procedural_classes", o->classes);
    overlay.apply("--per-class", "per_class", o->per_class);
    overlay.apply("--glyph-size", "glyph_size", o->glyph_size);
    overlay.apply("--line-height", "line_height", o->line_height);
    overlay.apply("--min-chars", "min_chars", o->min_chars);
    overlay.apply("--max-chars", "max_chars", o->max_chars);
    overlay.apply("--box-width", "box_width", o->box_width);
    overlay.apply("--box-height", "box_height", o->box_height);
    overlay.apply("--templates", "templates", o->templates_dir);
    overlay.apply("--charset", "charset", o->charset_path);
    overlay.apply("--format", "format", o->format);
    overlay.apply("--seed", "seed", o->seed);
    overlay.finish();

    fs::create_directories(o->out_dir);
    linerec::Rng rng(o->seed);

    linerec::Charset charset = o->charset_path.empty()
                                   ? linerec::synthetic_charset(o->classes)
                                   : linerec::Charset::load(o->charset_path);
    if (o->charset_path.empty()) {
      charset.save(fs::path(o->out_dir) / "charset.txt");
    }
    if (o->classes > charset.size()) {
      throw std::invalid_argument(
          "charset has fewer characters than --procedural-classes");
    }

    const linerec::GlyphStore store =
        linerec::procedural_glyphs(o->classes, o->per_class, o->glyph_size, rng);

    std::vector<linerec::Template> templates;
    if (o->templates_dir.empty()) {
      linerec::TemplateLayout layout;
      layout.line_height = o->line_height;
      layout.min_boxes = o->min_chars;
      layout.max_boxes = o->max_chars;
      layout.box_width = o->box_width;
      layout.box_height = o->box_height;
      templates = linerec::make_blank_templates(
          std::max(1, std::min(o->count, 64)), layout, rng);
    } else {
      std::vector<std::pair<linerec::ImageU8, std::vector<linerec::CharBox>>> annotated;
      for (const auto& entry : fs::directory_iterator(o->templates_dir)) {
        if (entry.path().extension() != ".json") continue;
        for (const char* ext : {".png", ".pgm"}) {
          fs::path image_path = entry.path();
          image_path.replace_extension(ext);
          if (fs::exists(image_path)) {
            annotated.emplace_back(linerec::load_image(image_path),
                                   linerec::load_template_boxes(entry.path()));
            break;
          }
        }
      }
      if (annotated.empty()) {
        throw std::invalid_argument("no template sidecars found in " + o->templates_dir);
      }
      templates = linerec::extract_templates(annotated);
    }

    const auto fmt = o->format == "pgm" ? linerec::ImageFormat::kPgm
                                        : linerec::ImageFormat::kPng;
    const auto train_report = linerec::generate_corpus(
        templates, store, charset, o->count, o->out_dir, "train.tsv", rng, fmt);
    if (o->eval_count > 0) {
      linerec::generate_corpus(templates, store, charset, o->eval_count, o->out_dir,
                               "eval.tsv", rng, fmt);
    }

    ordered_json report;
    report["seed"] = o->seed;
    report["count"] = train_report.count;
    report["eval_count"] = o->eval_count;
    report["classes"] = o->classes;
    {
      ordered_json hist = ordered_json::object();
      for (const auto& [cls, n] : train_report.class_histogram) {
        hist[charset.lookup(cls)] = n;
      }
      report["class_histogram"] = hist;
    }
    {
      std::ofstream rep(fs::path(o->out_dir) / "report.json");
      rep << report.dump(2) << "\n";
    }

    ordered_json resolved;
    resolved["command"] = "synth";
    resolved["out"] = o->out_dir;
    resolved["count"] = o->count;
    resolved["eval_count"] = o->eval_count;
    resolved["procedural_classes"] = o->classes;
    resolved["per_class"] = o->per_class;
    resolved["glyph_size"] = o->glyph_size;
    resolved["line_height"] = o->line_height;
    resolved["min_chars"] = o->min_chars;
    resolved["max_chars"] = o->max_chars;
    resolved["box_width"] = o->box_width;
    resolved["box_height"] = o->box_height;
    resolved["format"] = o->format;
    resolved["seed"] = o->seed;
    write_resolved_config(o->out_dir, resolved);

    std::cout << "wrote " << o->count << " train lines";
    if (o->eval_count > 0) std::cout << " and " << o->eval_count << " eval lines";
    std::cout << " under " << o->out_dir << "\n";
  });
}

struct TrainOpts {
  std::string config_path, train_manifest, eval_manifest, charset_path, out_dir, resume_path;
  ArchFlags arch;
  linerec::TrainConfig train_config;
  double mean = 0.5, stddev = 0.5;
  double grad_clip = 0.0;
  int threads = 0;
  bool verbose = false;
};

void setup_train(CLI::App* cmd) {
  auto o = std::make_shared<TrainOpts>();
  cmd->add_option("--config", o->config_path, "JSON config file (flags override)");
  cmd->add_option("--train-manifest", o->train_manifest, "Training manifest")->required();
  cmd->add_option("--eval-manifest", o->eval_manifest, "Evaluation manifest")->required();
  cmd->add_option("--charset", o->charset_path, "Charset file")->required();
  cmd->add_option("--out", o->out_dir, "Output directory")->required();
  o->arch.add_options(cmd);
  cmd->add_option("--batch-size", o->train_config.batch_size, "Batch size");
  cmd->add_option("--lr", o->train_config.initial_lr, "Initial learning rate");
  cmd->add_option("--momentum", o->train_config.momentum, "SGD momentum");
  cmd->add_option("--weight-decay", o->train_config.weight_decay, "Weight decay");
  cmd->add_option("--patience", o->train_config.plateau_patience,
                  "Plateau patience in evals");
  cmd->add_option("--lr-factor", o->train_config.lr_factor, "Plateau decay factor");
  cmd->add_option("--epochs", o->train_config.max_epochs, "Maximum epochs");
  cmd->add_option("--eval-every", o->train_config.eval_every, "Evaluate every N epochs");
  cmd->add_option("--seed", o->train_config.seed, "Run seed");
  cmd->add_option("--target-cer", o->train_config.target_cer,
                  "Stop once eval CER reaches this value (< 0 disables)");
  cmd->add_flag("--strict", o->train_config.strict,
                "Strictly deterministic logs (no timing fields)");
  cmd->add_option("--grad-clip", o->grad_clip, "Enable global-norm gradient clipping");
  cmd->add_option("--mean", o->mean, "Normalization mean");
  cmd->add_option("--std", o->stddev, "Normalization std");
  cmd->add_option("--resume", o->resume_path, "Checkpoint to resume from");
  cmd->add_option("--threads", o->threads, "Worker threads (0 = library default)");
  cmd->add_flag("--verbose", o->verbose, "Echo per-epoch log lines");

  cmd->callback([cmd, o]() {
    ConfigOverlay overlay(cmd, o->config_path);
    overlay.apply("--train-manifest", "train_manifest", o->train_manifest);
    overlay.apply("--eval-manifest", "eval_manifest", o->eval_manifest);
    overlay.apply("--charset", "charset", o->charset_path);
    overlay.apply("--out", "out", o->out_dir);
    o->arch.apply_overlay(overlay);
    overlay.apply("--batch-size", "batch_size", o->train_config.batch_size);
    overlay.apply("--lr", "lr", o->train_config.initial_lr);
    overlay.apply("--momentum", "momentum", o->train_config.momentum);
    overlay.apply("--weight-decay", "weight_decay", o->train_config.weight_decay);
    overlay.apply("--patience", "patience", o->train_config.plateau_patience);
    overlay.apply("--lr-factor", "lr_factor", o->train_config.lr_factor);
    overlay.apply("--epochs", "epochs", o->train_config.max_epochs);
    overlay.apply("--eval-every", "eval_every", o->train_config.eval_every);
    overlay.apply("--seed", "seed", o->train_config.seed);
    overlay.apply("--target-cer", "target_cer", o->train_config.target_cer);
    overlay.apply("--strict", "strict", o->train_config.strict);
    overlay.apply("--grad-clip", "grad_clip", o->grad_clip);
    overlay.apply("--mean", "mean", o->mean);
    overlay.apply("--std", "std", o->stddev);
    overlay.apply("--resume", "resume", o->resume_path);
    overlay.apply("--threads", "threads", o->threads);
    overlay.finish();

    if (o->threads > 0) linerec::kernels::set_threads(o->threads);
    if (o->grad_clip > 0.0) {
      o->train_config.grad_clip_enabled = true;
      o->train_config.grad_clip = o->grad_clip;
    }

    const linerec::Charset charset = linerec::Charset::load(o->charset_path);
    const linerec::NormalizeParams norm{static_cast<float>(o->mean),
                                        static_cast<float>(o->stddev)};
    const linerec::ArchConfig arch_config = o->arch.to_config(charset.size());

    fs::create_directories(o->out_dir);
    ordered_json resolved;
    resolved["command"] = "train";
    resolved["train_manifest"] = o->train_manifest;
    resolved["eval_manifest"] = o->eval_manifest;
    resolved["charset"] = o->charset_path;
    resolved["out"] = o->out_dir;
    resolved["arch"] = linerec::arch_to_json(arch_config);
    resolved["batch_size"] = o->train_config.batch_size;
    resolved["lr"] = o->train_config.initial_lr;
    resolved["momentum"] = o->train_config.momentum;
    resolved["weight_decay"] = o->train_config.weight_decay;
    resolved["patience"] = o->train_config.plateau_patience;
    resolved["lr_factor"] = o->train_config.lr_factor;
    resolved["epochs"] = o->train_config.max_epochs;
    resolved["eval_every"] = o->train_config.eval_every;
    resolved["seed"] = o->train_config.seed;
    resolved["target_cer"] = o->train_config.target_cer;
    resolved["strict"] = o->train_config.strict;
    resolved["mean"] = o->mean;
    resolved["std"] = o->stddev;
    if (!o->resume_path.empty()) resolved["resume"] = o->resume_path;
    write_resolved_config(o->out_dir, resolved);

    const auto train_set = load_prepared(o->train_manifest, charset,
                                         arch_config.input_height, norm, o->verbose);
    const auto eval_set = load_prepared(o->eval_manifest, charset,
                                        arch_config.input_height, norm, o->verbose);

    linerec::Network net;
    linerec::ResumePoint resume;
    const linerec::ResumePoint* resume_ptr = nullptr;
    if (o->resume_path.empty()) {
      linerec::Rng init_rng(o->train_config.seed);
      net = linerec::build_network<float>(arch_config, init_rng);
    } else {
      const linerec::LoadedCheckpoint ckpt = linerec::load_checkpoint(o->resume_path);
      if (ckpt.charset_digest != charset.digest()) {
        std::cerr << "charset digest mismatch: checkpoint was trained with a "
                     "different charset\n";
        std::exit(kExitDigest);
      }
      net = linerec::restore_network(ckpt);
      resume.state = ckpt.state;
      resume.velocity = ckpt.velocity;
      resume_ptr = &resume;
    }

    const linerec::TrainResult result =
        linerec::train(net, train_set, eval_set, charset, o->train_config,
                       o->out_dir, resume_ptr, o->verbose);
    std::cout << "best eval CER " << result.best_cer << " at epoch "
              << result.best_epoch << "; checkpoints under " << o->out_dir << "\n";
  });
}

struct EvalOpts {
  std::string config_path, checkpoint_path, manifest_path, charset_path, out_dir;
  std::string train_log;
  double mean = 0.5, stddev = 0.5;
  int batch_size = 8;
  int threads = 0;
  bool emit_curve = false;
};

void setup_eval(CLI::App* cmd) {
  auto o = std::make_shared<EvalOpts>();
  cmd->add_option("--config", o->config_path, "JSON config file (flags override)");
  cmd->add_option("--checkpoint", o->checkpoint_path, "Checkpoint file")->required();
  cmd->add_option("--manifest", o->manifest_path, "Evaluation manifest")->required();
  cmd->add_option("--charset", o->charset_path, "Charset file")->required();
  cmd->add_option("--out", o->out_dir, "Output directory")->required();
  cmd->add_option("--batch-size", o->batch_size, "Evaluation batch size");
  cmd->add_option("--mean", o->mean, "Normalization mean");
  cmd->add_option("--std", o->stddev, "Normalization std");
  cmd->add_flag("--emit-curve", o->emit_curve,
                "Also write the per-epoch CER series from the training log");
  cmd->add_option("--train-log", o->train_log,
                  "Training log for --emit-curve (default: next to checkpoint)");
  cmd->add_option("--threads", o->threads, "Worker threads (0 = library default)");

  cmd->callback([cmd, o]() {
    ConfigOverlay overlay(cmd, o->config_path);
    overlay.apply("--checkpoint", "checkpoint", o->checkpoint_path);
    overlay.apply("--manifest", "manifest", o->manifest_path);
    overlay.apply("--charset", "charset", o->charset_path);
    overlay.apply("--out", "out", o->out_dir);
    overlay.apply("--batch-size", "batch_size", o->batch_size);
    overlay.apply("--mean", "mean", o->mean);
    overlay.apply("--std", "std", o->stddev);
    overlay.apply("--emit-curve", "emit_curve", o->emit_curve);
    overlay.apply("--train-log", "train_log", o->train_log);
    overlay.apply("--threads", "threads", o->threads);
    overlay.finish();

    if (o->threads > 0) linerec::kernels::set_threads(o->threads);
    const linerec::Charset charset = linerec::Charset::load(o->charset_path);
    const linerec::LoadedCheckpoint ckpt = linerec::load_checkpoint(o->checkpoint_path);
    if (ckpt.charset_digest != charset.digest()) {
      std::cerr << "charset digest mismatch: checkpoint was trained with a "
                   "different charset\n";
      std::exit(kExitDigest);
    }
    linerec::Network net = linerec::restore_network(ckpt);

    const linerec::NormalizeParams norm{static_cast<float>(o->mean),
                                        static_cast<float>(o->stddev)};
    const auto samples = load_prepared(o->manifest_path, charset,
                                       net.config.input_height, norm, false);
    const linerec::EvalResult result =
        linerec::evaluate(net, samples, charset, o->batch_size);

    fs::create_directories(o->out_dir);
    linerec::write_predictions(fs::path(o->out_dir) / "predictions.tsv", result);

    ordered_json resolved;
    resolved["command"] = "eval";
    resolved["checkpoint"] = o->checkpoint_path;
    resolved["manifest"] = o->manifest_path;
    resolved["charset"] = o->charset_path;
    resolved["out"] = o->out_dir;
    resolved["batch_size"] = o->batch_size;
    resolved["mean"] = o->mean;
    resolved["std"] = o->stddev;
    write_resolved_config(o->out_dir, resolved);

    if (o->emit_curve) {
      const fs::path log_path =
          o->train_log.empty()
              ? fs::path(o->checkpoint_path).parent_path() / "train_log.jsonl"
              : fs::path(o->train_log);
      std::ifstream in(log_path);
      if (!in) throw std::runtime_error("cannot open training log " + log_path.string());
      std::ofstream curve(fs::path(o->out_dir) / "cer_curve.tsv");
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        if (j.contains("cer")) {
          curve << j.at("epoch").get<int>() << "\t" << j.at("cer").get<double>() << "\n";
        }
      }
    }

    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", result.corpus.micro);
    std::cout << "corpus CER " << buf << " over " << result.predictions.size()
              << " samples (macro " << result.corpus.macro << ")\n";
  });
}

struct InspectOpts {
  std::string config_path, charset_path;
  ArchFlags arch;
  int vocab = 10;
  int width = 512;
};

void setup_inspect(CLI::App* cmd) {
  auto o = std::make_shared<InspectOpts>();
  cmd->add_option("--config", o->config_path, "JSON config file (flags override)");
  o->arch.add_options(cmd);
  cmd->add_option("--vocab", o->vocab, "Vocabulary size when no charset is given");
  cmd->add_option("--charset", o->charset_path, "Charset file (sets the vocabulary)");
  cmd->add_option("--width", o->width, "Probe input width (multiple of 16)");

  cmd->callback([cmd, o]() {
    ConfigOverlay overlay(cmd, o->config_path);
    o->arch.apply_overlay(overlay);
    overlay.apply("--vocab", "vocab", o->vocab);
    overlay.apply("--charset", "charset", o->charset_path);
    overlay.apply("--width", "width", o->width);
    overlay.finish();

    if (!o->charset_path.empty()) {
      o->vocab = linerec::Charset::load(o->charset_path).size();
    }
    const linerec::ArchConfig config = o->arch.to_config(o->vocab);

    std::cout << "layer                                    output shape\n";
    std::cout << "----------------------------------------------------\n";
    for (const auto& [name, shape] : linerec::shape_trace(config, o->width)) {
      std::printf("%-40s %s\n", name.c_str(),
                  linerec::Tensor::shape_to_string(shape).c_str());
    }

    linerec::Rng rng(0);
    linerec::Network net = linerec::build_network<float>(config, rng);
    const linerec::ParamCount pc = linerec::param_count(net);
    std::cout << "\nparameters by layer:\n";
    for (const auto& [name, n] : pc.per_layer) {
      if (n > 0) std::printf("%-40s %12lld\n", name.c_str(), static_cast<long long>(n));
    }
    std::printf("total parameters: %lld\n", static_cast<long long>(pc.total));
    std::cout << "sequence steps for width " << o->width << ": T = " << o->width / 16
              << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  // Keep worker threads spinning between the many short parallel regions of a
  // training step; a user-provided policy still wins.
  setenv("OMP_WAIT_POLICY", "ACTIVE", /*overwrite=*/0);
  CLI::App app{"convolutional text-line recognizer (CNN + CTC)"};
  app.require_subcommand(1);

  setup_synth(app.add_subcommand("synth", "Synthesize a labeled line dataset"));
  setup_train(app.add_subcommand("train", "Train a recognizer"));
  setup_eval(app.add_subcommand("eval", "Evaluate a checkpoint"));
  setup_inspect(app.add_subcommand("inspect", "Print architecture shapes and sizes"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const linerec::TrainAbortedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAborted;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
