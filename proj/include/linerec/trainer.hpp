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

#ifndef LINEREC_TRAINER_HPP_
#define LINEREC_TRAINER_HPP_

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linerec/checkpoint.hpp"
#include "linerec/datapipe.hpp"
#include "linerec/metrics.hpp"

namespace linerec {

struct TrainConfig {
  int batch_size = 4;
  double initial_lr = 1e-5;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int plateau_patience = 10;  // 5 when synthetic data is part of training
  double lr_factor = 0.1;
  int max_epochs = 50;
  int eval_every = 1;
  uint64_t seed = 0;
  bool strict = false;              // deterministic logs (no wall-clock fields)
  bool grad_clip_enabled = false;   // off by default
  double grad_clip = 5.0;
  double target_cer = -1.0;         // >= 0: stop once eval CER reaches it
  int eval_batch_size = 8;

  void validate() const;
};

// Heavy-ball momentum with the decay folded into the gradient:
//   v <- momentum*v + grad + weight_decay*param;  param <- param - lr*v
void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
              double momentum, double weight_decay);

// Tracks an accuracy-like metric (higher is better); multiplies the rate by
// `factor` after `patience` consecutive evals without strict improvement,
// then resets the window.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, int patience, double factor);

  double feed(double metric);
  double lr() const { return lr_; }
  int bad_count() const { return bad_; }
  void restore(double lr, int bad, double best_metric);

 private:
  double lr_;
  int patience_;
  double factor_;
  int bad_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  int skipped_steps = 0;
  int infeasible_samples = 0;
  double lr = 0.0;
  bool evaluated = false;
  double cer = 0.0;
  double best_cer = 0.0;
  double seconds = 0.0;  // omitted from the log file in strict mode

  std::string to_json(bool strict) const;
};

struct Prediction {
  std::string id;
  std::string reference;
  std::string hypothesis;
  double cer = 0.0;
};

struct EvalResult {
  CorpusCer corpus;
  std::vector<Prediction> predictions;  // in dataset order
};

// Greedy-decodes every sample at its own sequence length (Eval mode,
// width-bucketed batches) and computes the micro-averaged corpus CER.
EvalResult evaluate(Network& net, std::span<const PreparedSample> samples,
                    const Charset& charset, int batch_size = 8);

void write_predictions(const std::filesystem::path& path, const EvalResult& result);

// Raised when an epoch cannot take a single optimizer step.
struct TrainAbortedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResumePoint {
  TrainerState state;
  std::vector<std::pair<std::string, Tensor>> velocity;
};

struct TrainResult {
  std::vector<EpochLog> log;
  double best_cer = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  std::filesystem::path best_checkpoint;
  std::filesystem::path log_file;
};

// Full training loop: width-bucketed seeded shuffling, forward, batch-mean
// CTC loss, backward, SGD step; periodic evaluation drives the plateau
// scheduler (on 1 - CER) and best-checkpoint selection (lowest CER).
// out_dir receives train_log.jsonl, last.ckpt and best.ckpt; pass an empty
// path to keep everything in memory. Bit-reproducible for a fixed
// (config, seed, data).
TrainResult train(Network& net, std::span<const PreparedSample> train_set,
                  std::span<const PreparedSample> eval_set,
                  const Charset& charset, const TrainConfig& config,
                  const std::filesystem::path& out_dir,
                  const ResumePoint* resume = nullptr, bool verbose = false);

}  // namespace linerec

#endif  // LINEREC_TRAINER_HPP_
