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

#include "linerec/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "linerec/ctc.hpp"

namespace linerec {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (plateau_patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (lr_factor <= 0.0 || lr_factor >= 1.0) {
    throw std::invalid_argument("TrainConfig: lr_factor must be in (0, 1)");
  }
  if (initial_lr <= 0.0) throw std::invalid_argument("TrainConfig: initial_lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
  if (eval_batch_size < 1) throw std::invalid_argument("TrainConfig: eval_batch_size must be >= 1");
}

void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
              double momentum, double weight_decay) {
  if (!param.same_shape(grad) || !param.same_shape(velocity)) {
    throw std::invalid_argument("sgd_step: shape mismatch");
  }
  float* p = param.data();
  const float* g = grad.data();
  float* v = velocity.data();
  const float m = static_cast<float>(momentum);
  const float wd = static_cast<float>(weight_decay);
  const float step = static_cast<float>(lr);
  for (int64_t i = 0; i < param.numel(); ++i) {
    v[i] = m * v[i] + g[i] + wd * p[i];
    p[i] -= step * v[i];
  }
}

PlateauScheduler::PlateauScheduler(double initial_lr, int patience, double factor)
    : lr_(initial_lr), patience_(patience), factor_(factor) {}

double PlateauScheduler::feed(double metric) {
  if (metric > best_) {
    best_ = metric;
    bad_ = 0;
  } else {
    ++bad_;
    if (bad_ >= patience_) {
      lr_ *= factor_;
      bad_ = 0;
    }
  }
  return lr_;
}

void PlateauScheduler::restore(double lr, int bad, double best_metric) {
  lr_ = lr;
  bad_ = bad;
  best_ = best_metric;
}

std::string EpochLog::to_json(bool strict) const {
  // Hand-rolled formatting keeps the log byte-stable across runs.
  char buf[512];
  std::string out = "{";
  std::snprintf(buf, sizeof buf, "\"epoch\":%d,\"loss\":%.9g,\"lr\":%.9g,", epoch, loss, lr);
  out += buf;
  std::snprintf(buf, sizeof buf, "\"skipped_steps\":%d,\"infeasible\":%d", skipped_steps,
                infeasible_samples);
  out += buf;
  if (evaluated) {
    std::snprintf(buf, sizeof buf, ",\"cer\":%.9g,\"best_cer\":%.9g", cer, best_cer);
    out += buf;
  }
  if (!strict) {
    std::snprintf(buf, sizeof buf, ",\"sec\":%.3f", seconds);
    out += buf;
  }
  out += "}";
  return out;
}

EvalResult evaluate(Network& net, std::span<const PreparedSample> samples,
                    const Charset& charset, int batch_size) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  Rng unused(0);
  std::vector<std::vector<int>> decoded(samples.size());

  Rng no_shuffle(0);
  const auto batches = bucket_by_width(samples, batch_size, no_shuffle, /*shuffle=*/false);
  for (const auto& group : batches) {
    std::vector<PreparedSample> members;
    members.reserve(group.size());
    for (int idx : group) members.push_back(samples[static_cast<size_t>(idx)]);
    const Batch batch = make_batch(members);
    const Tensor logits = net.forward(batch.images, Mode::kEval, unused);
    const int T = logits.dim(0);
    const int C = logits.dim(2);
    for (size_t m = 0; m < group.size(); ++m) {
      Tensor per_sample({T, C});
      for (int t = 0; t < T; ++t) {
        const float* src = logits.data() + (static_cast<int64_t>(t) * logits.dim(1) +
                                            static_cast<int64_t>(m)) * C;
        std::copy(src, src + C, per_sample.data() + static_cast<int64_t>(t) * C);
      }
      decoded[static_cast<size_t>(group[m])] =
          greedy_decode(per_sample, batch.seq_lens[m]);
    }
  }

  std::vector<CerPair> pairs;
  pairs.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    pairs.push_back({samples[i].id, samples[i].labels, decoded[i]});
  }
  EvalResult result;
  result.corpus = corpus_cer(pairs);
  result.predictions.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    result.predictions.push_back({samples[i].id, charset.decode(samples[i].labels),
                                  charset.decode(decoded[i]),
                                  result.corpus.samples[i].cer});
  }
  return result;
}

void write_predictions(const std::filesystem::path& path, const EvalResult& result) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write predictions " + path.string());
  char cer_buf[32];
  for (const Prediction& p : result.predictions) {
    std::snprintf(cer_buf, sizeof cer_buf, "%.6f", p.cer);
    out << p.id << "\t" << p.reference << "\t" << p.hypothesis << "\t" << cer_buf << "\n";
  }
}

TrainResult train(Network& net, std::span<const PreparedSample> train_set,
                  std::span<const PreparedSample> eval_set,
                  const Charset& charset, const TrainConfig& config,
                  const std::filesystem::path& out_dir,
                  const ResumePoint* resume, bool verbose) {
  config.validate();
  if (train_set.empty() || eval_set.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (net.config.vocab_size != charset.size()) {
    throw std::invalid_argument("train: network vocab " +
                                std::to_string(net.config.vocab_size) +
                                " does not match charset size " +
                                std::to_string(charset.size()));
  }

  const bool to_disk = !out_dir.empty();
  if (to_disk) std::filesystem::create_directories(out_dir);

  Rng train_rng(config.seed);
  PlateauScheduler scheduler(config.initial_lr, config.plateau_patience, config.lr_factor);
  auto slots = net.params();
  std::vector<Tensor> velocity;
  velocity.reserve(slots.size());
  for (auto& slot : slots) velocity.emplace_back(slot.value->shape());

  TrainResult result;
  int start_epoch = 1;
  if (resume != nullptr) {
    train_rng.set_state(resume->state.rng_state);
    start_epoch = resume->state.epoch + 1;
    result.best_cer = resume->state.best_cer >= 0
                          ? resume->state.best_cer
                          : std::numeric_limits<double>::infinity();
    scheduler.restore(resume->state.lr, resume->state.plateau_bad,
                      resume->state.best_cer >= 0 ? 1.0 - resume->state.best_cer
                                                  : -std::numeric_limits<double>::infinity());
    if (resume->velocity.size() != slots.size()) {
      throw std::invalid_argument("resume: velocity entries do not match parameters");
    }
    for (size_t i = 0; i < slots.size(); ++i) {
      if (resume->velocity[i].first != slots[i].name ||
          !resume->velocity[i].second.same_shape(*slots[i].value)) {
        throw std::invalid_argument("resume: velocity '" + resume->velocity[i].first +
                                    "' does not match parameter '" + slots[i].name + "'");
      }
      velocity[i] = resume->velocity[i].second;
    }
  }

  std::ofstream log_file;
  if (to_disk) {
    result.log_file = out_dir / "train_log.jsonl";
    log_file.open(result.log_file,
                  std::ios::binary | (resume != nullptr ? std::ios::app : std::ios::trunc));
    if (!log_file) throw std::runtime_error("cannot write " + result.log_file.string());
  }

  auto save_state = [&](const std::filesystem::path& path, int epoch) {
    TrainerState state;
    state.epoch = epoch;
    state.best_cer = std::isfinite(result.best_cer) ? result.best_cer : -1.0;
    state.lr = scheduler.lr();
    state.plateau_bad = scheduler.bad_count();
    state.rng_state = train_rng.state();
    std::vector<std::pair<std::string, Tensor>> vel;
    vel.reserve(slots.size());
    for (size_t i = 0; i < slots.size(); ++i) vel.emplace_back(slots[i].name, velocity[i]);
    save_checkpoint(path, net, charset.digest(), state, vel);
  };

  bool warned_infeasible = false;
  for (int epoch = start_epoch; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog entry;
    entry.epoch = epoch;

    const auto batches = bucket_by_width(train_set, config.batch_size, train_rng);
    double loss_sum = 0.0;
    int64_t loss_count = 0;
    int steps_taken = 0;

    for (const auto& group : batches) {
      std::vector<PreparedSample> members;
      members.reserve(group.size());
      for (int idx : group) members.push_back(train_set[static_cast<size_t>(idx)]);
      const Batch batch = make_batch(members);

      const Tensor logits = net.forward(batch.images, Mode::kTrain, train_rng);
      const BatchCtcResult ctc = ctc_batch_loss(logits, batch.labels, batch.seq_lens);
      entry.infeasible_samples += ctc.infeasible_count;
      if (ctc.infeasible_count > 0 && !warned_infeasible) {
        warned_infeasible = true;
        std::cerr << "warning: skipping samples whose labels cannot align within "
                     "their sequence length\n";
      }
      if (ctc.finite_count == 0) {
        ++entry.skipped_steps;
        continue;
      }
      loss_sum += ctc.mean_nll * ctc.finite_count;
      loss_count += ctc.finite_count;

      net.zero_grad();
      net.backward(ctc.grad_logits);

      bool finite = true;
      for (auto& slot : slots) {
        if (!all_finite(*slot.grad)) {
          finite = false;
          break;
        }
      }
      if (!finite) {
        ++entry.skipped_steps;
        std::cerr << "warning: non-finite gradients, skipping step\n";
        continue;
      }
      if (config.grad_clip_enabled) {
        double norm_sq = 0.0;
        for (auto& slot : slots) {
          const float* g = slot.grad->data();
          for (int64_t i = 0; i < slot.grad->numel(); ++i) {
            norm_sq += static_cast<double>(g[i]) * g[i];
          }
        }
        const double norm = std::sqrt(norm_sq);
        if (norm > config.grad_clip) {
          const float scale = static_cast<float>(config.grad_clip / norm);
          for (auto& slot : slots) {
            float* g = slot.grad->data();
            for (int64_t i = 0; i < slot.grad->numel(); ++i) g[i] *= scale;
          }
        }
      }
      for (size_t i = 0; i < slots.size(); ++i) {
        sgd_step(*slots[i].value, *slots[i].grad, velocity[i], scheduler.lr(),
                 config.momentum, config.weight_decay);
      }
      ++steps_taken;
    }

    entry.loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    entry.lr = scheduler.lr();

    bool reached_target = false;
    if (epoch % config.eval_every == 0) {
      const EvalResult eval = evaluate(net, eval_set, charset, config.eval_batch_size);
      entry.evaluated = true;
      entry.cer = eval.corpus.micro;
      scheduler.feed(1.0 - eval.corpus.micro);
      if (eval.corpus.micro < result.best_cer) {
        result.best_cer = eval.corpus.micro;
        result.best_epoch = epoch;
        if (to_disk) {
          result.best_checkpoint = out_dir / "best.ckpt";
          save_state(result.best_checkpoint, epoch);
        }
      }
      entry.best_cer = result.best_cer;
      if (config.target_cer >= 0.0 && eval.corpus.micro <= config.target_cer) {
        reached_target = true;
      }
    }

    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    if (to_disk) {
      log_file << entry.to_json(config.strict) << "\n";
      log_file.flush();
      save_state(out_dir / "last.ckpt", epoch);
    }
    if (verbose) {
      std::cout << entry.to_json(/*strict=*/false) << std::endl;
    }

    if (steps_taken == 0) {
      throw TrainAbortedError("epoch " + std::to_string(epoch) +
                              " took no optimizer steps (all batches skipped)");
    }
    if (reached_target) break;
  }
  return result;
}

}  // namespace linerec
