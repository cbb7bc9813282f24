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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "linerec/ctc.hpp"
#include "linerec/synthesis.hpp"
#include "linerec/trainer.hpp"
#include "test_util.hpp"

using namespace linerec;
using linerec_test::TempDir;

namespace {

struct ToyData {
  Charset charset = synthetic_charset(5);
  std::vector<PreparedSample> train;
  std::vector<PreparedSample> eval;
};

ToyData make_toy_data(int n_train, int n_eval, uint64_t seed) {
  ToyData data;
  Rng rng(seed);
  const GlyphStore store = procedural_glyphs(5, 4, 18, rng);
  TemplateLayout layout;
  layout.line_height = 32;
  layout.min_boxes = 2;
  layout.max_boxes = 4;
  layout.box_width = 16;
  layout.box_height = 24;
  const auto templates = make_blank_templates(8, layout, rng);

  auto emit = [&](int count, std::vector<PreparedSample>& out, const char* tag) {
    for (int i = 0; i < count; ++i) {
      Rng sample_rng = rng.split(static_cast<uint64_t>(i) + 1000);
      LineSample line = synthesize_line(templates[static_cast<size_t>(i) % templates.size()],
                                        store, data.charset, sample_rng);
      line.id = std::string(tag) + std::to_string(i);
      out.push_back(prepare_sample(line, data.charset, 32));
    }
  };
  emit(n_train, data.train, "train");
  emit(n_eval, data.eval, "eval");
  return data;
}

ArchConfig toy_arch(int vocab) {
  ArchConfig config;
  config.family = ArchFamily::kResidualVariant;
  config.block_digits = {1, 1, 1, 1};
  config.stage_channels = {4, 4, 8, 8};
  config.input_height = 32;
  config.vocab_size = vocab;
  config.dropout.rates = {0.0, 0.0, 0.0, 0.0, 0.0};
  return config;
}

std::vector<float> snapshot_params(Network& net) {
  std::vector<float> out;
  for (auto& slot : net.params()) {
    out.insert(out.end(), slot.value->data(), slot.value->data() + slot.value->numel());
  }
  return out;
}

}  // namespace

TEST_CASE("sgd_step worked examples") {
  {
    Tensor w = Tensor::from({1}, {1.0f});
    Tensor g = Tensor::from({1}, {0.5f});
    Tensor v({1});
    sgd_step(w, g, v, 0.1, 0.9, 0.0);
    CHECK(v.at(0) == doctest::Approx(0.5));
    CHECK(w.at(0) == doctest::Approx(0.95));
  }
  {
    Tensor w = Tensor::from({1}, {1.0f});
    Tensor g = Tensor::from({1}, {0.0f});
    Tensor v({1});
    sgd_step(w, g, v, 0.1, 0.0, 0.1);
    CHECK(w.at(0) == doctest::Approx(0.99));  // pure decay
  }
  {
    Tensor w = Tensor::from({1}, {10.0f});
    Tensor g = Tensor::from({1}, {1.0f});
    Tensor v({1});
    sgd_step(w, g, v, 1.0, 0.9, 0.0);
    sgd_step(w, g, v, 1.0, 0.9, 0.0);
    CHECK(v.at(0) == doctest::Approx(1.9));
    CHECK(w.at(0) == doctest::Approx(10.0 - 1.0 - 1.9));
  }
  {
    Tensor w = Tensor::from({2}, {1.0f, 2.0f});
    Tensor g = Tensor::from({1}, {1.0f});
    Tensor v({2});
    CHECK_THROWS(sgd_step(w, g, v, 0.1, 0.9, 0.0));
  }
}

TEST_CASE("plateau scheduler decays after flat windows and resets on improvement") {
  {
    PlateauScheduler sched(1e-5, 10, 0.1);
    sched.feed(0.5);  // sets the best
    for (int i = 0; i < 9; ++i) CHECK(sched.feed(0.5) == doctest::Approx(1e-5));
    CHECK(sched.feed(0.5) == doctest::Approx(1e-6));  // 10th flat eval decays
  }
  {
    PlateauScheduler sched(1e-5, 10, 0.1);
    sched.feed(0.5);
    for (int i = 0; i < 9; ++i) sched.feed(0.5);
    CHECK(sched.feed(0.6) == doctest::Approx(1e-5));  // improvement resets
    CHECK(sched.bad_count() == 0);
    for (int i = 0; i < 9; ++i) sched.feed(0.6);
    CHECK(sched.lr() == doctest::Approx(1e-5));
  }
  {
    PlateauScheduler sched(1e-3, 5, 0.1);
    sched.feed(0.9);
    for (int i = 0; i < 5; ++i) sched.feed(0.9);
    CHECK(sched.lr() == doctest::Approx(1e-4));  // patience 5 variant
  }
}

TEST_CASE("scheduler learning rate is non-increasing") {
  Rng rng(3);
  PlateauScheduler sched(1.0, 3, 0.5);
  double prev = sched.lr();
  for (int i = 0; i < 200; ++i) {
    const double lr = sched.feed(rng.uniform());
    CHECK(lr <= prev + 1e-15);
    prev = lr;
  }
}

TEST_CASE("loss on a fixed batch decreases over the first steps") {
  ToyData data = make_toy_data(4, 2, 71);
  ArchConfig config = toy_arch(data.charset.size());
  Rng init(5);
  Network net = build_network<float>(config, init);

  const Batch batch = make_batch(std::span(data.train.data(), 4));
  auto slots = net.params();
  std::vector<Tensor> velocity;
  for (auto& s : slots) velocity.emplace_back(s.value->shape());

  Rng fwd(7);
  std::vector<double> losses;
  for (int step = 0; step < 5; ++step) {
    const Tensor logits = net.forward(batch.images, Mode::kTrain, fwd);
    const BatchCtcResult ctc = ctc_batch_loss(logits, batch.labels, batch.seq_lens);
    REQUIRE(ctc.finite_count > 0);
    losses.push_back(ctc.mean_nll);
    net.zero_grad();
    net.backward(ctc.grad_logits);
    for (size_t i = 0; i < slots.size(); ++i) {
      sgd_step(*slots[i].value, *slots[i].grad, velocity[i], 5e-3, 0.9, 1e-4);
    }
  }
  for (size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("a batch of infeasible samples advances no parameters") {
  ToyData data = make_toy_data(3, 2, 73);
  // Make every training transcription impossible to align: labels much longer
  // than the sequence length.
  for (auto& s : data.train) {
    s.labels.assign(64, 1);
  }
  ArchConfig config = toy_arch(data.charset.size());
  Rng init(9);
  Network net = build_network<float>(config, init);
  const std::vector<float> before = snapshot_params(net);

  TrainConfig tc;
  tc.batch_size = 3;
  tc.max_epochs = 1;
  tc.initial_lr = 1e-2;
  tc.seed = 1;
  CHECK_THROWS_AS(train(net, data.train, data.eval, data.charset, tc, {}),
                  TrainAbortedError);
  CHECK(snapshot_params(net) == before);  // bitwise unchanged
}

TEST_CASE("training writes logs, improves CER, and checkpoints round-trip") {
  TempDir dir("train");
  ToyData data = make_toy_data(24, 6, 77);
  ArchConfig config = toy_arch(data.charset.size());
  Rng init(11);
  Network net = build_network<float>(config, init);

  const EvalResult untrained = evaluate(net, data.eval, data.charset);
  CHECK(untrained.corpus.micro > 0.5);  // random init decodes junk
  CHECK(untrained.predictions.size() == data.eval.size());

  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_epochs = 6;
  tc.initial_lr = 5e-3;
  tc.plateau_patience = 5;
  tc.seed = 42;
  tc.strict = true;
  const TrainResult result = train(net, data.train, data.eval, data.charset, tc,
                                   dir.path());
  CHECK(result.log.size() == 6);
  CHECK(result.best_cer < untrained.corpus.micro);
  REQUIRE(std::filesystem::exists(dir.path() / "best.ckpt"));
  REQUIRE(std::filesystem::exists(dir.path() / "last.ckpt"));
  REQUIRE(std::filesystem::exists(dir.path() / "train_log.jsonl"));

  // Checkpoint round trip: restored network evaluates identically.
  const EvalResult direct = evaluate(net, data.eval, data.charset);
  const LoadedCheckpoint ckpt = load_checkpoint(dir.path() / "last.ckpt");
  CHECK(ckpt.charset_digest == data.charset.digest());
  Network restored = restore_network(ckpt);
  const EvalResult loaded = evaluate(restored, data.eval, data.charset);
  CHECK(loaded.corpus.micro == direct.corpus.micro);
  for (size_t i = 0; i < loaded.predictions.size(); ++i) {
    CHECK(loaded.predictions[i].hypothesis == direct.predictions[i].hypothesis);
  }

  // Predictions file has one row per sample.
  write_predictions(dir.path() / "predictions.tsv", loaded);
  const std::string text = linerec_test::read_file(dir.path() / "predictions.tsv");
  CHECK(std::count(text.begin(), text.end(), '\n') ==
        static_cast<int64_t>(data.eval.size()));
}

TEST_CASE("identical seeds reproduce the training log byte for byte") {
  ToyData data = make_toy_data(12, 4, 79);
  ArchConfig config = toy_arch(data.charset.size());
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_epochs = 3;
  tc.initial_lr = 3e-3;
  tc.seed = 7;
  tc.strict = true;

  auto run = [&]() {
    Rng init(13);
    Network net = build_network<float>(config, init);
    const TrainResult result = train(net, data.train, data.eval, data.charset, tc, {});
    std::string log;
    for (const EpochLog& e : result.log) log += e.to_json(true) + "\n";
    return log;
  };
  CHECK(run() == run());
}

TEST_CASE("resume from a checkpoint continues the exact run") {
  TempDir full_dir("full"), head_dir("head"), tail_dir("tail");
  ToyData data = make_toy_data(12, 4, 83);
  ArchConfig config = toy_arch(data.charset.size());
  TrainConfig tc;
  tc.batch_size = 4;
  tc.initial_lr = 3e-3;
  tc.seed = 21;
  tc.strict = true;

  Rng init_a(17);
  Network net_full = build_network<float>(config, init_a);
  tc.max_epochs = 4;
  const TrainResult full = train(net_full, data.train, data.eval, data.charset, tc,
                                 full_dir.path());

  Rng init_b(17);
  Network net_head = build_network<float>(config, init_b);
  tc.max_epochs = 2;
  train(net_head, data.train, data.eval, data.charset, tc, head_dir.path());

  const LoadedCheckpoint ckpt = load_checkpoint(head_dir.path() / "last.ckpt");
  Network net_tail = restore_network(ckpt);
  ResumePoint resume{ckpt.state, ckpt.velocity};
  tc.max_epochs = 4;
  const TrainResult tail = train(net_tail, data.train, data.eval, data.charset, tc,
                                 tail_dir.path(), &resume);

  REQUIRE(full.log.size() == 4);
  REQUIRE(tail.log.size() == 2);
  CHECK(tail.log[0].to_json(true) == full.log[2].to_json(true));
  CHECK(tail.log[1].to_json(true) == full.log[3].to_json(true));
}

TEST_CASE("train validates inputs") {
  ToyData data = make_toy_data(4, 2, 89);
  ArchConfig config = toy_arch(data.charset.size() + 3);  // vocab mismatch
  Rng init(19);
  Network net = build_network<float>(config, init);
  TrainConfig tc;
  tc.max_epochs = 1;
  CHECK_THROWS_WITH_AS(train(net, data.train, data.eval, data.charset, tc, {}),
                       doctest::Contains("vocab"), std::invalid_argument);

  TrainConfig bad;
  bad.lr_factor = 1.5;
  CHECK_THROWS(bad.validate());
  bad = TrainConfig{};
  bad.batch_size = 0;
  CHECK_THROWS(bad.validate());
}
