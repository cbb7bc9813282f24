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
#include "linerec/layers.hpp"
#include "test_util.hpp"

using namespace linerec;

namespace {

// Uniform log-probabilities over C classes for T steps.
CtcProblem<double> uniform_problem(int T, int C, std::vector<int> labels) {
  CtcProblem<double> p;
  p.log_probs = Tensor64({T, C});
  p.log_probs.fill(-std::log(static_cast<double>(C)));
  p.labels = std::move(labels);
  p.valid_len = T;
  return p;
}

CtcProblem<double> random_problem(int T, int C, std::vector<int> labels, Rng& rng) {
  CtcProblem<double> p;
  p.log_probs = linerec_test::random_tensor<double>({T, C}, rng, -2.0, 2.0);
  p.log_probs = log_softmax(p.log_probs, 1);
  p.labels = std::move(labels);
  p.valid_len = T;
  return p;
}

// All label sequences of length <= max_len over classes {1..num}.
std::vector<std::vector<int>> all_label_seqs(int num, int max_len) {
  std::vector<std::vector<int>> out{{}};
  std::vector<std::vector<int>> frontier{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& seq : frontier) {
      for (int cls = 1; cls <= num; ++cls) {
        auto grown = seq;
        grown.push_back(cls);
        out.push_back(grown);
        next.push_back(std::move(grown));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("single-step problems have a single valid path") {
  Rng rng(1);
  CtcProblem<double> p = random_problem(1, 4, {2}, rng);
  const double nll = ctc_loss<double>(p, nullptr);
  CHECK(nll == doctest::Approx(-p.log_probs.at(0, 2)).epsilon(1e-12));
}

TEST_CASE("uniform two-step single-label worked example") {
  // Paths (a,a), (a,-), (-,a) at probability 1/4 each: nll = -ln 0.75.
  CtcProblem<double> p = uniform_problem(2, 2, {1});
  CHECK(ctc_loss<double>(p, nullptr) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK(ctc_brute_force(p) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("empty label sequence leaves only the all-blank path") {
  CtcProblem<double> p = uniform_problem(3, 2, {});
  CHECK(ctc_loss<double>(p, nullptr) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("adjacent repeats need a separating blank") {
  CtcProblem<double> p = uniform_problem(2, 3, {1, 1});
  CHECK(std::isinf(ctc_loss<double>(p, nullptr)));
  CHECK(std::isinf(ctc_brute_force(p)));
}

TEST_CASE("label validation") {
  CtcProblem<double> p = uniform_problem(3, 3, {0});
  CHECK_THROWS_WITH_AS(ctc_loss<double>(p, nullptr), doctest::Contains("blank"),
                       std::invalid_argument);
  p.labels = {3};
  CHECK_THROWS_WITH_AS(ctc_loss<double>(p, nullptr), doctest::Contains("label"),
                       std::invalid_argument);
  p.labels = {1};
  p.valid_len = 0;
  CHECK_THROWS(ctc_loss<double>(p, nullptr));
}

TEST_CASE("loss matches the brute-force oracle over a dense sweep") {
  Rng rng(7);
  for (int T = 1; T <= 5; ++T) {
    for (int C = 2; C <= 3; ++C) {
      for (const auto& labels : all_label_seqs(C - 1, 3)) {
        CtcProblem<double> p = random_problem(T, C, labels, rng);
        const double dp = ctc_loss<double>(p, nullptr);
        const double brute = ctc_brute_force(p);
        if (std::isinf(dp) || std::isinf(brute)) {
          CHECK(std::isinf(dp));
          CHECK(std::isinf(brute));
        } else {
          CHECK(std::abs(dp - brute) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("alpha/beta likelihood is constant over time") {
  Rng rng(9);
  CtcProblem<double> p = random_problem(6, 4, {1, 3, 3}, rng);
  CtcWorkspace<double> ws;
  ctc_loss<double>(p, &ws);
  const int U = static_cast<int>(ws.extended.size());
  for (int t = 0; t < p.valid_len; ++t) {
    double total = 0;
    for (int u = 0; u < U; ++u) {
      const double a = ws.log_alpha.at(u, t);
      const double b = ws.log_beta.at(u, t);
      if (std::isinf(a) || std::isinf(b)) continue;
      total += std::exp(a + b - p.log_probs.at(t, ws.extended[static_cast<size_t>(u)]));
    }
    CHECK(std::log(total) == doctest::Approx(ws.log_likelihood).epsilon(1e-8));
  }
}

TEST_CASE("gradient rows sum to zero and match one-hot posterior at T=1") {
  Rng rng(11);
  CtcProblem<double> p = random_problem(1, 5, {3}, rng);
  CtcWorkspace<double> ws;
  ctc_loss<double>(p, &ws);
  const Tensor64 grad = ctc_grad(p, ws);
  double row_sum = 0;
  for (int c = 0; c < 5; ++c) {
    row_sum += grad.at(0, c);
    const double softmax = std::exp(p.log_probs.at(0, c));
    const double expected = softmax - (c == 3 ? 1.0 : 0.0);
    CHECK(grad.at(0, c) == doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK(std::abs(row_sum) < 1e-12);
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(13);
  int checked = 0;
  for (int rep = 0; rep < 25; ++rep) {
    const int T = 1 + rng.uniform_int(5);
    const int C = 2 + rng.uniform_int(3);
    const int L = rng.uniform_int(3);
    std::vector<int> labels;
    for (int i = 0; i < L; ++i) labels.push_back(1 + rng.uniform_int(C - 1));

    Tensor64 logits = linerec_test::random_tensor<double>({T, C}, rng, -1.5, 1.5);
    auto loss_of = [&](const Tensor64& z) {
      CtcProblem<double> p;
      p.log_probs = log_softmax(z, 1);
      p.labels = labels;
      p.valid_len = T;
      return ctc_loss<double>(p, nullptr);
    };
    if (std::isinf(loss_of(logits))) continue;

    CtcProblem<double> p;
    p.log_probs = log_softmax(logits, 1);
    p.labels = labels;
    p.valid_len = T;
    CtcWorkspace<double> ws;
    ctc_loss<double>(p, &ws);
    const Tensor64 grad = ctc_grad(p, ws);

    const double h = 1e-6;
    double max_diff = 0, max_mag = 0;
    for (int64_t i = 0; i < logits.numel(); ++i) {
      const double saved = logits.data()[i];
      logits.data()[i] = saved + h;
      const double up = loss_of(logits);
      logits.data()[i] = saved - h;
      const double down = loss_of(logits);
      logits.data()[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      max_diff = std::max(max_diff, std::abs(fd - grad.data()[i]));
      max_mag = std::max({max_mag, std::abs(fd), std::abs(grad.data()[i])});
    }
    CHECK(max_diff / std::max(max_mag, 1e-8) < 1e-6);
    ++checked;

    // Rows past valid_len carry no gradient; every valid row sums to zero.
    double worst_row = 0;
    for (int t = 0; t < T; ++t) {
      double row = 0;
      for (int c = 0; c < C; ++c) row += grad.at(t, c);
      worst_row = std::max(worst_row, std::abs(row));
    }
    CHECK(worst_row < 1e-6);
  }
  CHECK(checked >= 15);
}

TEST_CASE("gradient of an infeasible problem is an error") {
  CtcProblem<double> p = uniform_problem(1, 3, {1, 2});
  CtcWorkspace<double> ws;
  CHECK(std::isinf(ctc_loss<double>(p, &ws)));
  CHECK_THROWS_WITH_AS(ctc_grad(p, ws), doctest::Contains("infeasible"),
                       std::runtime_error);
}

TEST_CASE("appending pure-blank frames leaves the loss unchanged") {
  Rng rng(17);
  CtcProblem<double> p = random_problem(4, 3, {1, 2}, rng);
  const double base = ctc_loss<double>(p, nullptr);

  CtcProblem<double> extended;
  extended.log_probs = Tensor64({7, 3});
  extended.log_probs.fill(-std::numeric_limits<double>::infinity());
  for (int t = 0; t < 4; ++t) {
    for (int c = 0; c < 3; ++c) extended.log_probs.at(t, c) = p.log_probs.at(t, c);
  }
  for (int t = 4; t < 7; ++t) extended.log_probs.at(t, 0) = 0.0;  // blank prob 1
  extended.labels = p.labels;
  extended.valid_len = 7;
  CHECK(ctc_loss<double>(extended, nullptr) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("greedy decode worked examples") {
  auto one_hot = [](const std::vector<int>& path, int C) {
    Tensor64 t({static_cast<int>(path.size()), C});
    t.fill(0.0);
    for (size_t i = 0; i < path.size(); ++i) t.at(static_cast<int>(i), path[i]) = 1.0;
    return t;
  };
  CHECK(greedy_decode(one_hot({0, 2, 2, 0, 1}, 3), 5) == std::vector<int>{2, 1});
  CHECK(greedy_decode(one_hot({1, 1, 0, 1}, 2), 4) == std::vector<int>{1, 1});
  CHECK(greedy_decode(one_hot({0, 0, 0}, 2), 3).empty());
}

TEST_CASE("greedy ties break toward the lower class") {
  Tensor64 logits = Tensor64::from({1, 3}, {0.5, 0.5, 0.1});
  CHECK(greedy_decode(logits, 1) == std::vector<int>{});  // blank (class 0) wins tie
  logits = Tensor64::from({1, 3}, {0.1, 0.5, 0.5});
  CHECK(greedy_decode(logits, 1) == std::vector<int>{1});
}

TEST_CASE("greedy decode of one-hot paths equals CTC collapse") {
  Rng rng(19);
  for (int rep = 0; rep < 500; ++rep) {
    const int T = 1 + rng.uniform_int(8);
    const int C = 2 + rng.uniform_int(4);
    std::vector<int> path(static_cast<size_t>(T));
    for (auto& v : path) v = rng.uniform_int(C);
    Tensor64 logits({T, C});
    logits.fill(-5.0);
    for (int t = 0; t < T; ++t) logits.at(t, path[static_cast<size_t>(t)]) = 5.0;
    CHECK(greedy_decode(logits, T) == collapse_path(path));
  }
}

TEST_CASE("batch loss averages finite samples and zeroes infeasible gradients") {
  Rng rng(23);
  const int T = 4, B = 3, C = 3;
  Tensor logits = linerec_test::random_tensor<float>({T, B, C}, rng);
  // Sample 2 is infeasible: two repeated labels in two steps.
  const std::vector<std::vector<int>> labels{{1}, {2, 1}, {1, 1}};
  const std::vector<int> seq_lens{4, 4, 2};
  const BatchCtcResult result = ctc_batch_loss(logits, labels, seq_lens);
  CHECK(result.finite_count == 2);
  CHECK(result.infeasible_count == 1);
  CHECK(std::isinf(result.per_sample_nll[2]));

  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < C; ++c) {
      CHECK(result.grad_logits.at(t, 2, c) == 0.0f);
    }
  }
  // Mean over the two finite samples.
  const double expected =
      (result.per_sample_nll[0] + result.per_sample_nll[1]) / 2.0;
  CHECK(result.mean_nll == doctest::Approx(expected).epsilon(1e-12));
}
