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

#include "linerec/rng.hpp"
#include "linerec/tensor.hpp"

using namespace linerec;

TEST_CASE("tensor shape and data invariants") {
  Tensor t({2, 3, 4});
  CHECK(t.numel() == 24);
  CHECK(t.rank() == 3);
  t.at(1, 2, 3) = 5.0f;
  CHECK(t.at(1, 2, 3) == 5.0f);
  CHECK(t.shape_str() == "[2x3x4]");

  CHECK_THROWS(Tensor({2, 0, 3}));
  CHECK_THROWS(Tensor::from({2, 2}, {1.0f, 2.0f, 3.0f}));
  CHECK_THROWS(t.at(2, 0, 0));
  CHECK_THROWS(t.reshaped({5, 5}));
  CHECK(t.reshaped({4, 6}).numel() == 24);
}

TEST_CASE("non-finite detection") {
  Tensor t({3});
  CHECK(all_finite(t));
  t.at(1) = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(all_finite(t));
  CHECK_THROWS(ensure_finite(t, "test tensor"));
  t.at(1) = std::numeric_limits<float>::infinity();
  CHECK_FALSE(all_finite(t));
}

TEST_CASE("rng determinism and state round trip") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  const auto state = a.state();
  std::vector<uint64_t> expected;
  for (int i = 0; i < 10; ++i) expected.push_back(a.next());
  Rng c(0);
  c.set_state(state);
  for (int i = 0; i < 10; ++i) CHECK(c.next() == expected[static_cast<size_t>(i)]);
}

TEST_CASE("rng split streams are independent and stable") {
  Rng root(7);
  Rng a = root.split(1);
  Rng b = root.split(2);
  Rng a2 = root.split(1);
  CHECK(a.next() == a2.next());
  CHECK(a.next() != b.next());
}

TEST_CASE("uniform_int is in range and roughly uniform") {
  Rng rng(3);
  std::array<int, 10> counts{};
  for (int i = 0; i < 100000; ++i) {
    const int v = rng.uniform_int(10);
    REQUIRE(v >= 0);
    REQUIRE(v < 10);
    ++counts[static_cast<size_t>(v)];
  }
  for (int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
}

TEST_CASE("normal has the requested moments") {
  Rng rng(11);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal(1.0, 2.0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 1.0) < 0.02);
  CHECK(std::abs(var - 4.0) < 0.08);
}
