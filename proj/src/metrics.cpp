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

#include "linerec/metrics.hpp"

#include <stdexcept>

namespace linerec {

EditCounts edit_distance(std::span<const int> reference,
                         std::span<const int> hypothesis) {
  const size_t n = reference.size();
  const size_t m = hypothesis.size();
  // d[i][j] = distance between reference[:i] and hypothesis[:j].
  std::vector<int64_t> d((n + 1) * (m + 1));
  auto at = [&](size_t i, size_t j) -> int64_t& { return d[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int64_t>(i);
  for (size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const int64_t sub = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      const int64_t del = at(i - 1, j) + 1;
      const int64_t ins = at(i, j - 1) + 1;
      at(i, j) = std::min({sub, del, ins});
    }
  }

  EditCounts counts;
  counts.reference_len = static_cast<int64_t>(n);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int64_t diag = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      if (diag == at(i, j)) {
        if (reference[i - 1] != hypothesis[j - 1]) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i - 1, j) + 1 == at(i, j)) {
      ++counts.deletions;
      --i;
      continue;
    }
    ++counts.insertions;
    --j;
  }
  return counts;
}

double cer(const EditCounts& counts) {
  const int64_t errors = counts.distance();
  if (counts.reference_len == 0) {
    return errors == 0 ? 0.0 : static_cast<double>(errors);
  }
  return static_cast<double>(errors) / static_cast<double>(counts.reference_len);
}

CorpusCer corpus_cer(const std::vector<CerPair>& pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("corpus_cer: empty pair list");
  }
  CorpusCer result;
  result.samples.reserve(pairs.size());
  int64_t total_errors = 0;
  int64_t total_len = 0;
  double macro_sum = 0.0;
  for (const auto& pair : pairs) {
    SampleCer s;
    s.id = pair.id;
    s.counts = edit_distance(pair.reference, pair.hypothesis);
    s.cer = cer(s.counts);
    s.degenerate_reference = s.counts.reference_len == 0;
    total_errors += s.counts.distance();
    total_len += s.counts.reference_len;
    macro_sum += s.cer;
    result.samples.push_back(std::move(s));
  }
  if (total_len == 0) {
    result.micro = total_errors == 0 ? 0.0 : static_cast<double>(total_errors);
  } else {
    result.micro = static_cast<double>(total_errors) / static_cast<double>(total_len);
  }
  result.macro = macro_sum / static_cast<double>(pairs.size());
  return result;
}

}  // namespace linerec
