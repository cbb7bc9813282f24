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

#ifndef LINEREC_METRICS_HPP_
#define LINEREC_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace linerec {

struct EditCounts {
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t substitutions = 0;
  int64_t reference_len = 0;

  int64_t distance() const { return insertions + deletions + substitutions; }
};

// Unit-cost Levenshtein distance with a deterministic operation breakdown:
// the backtrace prefers substitution over deletion over insertion when
// several decompositions achieve the minimum.
EditCounts edit_distance(std::span<const int> reference,
                         std::span<const int> hypothesis);

// (Ni + Nd + Ns) / N. For an empty reference: 0 when the hypothesis is also
// empty, otherwise the edit count over a denominator of 1 (degenerate case,
// flagged in per-sample reports).
double cer(const EditCounts& counts);

struct SampleCer {
  std::string id;
  EditCounts counts;
  double cer = 0.0;
  bool degenerate_reference = false;
};

struct CorpusCer {
  double micro = 0.0;  // sum of edits over sum of reference lengths
  double macro = 0.0;  // mean of per-sample CERs
  std::vector<SampleCer> samples;
};

struct CerPair {
  std::string id;
  std::vector<int> reference;
  std::vector<int> hypothesis;
};

CorpusCer corpus_cer(const std::vector<CerPair>& pairs);

}  // namespace linerec

#endif  // LINEREC_METRICS_HPP_
