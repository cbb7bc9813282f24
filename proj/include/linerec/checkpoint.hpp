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

#ifndef LINEREC_CHECKPOINT_HPP_
#define LINEREC_CHECKPOINT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "linerec/arch.hpp"

#include "json.hpp"

namespace linerec {

// Optimizer/scheduler position alongside the epoch counter; everything needed
// to resume training bit-exactly.
struct TrainerState {
  int epoch = 0;
  double best_cer = -1.0;  // < 0 means no evaluation recorded yet
  double lr = 0.0;
  int plateau_bad = 0;
  std::array<uint64_t, 4> rng_state{};
};

// Checkpoint file layout: magic "SRC1", little-endian u64 header byte length,
// UTF-8 JSON header (arch config, charset digest, trainer state, tensor
// directory with offsets/shapes), then raw little-endian float32 payloads in
// directory order.
void save_checkpoint(const std::filesystem::path& path, Network& net,
                     uint64_t charset_digest, const TrainerState& state,
                     const std::vector<std::pair<std::string, Tensor>>& velocity);

struct LoadedCheckpoint {
  ArchConfig config;
  uint64_t charset_digest = 0;
  TrainerState state;
  std::vector<std::pair<std::string, Tensor>> params;
  std::vector<std::pair<std::string, Tensor>> buffers;
  std::vector<std::pair<std::string, Tensor>> velocity;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the network and installs the checkpointed parameters and buffers;
// throws if any tensor is missing or shaped differently.
Network restore_network(const LoadedCheckpoint& ckpt);

nlohmann::ordered_json arch_to_json(const ArchConfig& config);
ArchConfig arch_from_json(const nlohmann::json& j);

}  // namespace linerec

#endif  // LINEREC_CHECKPOINT_HPP_
