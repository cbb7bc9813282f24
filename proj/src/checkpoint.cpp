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

#include "linerec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace linerec {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'C', '1'};

std::string hex_u64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t parse_hex_u64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

void write_u64_le(std::ostream& out, uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

uint64_t read_u64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

nlohmann::ordered_json arch_to_json(const ArchConfig& config) {
  nlohmann::ordered_json j;
  j["family"] = config.family == ArchFamily::kVgg16Baseline ? "vgg16" : "resnet";
  j["block_digits"] = config.block_digits;
  j["stage_channels"] = config.stage_channels;
  j["input_height"] = config.input_height;
  j["vocab_size"] = config.vocab_size;
  j["dropout"] = config.dropout.rates;
  j["flatten_mode"] =
      config.flatten_mode == FlattenMode::kChannelHeight ? "ch" : "hw";
  return j;
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig config;
  const std::string family = j.at("family").get<std::string>();
  if (family == "vgg16") {
    config.family = ArchFamily::kVgg16Baseline;
  } else if (family == "resnet") {
    config.family = ArchFamily::kResidualVariant;
  } else {
    throw std::invalid_argument("unknown arch family '" + family + "'");
  }
  config.block_digits = j.at("block_digits").get<std::array<int, 4>>();
  config.stage_channels = j.at("stage_channels").get<std::array<int, 4>>();
  config.input_height = j.at("input_height").get<int>();
  config.vocab_size = j.at("vocab_size").get<int>();
  config.dropout.rates = j.at("dropout").get<std::array<double, 5>>();
  const std::string flatten = j.at("flatten_mode").get<std::string>();
  if (flatten == "ch") {
    config.flatten_mode = FlattenMode::kChannelHeight;
  } else if (flatten == "hw") {
    config.flatten_mode = FlattenMode::kHeightWidth;
  } else {
    throw std::invalid_argument("unknown flatten mode '" + flatten + "'");
  }
  config.validate();
  return config;
}

void save_checkpoint(const std::filesystem::path& path, Network& net,
                     uint64_t charset_digest, const TrainerState& state,
                     const std::vector<std::pair<std::string, Tensor>>& velocity) {
  nlohmann::ordered_json header;
  header["version"] = 1;
  header["arch"] = arch_to_json(net.config);
  header["charset_digest"] = hex_u64(charset_digest);
  header["epoch"] = state.epoch;
  header["best_cer"] = state.best_cer;
  header["lr"] = state.lr;
  header["plateau_bad"] = state.plateau_bad;
  {
    nlohmann::ordered_json rng = nlohmann::ordered_json::array();
    for (uint64_t word : state.rng_state) rng.push_back(hex_u64(word));
    header["rng_state"] = rng;
  }

  struct Entry {
    std::string name;
    std::string role;
    const Tensor* tensor;
  };
  std::vector<Entry> directory;
  for (auto& slot : net.params()) directory.push_back({slot.name, "param", slot.value});
  for (auto& slot : net.buffers()) directory.push_back({slot.name, "buffer", slot.value});
  for (auto& [name, tensor] : velocity) directory.push_back({name, "velocity", &tensor});

  uint64_t offset = 0;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const Entry& e : directory) {
    nlohmann::ordered_json t;
    t["name"] = e.name;
    t["role"] = e.role;
    t["shape"] = e.tensor->shape();
    t["offset"] = offset;
    t["bytes"] = static_cast<uint64_t>(e.tensor->numel()) * sizeof(float);
    tensors.push_back(std::move(t));
    offset += static_cast<uint64_t>(e.tensor->numel()) * sizeof(float);
  }
  header["tensors"] = std::move(tensors);

  const std::string header_text = header.dump();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic, 4);
    write_u64_le(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const Entry& e : directory) {
      out.write(reinterpret_cast<const char*>(e.tensor->data()),
                static_cast<std::streamsize>(e.tensor->numel() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("short write to checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path.string() + " is not a checkpoint (bad magic)");
  }
  const uint64_t header_len = read_u64_le(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("truncated checkpoint header in " + path.string());
  const nlohmann::json header = nlohmann::json::parse(header_text);

  LoadedCheckpoint ckpt;
  ckpt.config = arch_from_json(header.at("arch"));
  ckpt.charset_digest = parse_hex_u64(header.at("charset_digest").get<std::string>());
  ckpt.state.epoch = header.at("epoch").get<int>();
  ckpt.state.best_cer = header.at("best_cer").get<double>();
  ckpt.state.lr = header.at("lr").get<double>();
  ckpt.state.plateau_bad = header.at("plateau_bad").get<int>();
  {
    const auto& rng = header.at("rng_state");
    for (size_t i = 0; i < 4; ++i) {
      ckpt.state.rng_state[i] = parse_hex_u64(rng.at(i).get<std::string>());
    }
  }

  const std::istream::pos_type payload_start = in.tellg();
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const std::string role = t.at("role").get<std::string>();
    const std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    const uint64_t offset = t.at("offset").get<uint64_t>();
    const uint64_t bytes = t.at("bytes").get<uint64_t>();
    Tensor tensor(shape);
    if (bytes != static_cast<uint64_t>(tensor.numel()) * sizeof(float)) {
      throw std::runtime_error("checkpoint tensor " + name + " has inconsistent size");
    }
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(tensor.data()),
            static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("truncated checkpoint payload at " + name);
    if (role == "param") {
      ckpt.params.emplace_back(name, std::move(tensor));
    } else if (role == "buffer") {
      ckpt.buffers.emplace_back(name, std::move(tensor));
    } else if (role == "velocity") {
      ckpt.velocity.emplace_back(name, std::move(tensor));
    } else {
      throw std::runtime_error("checkpoint tensor " + name + " has unknown role " + role);
    }
  }
  return ckpt;
}

Network restore_network(const LoadedCheckpoint& ckpt) {
  Rng rng(0);  // initialization is immediately overwritten
  Network net = build_network<float>(ckpt.config, rng);
  auto install = [](std::vector<TensorSlot<float>> slots,
                    const std::vector<std::pair<std::string, Tensor>>& saved,
                    const char* what) {
    if (slots.size() != saved.size()) {
      throw std::runtime_error(std::string("checkpoint ") + what +
                               " count does not match the architecture");
    }
    for (size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].name != saved[i].first) {
        throw std::runtime_error(std::string("checkpoint ") + what + " '" +
                                 saved[i].first + "' does not match network '" +
                                 slots[i].name + "'");
      }
      if (!slots[i].value->same_shape(saved[i].second)) {
        throw std::runtime_error(std::string("checkpoint ") + what + " '" +
                                 saved[i].first + "' has mismatched shape");
      }
      *slots[i].value = saved[i].second;
    }
  };
  install(net.params(), ckpt.params, "param");
  install(net.buffers(), ckpt.buffers, "buffer");
  return net;
}

}  // namespace linerec
