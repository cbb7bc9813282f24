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

#include "linerec/charset.hpp"

#include <fstream>
#include <stdexcept>

namespace linerec {

namespace {

int utf8_sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 0;
}

}  // namespace

std::vector<std::string> utf8_split(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const int len = utf8_sequence_length(static_cast<unsigned char>(text[i]));
    if (len == 0 || i + static_cast<size_t>(len) > text.size()) {
      throw std::invalid_argument("malformed UTF-8 at byte " + std::to_string(i));
    }
    for (int k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + static_cast<size_t>(k)]) & 0xc0) != 0x80) {
        throw std::invalid_argument("malformed UTF-8 continuation at byte " +
                                    std::to_string(i + static_cast<size_t>(k)));
      }
    }
    out.push_back(text.substr(i, static_cast<size_t>(len)));
    i += static_cast<size_t>(len);
  }
  return out;
}

Charset Charset::from_characters(std::vector<std::string> characters) {
  Charset cs;
  cs.characters_ = std::move(characters);
  for (size_t i = 0; i < cs.characters_.size(); ++i) {
    const std::string& ch = cs.characters_[i];
    if (ch.empty()) {
      throw std::invalid_argument("charset line " + std::to_string(i + 1) + " is empty");
    }
    if (utf8_split(ch).size() != 1) {
      throw std::invalid_argument("charset line " + std::to_string(i + 1) +
                                  " is not a single character: '" + ch + "'");
    }
    const auto [it, inserted] = cs.index_.emplace(ch, static_cast<int>(i) + 1);
    if (!inserted) {
      throw std::invalid_argument("duplicate charset character '" + ch + "' at line " +
                                  std::to_string(i + 1));
    }
  }
  if (cs.characters_.empty()) {
    throw std::invalid_argument("charset is empty");
  }
  return cs;
}

Charset Charset::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open charset " + path.string());
  std::vector<std::string> characters;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    characters.push_back(line);
  }
  // A trailing newline produces no extra entry; empty interior lines are
  // rejected by from_characters.
  return from_characters(std::move(characters));
}

void Charset::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write charset " + path.string());
  for (const auto& ch : characters_) out << ch << "\n";
}

std::optional<int> Charset::encode_char(const std::string& character) const {
  const auto it = index_.find(character);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::vector<int>> Charset::encode(const std::string& text,
                                                std::string* bad_char) const {
  std::vector<int> out;
  for (const auto& ch : utf8_split(text)) {
    const auto cls = encode_char(ch);
    if (!cls.has_value()) {
      if (bad_char != nullptr) *bad_char = ch;
      return std::nullopt;
    }
    out.push_back(*cls);
  }
  return out;
}

const std::string& Charset::lookup(int cls) const {
  if (cls < 1 || cls > size()) {
    throw std::out_of_range("class " + std::to_string(cls) + " outside [1, " +
                            std::to_string(size()) + "]");
  }
  return characters_[static_cast<size_t>(cls - 1)];
}

std::string Charset::decode(std::span<const int> classes) const {
  std::string out;
  for (int cls : classes) out += lookup(cls);
  return out;
}

uint64_t Charset::digest() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (const auto& ch : characters_) {
    for (char b : ch) mix(static_cast<unsigned char>(b));
    mix('\n');
  }
  return h;
}

}  // namespace linerec
