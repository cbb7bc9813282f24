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

#ifndef LINEREC_CHARSET_HPP_
#define LINEREC_CHARSET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace linerec {

// Splits UTF-8 text into single code points; throws on malformed bytes.
std::vector<std::string> utf8_split(const std::string& text);

// Bijection between characters and class indices. Class = position + 1;
// class 0 is reserved for the CTC blank and never appears as a character.
// The on-disk format is UTF-8, one character per line, class index equal to
// the 1-based line number.
class Charset {
 public:
  static Charset from_characters(std::vector<std::string> characters);
  static Charset load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(characters_.size()); }  // vocab
  int num_classes() const { return size() + 1; }                     // + blank

  // Class index of one character, or nullopt if absent.
  std::optional<int> encode_char(const std::string& character) const;

  // Encodes UTF-8 text to classes; on an unknown character returns nullopt
  // and reports it through bad_char when provided.
  std::optional<std::vector<int>> encode(const std::string& text,
                                         std::string* bad_char = nullptr) const;

  // Character for a class index in [1, size()].
  const std::string& lookup(int cls) const;

  std::string decode(std::span<const int> classes) const;

  // FNV-1a over the canonical serialization; checkpoints embed this so an
  // evaluation cannot silently run with the wrong class mapping.
  uint64_t digest() const;

 private:
  std::vector<std::string> characters_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace linerec

#endif  // LINEREC_CHARSET_HPP_
