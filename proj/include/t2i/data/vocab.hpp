// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace t2i::data {

// Token <-> id map with reserved entries. Non-reserved ids are assigned by
// descending corpus frequency, ties broken lexicographically.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;

  int size() const { return static_cast<int>(id_to_token.size()); }
  bool contains(const std::string& tok) const { return token_to_id.count(tok) > 0; }
  int id_or_unk(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? kUnk : it->second;
  }
  const std::string& token(int id) const { return id_to_token[static_cast<size_t>(id)]; }
};

// Lowercase, strip punctuation, split on whitespace.
std::vector<std::string> clean_tokens(const std::string& text);

Vocabulary build_vocabulary(const std::vector<std::string>& corpus, int min_freq);

struct TokenizeResult {
  std::vector<int> ids;
  std::vector<uint8_t> mask;  // 1 for every real token
};

// Tokenize and truncate to t_max. Throws if no tokens survive cleaning.
TokenizeResult tokenize(const std::string& text, const Vocabulary& vocab, int t_max);

// Pad ids/mask in place to length t with pad id / zero mask.
void pad_to(TokenizeResult& r, int t);

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

}  // namespace t2i::data
