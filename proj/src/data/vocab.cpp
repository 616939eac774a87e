// SPDX-License-Identifier: Apache-2.0
#include "t2i/data/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace t2i::data {

std::vector<std::string> clean_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& corpus, int min_freq) {
  if (corpus.empty()) throw std::runtime_error("build_vocabulary: empty corpus");
  std::map<std::string, long> freq;
  for (const auto& line : corpus)
    for (const auto& tok : clean_tokens(line)) ++freq[tok];

  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.id_to_token = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (const auto& [tok, n] : kept) {
    v.token_to_id[tok] = v.size();
    v.id_to_token.push_back(tok);
  }
  return v;
}

TokenizeResult tokenize(const std::string& text, const Vocabulary& vocab, int t_max) {
  auto toks = clean_tokens(text);
  if (toks.empty()) throw std::runtime_error("tokenize: no tokens after cleaning: \"" + text + "\"");
  if (static_cast<int>(toks.size()) > t_max) toks.resize(static_cast<size_t>(t_max));
  TokenizeResult r;
  for (const auto& tok : toks) {
    r.ids.push_back(vocab.id_or_unk(tok));
    r.mask.push_back(1);
  }
  return r;
}

void pad_to(TokenizeResult& r, int t) {
  while (static_cast<int>(r.ids.size()) < t) {
    r.ids.push_back(Vocabulary::kPad);
    r.mask.push_back(0);
  }
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    if (id < Vocabulary::kReserved) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

}  // namespace t2i::data
