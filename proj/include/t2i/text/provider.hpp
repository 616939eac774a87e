// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "t2i/nn/tape.hpp"

namespace t2i::text {

// Source of per-token context vectors (D_provider x T). Implementations must
// be deterministic: identical token sequences give bit-identical output.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual nn::Var embed(nn::Tape& t, const std::vector<int>& tokens) = 0;
  virtual bool trainable() const { return false; }
};

// Plain embedding table trained end-to-end; context-free (the same token id
// always yields the same column).
class LearnedTableProvider : public EmbeddingProvider {
public:
  LearnedTableProvider(nn::ParamStore& store, const std::string& prefix, int vocab_size, int dim,
                       Rng& rng);
  int dim() const override { return dim_; }
  std::string name() const override { return "learned"; }
  nn::Var embed(nn::Tape& t, const std::vector<int>& tokens) override;
  bool trainable() const override { return true; }

private:
  nn::Parameter* table_;
  int dim_;
};

// Deterministic contextual stand-in: each column is seeded by a hash of the
// token id and its immediate neighbors, so the same token embeds differently
// in different contexts without any external model.
class StandinContextualProvider : public EmbeddingProvider {
public:
  StandinContextualProvider(int dim, uint64_t seed) : dim_(dim), seed_(seed) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "standin"; }
  nn::Var embed(nn::Tape& t, const std::vector<int>& tokens) override;

private:
  int dim_;
  uint64_t seed_;
};

// Precomputed contextual vectors loaded from a keyed binary container,
// looked up by a hash of the token-id sequence.
class FileBackedProvider : public EmbeddingProvider {
public:
  explicit FileBackedProvider(const std::string& path);
  int dim() const override { return dim_; }
  std::string name() const override { return name_; }
  nn::Var embed(nn::Tape& t, const std::vector<int>& tokens) override;
  size_t entry_count() const { return entries_.size(); }

private:
  std::string name_;
  int dim_ = 0;
  std::unordered_map<uint64_t, Tensor> entries_;
};

// FNV-1a over the little-endian token id bytes.
uint64_t caption_hash(const std::vector<int>& tokens);

// Embedding-file layout (little-endian):
//   magic "T2IEMB1\0" | u32 dim | u32 name_len | name bytes
//   u64 count | count x { u64 hash | u32 T | dim*T f64 column-major (D x T) }
void write_embedding_file(const std::string& path, const std::string& provider_name, int dim,
                          const std::vector<std::pair<uint64_t, Tensor>>& entries);

}  // namespace t2i::text
