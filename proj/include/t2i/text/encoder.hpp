// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "t2i/nn/layers.hpp"
#include "t2i/text/provider.hpp"

namespace t2i::text {

struct TextEncoderConfig {
  int d_provider = 48;
  int d_text = 32;          // even; BiLSTM hidden is d_text/2 per direction
  bool mean_pool = false;   // sentence vector: mean of word columns instead of final states
  bool bypass_rnn = false;  // wire projected provider vectors straight through
};

struct EncodedText {
  nn::Var e;     // d_text x T, padded columns zero
  nn::Var ebar;  // d_text
  std::vector<uint8_t> mask;
  int T = 0;
};

// Bidirectional recurrent encoder over projected provider embeddings.
class TextEncoder {
public:
  TextEncoder(nn::ParamStore& store, const std::string& prefix, const TextEncoderConfig& cfg,
              Rng& rng);

  // Single affine map shared across positions: (d_provider, T) -> (d_text, T).
  nn::Var project(nn::Tape& t, nn::Var raw) const { return proj_.apply_cols(t, raw); }

  // tokens are real ids; pad_to > tokens.size() appends zero-masked columns.
  EncodedText encode(nn::Tape& t, const std::vector<int>& tokens, EmbeddingProvider& provider,
                     int pad_to = 0) const;

  const TextEncoderConfig& config() const { return cfg_; }

private:
  TextEncoderConfig cfg_;
  nn::Affine proj_;
  nn::LSTMCell fwd_, bwd_;
};

struct ConditioningSample {
  nn::Var c;      // mu + sigma * eps
  nn::Var mu;
  nn::Var sigma;  // strictly positive (exp of a learned log-sigma)
};

class CondAugment {
public:
  CondAugment(nn::ParamStore& store, const std::string& prefix, int d_text, int d_cond, Rng& rng);
  ConditioningSample sample(nn::Tape& t, nn::Var ebar, const Tensor& eps) const;
  int d_cond() const { return d_cond_; }

private:
  int d_cond_;
  nn::Affine head_;  // d_text -> 2*d_cond (mu, log-sigma)
};

// 1/2 sum(mu^2 + sigma^2 - 1 - 2 log sigma): KL of N(mu, sigma^2) to N(0, I).
nn::Var ca_kl_loss(nn::Tape& t, nn::Var mu, nn::Var sigma);

}  // namespace t2i::text
