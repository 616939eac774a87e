// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "t2i/nn/layers.hpp"

namespace t2i::stream {

struct StreamConfig {
  int resolution = 64;  // final-stage image edge
  int base_channels = 12;
  int hidden = 48;      // decoder hidden size == visual feature size
  int embed_dim = 24;
  int vocab_size = 0;
  int bos_id = 1;
  int eos_id = 2;
  // When > 0 the module has no conv encoder of its own and consumes an
  // externally computed feature of this dimension (shared-encoder mode).
  int external_dim = 0;
};

// Image-to-caption module: a convolutional encoder conditions a recurrent
// decoder that regenerates the caption. Supplies the cycle cross-entropy.
class Stream {
public:
  static constexpr double kProbClamp = 1e-9;

  Stream(nn::ParamStore& store, const std::string& prefix, const StreamConfig& cfg, Rng& rng);

  // Final-stage image -> decoder-sized visual feature (tanh-bounded).
  nn::Var encode_for_caption(nn::Tape& t, nn::Var image) const;

  // Shared-encoder mode: project an externally computed feature instead.
  nn::Var encode_external(nn::Tape& t, nn::Var feature) const;

  // Teacher forcing: teacher[0] must be bos; step t consumes teacher[t] and
  // emits a clamped |V|-way distribution for the next token.
  std::vector<nn::Var> decode_caption(nn::Tape& t, nn::Var visual, const std::vector<int>& teacher) const;

  // Argmax feedback decoding from a visual feature value; stops at eos or
  // max_len. Ties break toward the lowest token id.
  std::vector<int> greedy_decode(const Tensor& visual, int max_len) const;

  const StreamConfig& config() const { return cfg_; }

private:
  nn::Var step_probs(nn::Tape& t, nn::Var h) const;

  StreamConfig cfg_;
  std::vector<nn::Conv2d> enc_;
  nn::Affine enc_out_;
  nn::Parameter* embed_ = nullptr;
  nn::LSTMCell cell_;
  nn::Affine out_;
};

// Mean over the batch of summed per-token negative log-likelihood; masked
// positions contribute exactly zero.
nn::Var cross_entropy_loss(nn::Tape& t, const std::vector<std::vector<nn::Var>>& batch_steps,
                           const std::vector<std::vector<int>>& targets,
                           const std::vector<std::vector<uint8_t>>& masks);

}  // namespace t2i::stream
