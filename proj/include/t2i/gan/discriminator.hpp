// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "t2i/nn/layers.hpp"

namespace t2i::gan {

struct DiscriminatorConfig {
  int base_channels = 8;
  int max_channels = 64;
  int d_text = 32;
};

// Per-stage discriminator: shared conv trunk, an unconditional head, and a
// conditional head on trunk features concatenated with a spatial broadcast of
// the sentence embedding. Probabilities are clamped to [1e-7, 1 - 1e-7]
// before any logarithm.
class StageDiscriminator {
public:
  static constexpr double kProbClamp = 1e-7;

  StageDiscriminator(nn::ParamStore& store, const std::string& prefix, int resolution,
                     const DiscriminatorConfig& cfg, Rng& rng);

  struct Output {
    nn::Var p_uncond;
    nn::Var p_cond;
  };

  Output discriminate(nn::Tape& t, nn::Var image, nn::Var ebar) const;

  int resolution() const { return resolution_; }

private:
  int resolution_;
  DiscriminatorConfig cfg_;
  std::vector<nn::Conv2d> trunk_;
  int trunk_channels_ = 0;
  nn::Affine uncond_head_;
  nn::Conv2d cond_mix_;
  nn::Affine cond_head_;
};

// Mean over the batch of -1/2 log p_uncond - 1/2 log p_cond on fake images.
nn::Var generator_adv_loss_stage(nn::Tape& t, const std::vector<StageDiscriminator::Output>& fakes);

// Mean over the batch of the four half-weighted real/fake terms
// (conditional and unconditional).
nn::Var discriminator_loss_stage(nn::Tape& t, const std::vector<StageDiscriminator::Output>& reals,
                                 const std::vector<StageDiscriminator::Output>& fakes);

}  // namespace t2i::gan
