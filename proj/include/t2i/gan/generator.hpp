// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "t2i/nn/layers.hpp"

namespace t2i::gan {

struct GeneratorConfig {
  int d_cond = 16;
  int d_z = 16;
  int d_text = 32;
  int base_channels = 24;    // stage-0 hidden channels; halved per stage
  int base_resolution = 16;  // stage-0 image edge (power of 2, >= 4)
  int stages = 3;
  int res_blocks = 2;
};

// Stacked refinement generator: stage 0 maps [c; z] up to the base resolution,
// later stages fuse region-over-word attention context and double the edge.
class GeneratorStack {
public:
  GeneratorStack(nn::ParamStore& store, const std::string& prefix, const GeneratorConfig& cfg,
                 Rng& rng);

  struct Stage {
    nn::Var h;      // hidden state, C_i x R_i
    nn::Var image;  // 3 x res_i x res_i, tanh-bounded
  };

  Stage initial_stage(nn::Tape& t, nn::Var c, nn::Var z) const;

  struct Attention {
    nn::Var context;  // C x H x W, same layout as the incoming state
    nn::Var beta;     // R x T, rows sum to 1 over unmasked words
  };

  // Regions of the stage-(i-1) state attend over words; `stage` is the stage
  // being fed (1-based).
  Attention word_attention(nn::Tape& t, nn::Var h_prev, nn::Var e,
                           const std::vector<uint8_t>& mask, int stage) const;

  Stage next_stage(nn::Tape& t, nn::Var h_prev, nn::Var context, int stage) const;

  struct Output {
    std::vector<nn::Var> images;  // ascending resolutions
    std::vector<nn::Var> betas;   // attention maps for stages >= 1
  };
  Output generate(nn::Tape& t, nn::Var e, const std::vector<uint8_t>& mask, nn::Var c,
                  nn::Var z) const;

  int stage_channels(int i) const { return std::max(4, cfg_.base_channels >> i); }
  int stage_resolution(int i) const { return cfg_.base_resolution << i; }
  const GeneratorConfig& config() const { return cfg_; }

private:
  GeneratorConfig cfg_;
  nn::Affine fc_;
  std::vector<nn::Conv2d> stage0_ups_;
  std::vector<nn::Affine> attn_proj_;          // per stage >= 1, d_text -> C_{i-1}
  struct Refine {
    std::vector<nn::Conv2d> res_convs;  // 2 per residual block
    nn::Conv2d up_conv;
  };
  std::vector<Refine> refine_;
  std::vector<nn::Conv2d> img_heads_;  // per stage
};

}  // namespace t2i::gan
