// SPDX-License-Identifier: Apache-2.0
#include "t2i/gan/generator.hpp"

#include <stdexcept>

namespace t2i::gan {

namespace {
bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

GeneratorStack::GeneratorStack(nn::ParamStore& store, const std::string& prefix,
                               const GeneratorConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  if (!is_pow2(cfg.base_resolution) || cfg.base_resolution < 4)
    throw std::runtime_error("generator: base_resolution must be a power of 2 >= 4");
  if (cfg.stages < 1) throw std::runtime_error("generator: need at least one stage");

  const int c0 = stage_channels(0);
  fc_ = nn::Affine(store, prefix + ".fc", cfg.d_cond + cfg.d_z, c0 * 4 * 4, rng);
  int res = 4;
  int idx = 0;
  while (res < cfg.base_resolution) {
    stage0_ups_.emplace_back(store, prefix + ".stage0.up" + std::to_string(idx), c0, c0, 3, 1, 1,
                             rng);
    res *= 2;
    ++idx;
  }
  img_heads_.emplace_back(store, prefix + ".stage0.img", c0, 3, 3, 1, 1, rng);

  for (int i = 1; i < cfg.stages; ++i) {
    const int c_in = stage_channels(i - 1);
    const int c_out = stage_channels(i);
    attn_proj_.emplace_back(store, prefix + ".attn" + std::to_string(i) + ".proj", cfg.d_text,
                            c_in, rng);
    Refine r;
    for (int b = 0; b < cfg.res_blocks; ++b) {
      r.res_convs.emplace_back(store,
                               prefix + ".stage" + std::to_string(i) + ".res" + std::to_string(b) +
                                   ".conv0",
                               2 * c_in, 2 * c_in, 3, 1, 1, rng);
      r.res_convs.emplace_back(store,
                               prefix + ".stage" + std::to_string(i) + ".res" + std::to_string(b) +
                                   ".conv1",
                               2 * c_in, 2 * c_in, 3, 1, 1, rng);
    }
    r.up_conv = nn::Conv2d(store, prefix + ".stage" + std::to_string(i) + ".up", 2 * c_in, c_out,
                           3, 1, 1, rng);
    refine_.push_back(std::move(r));
    img_heads_.emplace_back(store, prefix + ".stage" + std::to_string(i) + ".img", c_out, 3, 3, 1,
                            1, rng);
  }
}

GeneratorStack::Stage GeneratorStack::initial_stage(nn::Tape& t, nn::Var c, nn::Var z) const {
  const int c0 = stage_channels(0);
  nn::Var in = t.concat({c, z});
  nn::Var h = t.reshape(t.relu(fc_.apply(t, in)), {c0, 4, 4});
  for (const auto& conv : stage0_ups_) h = t.relu(conv.apply(t, t.upsample2x(h)));
  nn::Var image = t.tanh_(img_heads_[0].apply(t, h));
  return {h, image};
}

GeneratorStack::Attention GeneratorStack::word_attention(nn::Tape& t, nn::Var h_prev, nn::Var e,
                                                         const std::vector<uint8_t>& mask,
                                                         int stage) const {
  if (stage < 1 || stage >= cfg_.stages) throw std::runtime_error("word_attention: bad stage");
  bool any = false;
  for (uint8_t m : mask) any = any || m != 0;
  if (!any) throw std::runtime_error("word_attention: all words masked");
  const Tensor& hv = t.value(h_prev);
  const int C = hv.dim(0), H = hv.dim(1), W = hv.dim(2);
  nn::Var eproj = attn_proj_[static_cast<size_t>(stage - 1)].apply_cols(t, e);  // C x T
  nn::Var h_flat = t.reshape(h_prev, {C, H * W});
  nn::Var scores = t.matmul_tn(h_flat, eproj);                    // R x T
  nn::Var beta = t.softmax_axis(scores, 1, mask.empty() ? nullptr : &mask);
  nn::Var ctx = t.matmul_nt(eproj, beta);                         // C x R
  return {t.reshape(ctx, {C, H, W}), beta};
}

GeneratorStack::Stage GeneratorStack::next_stage(nn::Tape& t, nn::Var h_prev, nn::Var context,
                                                 int stage) const {
  if (stage < 1 || stage >= cfg_.stages) throw std::runtime_error("next_stage: bad stage");
  const Refine& r = refine_[static_cast<size_t>(stage - 1)];
  nn::Var x = t.concat_channels(h_prev, context);
  for (int b = 0; b < cfg_.res_blocks; ++b) {
    nn::Var y = r.res_convs[static_cast<size_t>(2 * b)].apply(t, x);
    y = r.res_convs[static_cast<size_t>(2 * b + 1)].apply(t, t.relu(y));
    x = t.relu(t.add(x, y));
  }
  nn::Var h = t.relu(r.up_conv.apply(t, t.upsample2x(x)));
  nn::Var image = t.tanh_(img_heads_[static_cast<size_t>(stage)].apply(t, h));
  return {h, image};
}

GeneratorStack::Output GeneratorStack::generate(nn::Tape& t, nn::Var e,
                                                const std::vector<uint8_t>& mask, nn::Var c,
                                                nn::Var z) const {
  Output out;
  Stage st = initial_stage(t, c, z);
  out.images.push_back(st.image);
  for (int i = 1; i < cfg_.stages; ++i) {
    Attention attn = word_attention(t, st.h, e, mask, i);
    out.betas.push_back(attn.beta);
    st = next_stage(t, st.h, attn.context, i);
    out.images.push_back(st.image);
  }
  return out;
}

}  // namespace t2i::gan
