// SPDX-License-Identifier: Apache-2.0
#include "t2i/gan/discriminator.hpp"

#include <stdexcept>

namespace t2i::gan {

StageDiscriminator::StageDiscriminator(nn::ParamStore& store, const std::string& prefix,
                                       int resolution, const DiscriminatorConfig& cfg, Rng& rng)
    : resolution_(resolution), cfg_(cfg) {
  if (resolution < 8) throw std::runtime_error("discriminator: resolution must be >= 8");
  int res = resolution;
  int in_ch = 3;
  int out_ch = cfg.base_channels;
  int idx = 0;
  while (res > 4) {
    if (res % 2 != 0) throw std::runtime_error("discriminator: resolution must be a power of 2");
    trunk_.emplace_back(store, prefix + ".down" + std::to_string(idx), in_ch, out_ch, 2, 2, 0, rng);
    in_ch = out_ch;
    out_ch = std::min(out_ch * 2, cfg.max_channels);
    res /= 2;
    ++idx;
  }
  trunk_channels_ = in_ch;
  uncond_head_ = nn::Affine(store, prefix + ".uncond", trunk_channels_ * 16, 1, rng);
  cond_mix_ = nn::Conv2d(store, prefix + ".cond_mix", trunk_channels_ + cfg.d_text,
                         trunk_channels_, 1, 1, 0, rng);
  cond_head_ = nn::Affine(store, prefix + ".cond", trunk_channels_ * 16, 1, rng);
}

StageDiscriminator::Output StageDiscriminator::discriminate(nn::Tape& t, nn::Var image,
                                                            nn::Var ebar) const {
  const Tensor& v = t.value(image);
  if (v.rank() != 3 || v.dim(0) != 3 || v.dim(1) != resolution_ || v.dim(2) != resolution_)
    throw std::runtime_error("discriminate: expected 3x" + std::to_string(resolution_) + "x" +
                             std::to_string(resolution_) + ", got " + shape_str(v));
  nn::Var x = image;
  for (const auto& conv : trunk_) x = t.lrelu(conv.apply(t, x), 0.2);

  nn::Var flat = t.reshape(x, {trunk_channels_ * 16});
  nn::Var p_uncond =
      t.clamp(t.sigmoid(uncond_head_.apply(t, flat)), kProbClamp, 1.0 - kProbClamp);

  nn::Var eb = t.broadcast_hw(ebar, 4, 4);
  nn::Var mixed = t.lrelu(cond_mix_.apply(t, t.concat_channels(x, eb)), 0.2);
  nn::Var p_cond = t.clamp(t.sigmoid(cond_head_.apply(t, t.reshape(mixed, {trunk_channels_ * 16}))),
                           kProbClamp, 1.0 - kProbClamp);
  return {p_uncond, p_cond};
}

nn::Var generator_adv_loss_stage(nn::Tape& t,
                                 const std::vector<StageDiscriminator::Output>& fakes) {
  if (fakes.empty()) throw std::runtime_error("generator_adv_loss: empty batch");
  nn::Var acc = t.constant(Tensor::scalar(0.0));
  for (const auto& o : fakes)
    acc = t.add(acc, t.add(t.log_(o.p_uncond), t.log_(o.p_cond)));
  return t.scale(t.sum(acc), -0.5 / static_cast<double>(fakes.size()));
}

nn::Var discriminator_loss_stage(nn::Tape& t, const std::vector<StageDiscriminator::Output>& reals,
                                 const std::vector<StageDiscriminator::Output>& fakes) {
  if (reals.empty() || reals.size() != fakes.size())
    throw std::runtime_error("discriminator_loss: real and fake batches must match");
  nn::Var acc = t.constant(Tensor::scalar(0.0));
  for (size_t i = 0; i < reals.size(); ++i) {
    auto one_minus = [&](nn::Var p) { return t.add_const(t.scale(p, -1.0), 1.0); };
    nn::Var real_terms = t.add(t.log_(reals[i].p_uncond), t.log_(reals[i].p_cond));
    nn::Var fake_terms =
        t.add(t.log_(one_minus(fakes[i].p_uncond)), t.log_(one_minus(fakes[i].p_cond)));
    acc = t.add(acc, t.add(real_terms, fake_terms));
  }
  return t.scale(t.sum(acc), -0.5 / static_cast<double>(reals.size()));
}

}  // namespace t2i::gan
