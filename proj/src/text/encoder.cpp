// SPDX-License-Identifier: Apache-2.0
#include "t2i/text/encoder.hpp"

#include <stdexcept>

namespace t2i::text {

TextEncoder::TextEncoder(nn::ParamStore& store, const std::string& prefix,
                         const TextEncoderConfig& cfg, Rng& rng)
    : cfg_(cfg),
      proj_(store, prefix + ".proj", cfg.d_provider, cfg.d_text, rng),
      fwd_(store, prefix + ".fwd", cfg.d_text, cfg.d_text / 2, rng),
      bwd_(store, prefix + ".bwd", cfg.d_text, cfg.d_text / 2, rng) {
  if (cfg.d_text % 2 != 0) throw std::runtime_error("text encoder: d_text must be even");
}

EncodedText TextEncoder::encode(nn::Tape& t, const std::vector<int>& tokens,
                                EmbeddingProvider& provider, int pad_to) const {
  if (tokens.empty()) throw std::runtime_error("encode_text: empty (all-padding) input");
  if (provider.dim() != cfg_.d_provider)
    throw std::runtime_error("encode_text: provider dimension " + std::to_string(provider.dim()) +
                             " != configured " + std::to_string(cfg_.d_provider));
  const int T = static_cast<int>(tokens.size());
  nn::Var raw = provider.embed(t, tokens);
  if (t.value(raw).dim(1) != T)
    throw std::runtime_error("encode_text: provider output length mismatch");
  nn::Var proj = project(t, raw);

  std::vector<nn::Var> ecols(static_cast<size_t>(T));
  nn::Var ebar;
  if (cfg_.bypass_rnn) {
    for (int i = 0; i < T; ++i) ecols[static_cast<size_t>(i)] = t.col(proj, i);
  } else {
    std::vector<nn::Var> hf(static_cast<size_t>(T)), hb(static_cast<size_t>(T));
    auto sf = fwd_.initial(t);
    for (int i = 0; i < T; ++i) {
      sf = fwd_.step(t, t.col(proj, i), sf);
      hf[static_cast<size_t>(i)] = sf.h;
    }
    auto sb = bwd_.initial(t);
    for (int i = T - 1; i >= 0; --i) {
      sb = bwd_.step(t, t.col(proj, i), sb);
      hb[static_cast<size_t>(i)] = sb.h;
    }
    for (int i = 0; i < T; ++i)
      ecols[static_cast<size_t>(i)] =
          t.concat({hf[static_cast<size_t>(i)], hb[static_cast<size_t>(i)]});
    if (!cfg_.mean_pool)
      ebar = t.concat({hf[static_cast<size_t>(T - 1)], hb[0]});
  }
  if (cfg_.bypass_rnn || cfg_.mean_pool) {
    nn::Var acc = ecols[0];
    for (int i = 1; i < T; ++i) acc = t.add(acc, ecols[static_cast<size_t>(i)]);
    ebar = t.scale(acc, 1.0 / T);
  }

  EncodedText enc;
  enc.T = std::max(pad_to, T);
  enc.mask.assign(static_cast<size_t>(enc.T), 0);
  for (int i = 0; i < T; ++i) enc.mask[static_cast<size_t>(i)] = 1;
  for (int i = T; i < enc.T; ++i)
    ecols.push_back(t.constant(Tensor({cfg_.d_text})));
  enc.e = t.stack_cols(ecols);
  enc.ebar = ebar;
  return enc;
}

CondAugment::CondAugment(nn::ParamStore& store, const std::string& prefix, int d_text, int d_cond,
                         Rng& rng)
    : d_cond_(d_cond), head_(store, prefix + ".head", d_text, 2 * d_cond, rng) {}

ConditioningSample CondAugment::sample(nn::Tape& t, nn::Var ebar, const Tensor& eps) const {
  if (eps.size() != d_cond_) throw std::runtime_error("condition_augment: eps size mismatch");
  nn::Var h = head_.apply(t, ebar);
  nn::Var mu = t.slice(h, 0, d_cond_);
  nn::Var sigma = t.exp_(t.slice(h, d_cond_, d_cond_));
  nn::Var c = t.add(mu, t.mul(sigma, t.constant(eps)));
  return {c, mu, sigma};
}

nn::Var ca_kl_loss(nn::Tape& t, nn::Var mu, nn::Var sigma) {
  nn::Var term = t.add(t.square(mu), t.square(sigma));
  term = t.add_const(term, -1.0);
  term = t.sub(term, t.scale(t.log_(sigma), 2.0));
  return t.scale(t.sum(term), 0.5);
}

}  // namespace t2i::text
