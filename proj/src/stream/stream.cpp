// SPDX-License-Identifier: Apache-2.0
#include "t2i/stream/stream.hpp"

#include <stdexcept>

namespace t2i::stream {

Stream::Stream(nn::ParamStore& store, const std::string& prefix, const StreamConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  if (cfg.vocab_size < 2) throw std::runtime_error("stream: vocab_size not set");
  int in_ch = cfg.external_dim;
  if (cfg.external_dim <= 0) {
    int res = cfg.resolution;
    in_ch = 3;
    int out_ch = cfg.base_channels;
    int idx = 0;
    while (res > 4) {
      if (res % 2 != 0) throw std::runtime_error("stream: resolution must be a power of 2");
      enc_.emplace_back(store, prefix + ".enc" + std::to_string(idx), in_ch, out_ch, 2, 2, 0, rng);
      in_ch = out_ch;
      out_ch = std::min(out_ch * 2, 8 * cfg.base_channels);
      res /= 2;
      ++idx;
    }
  }
  enc_out_ = nn::Affine(store, prefix + ".enc_out", in_ch, cfg.hidden, rng);
  embed_ = &store.create(prefix + ".embed", {cfg.vocab_size, cfg.embed_dim});
  nn::init_gaussian(*embed_, rng, 0.1);
  cell_ = nn::LSTMCell(store, prefix + ".cell", cfg.embed_dim, cfg.hidden, rng);
  out_ = nn::Affine(store, prefix + ".out", cfg.hidden, cfg.vocab_size, rng);
}

nn::Var Stream::encode_for_caption(nn::Tape& t, nn::Var image) const {
  if (cfg_.external_dim > 0)
    throw std::runtime_error("encode_for_caption: module runs in shared-encoder mode");
  const Tensor& v = t.value(image);
  if (v.rank() != 3 || v.dim(0) != 3 || v.dim(1) != cfg_.resolution || v.dim(2) != cfg_.resolution)
    throw std::runtime_error("encode_for_caption: expected 3x" + std::to_string(cfg_.resolution) +
                             "x" + std::to_string(cfg_.resolution) + ", got " + shape_str(v));
  nn::Var x = image;
  for (const auto& conv : enc_) x = t.lrelu(conv.apply(t, x), 0.2);
  return t.tanh_(enc_out_.apply(t, t.mean_hw(x)));
}

nn::Var Stream::encode_external(nn::Tape& t, nn::Var feature) const {
  if (cfg_.external_dim <= 0)
    throw std::runtime_error("encode_external: module has its own encoder");
  return t.tanh_(enc_out_.apply(t, feature));
}

nn::Var Stream::step_probs(nn::Tape& t, nn::Var h) const {
  nn::Var logits = out_.apply(t, h);
  return t.clamp(t.softmax_vec(logits), kProbClamp, 1.0);
}

std::vector<nn::Var> Stream::decode_caption(nn::Tape& t, nn::Var visual,
                                            const std::vector<int>& teacher) const {
  if (teacher.empty() || teacher.front() != cfg_.bos_id)
    throw std::runtime_error("decode_caption: teacher tokens must begin with bos");
  nn::LSTMCell::State st{visual, t.constant(Tensor({cfg_.hidden}))};
  std::vector<nn::Var> steps;
  steps.reserve(teacher.size());
  for (int tok : teacher) {
    nn::Var x = t.col(t.embed_cols(t.param(*embed_), {tok}), 0);
    st = cell_.step(t, x, st);
    steps.push_back(step_probs(t, st.h));
  }
  return steps;
}

std::vector<int> Stream::greedy_decode(const Tensor& visual, int max_len) const {
  nn::Tape t(false);
  nn::LSTMCell::State st{t.constant(visual), t.constant(Tensor({cfg_.hidden}))};
  std::vector<int> out;
  int tok = cfg_.bos_id;
  for (int step = 0; step < max_len; ++step) {
    nn::Var x = t.col(t.embed_cols(t.param(*embed_), {tok}), 0);
    st = cell_.step(t, x, st);
    const Tensor& probs = t.value(step_probs(t, st.h));
    int best = 0;
    for (int i = 1; i < probs.dim(0); ++i)
      if (probs[i] > probs[best]) best = i;  // first max wins: lowest id on ties
    if (best == cfg_.eos_id) break;
    out.push_back(best);
    tok = best;
  }
  return out;
}

nn::Var cross_entropy_loss(nn::Tape& t, const std::vector<std::vector<nn::Var>>& batch_steps,
                           const std::vector<std::vector<int>>& targets,
                           const std::vector<std::vector<uint8_t>>& masks) {
  const size_t m = batch_steps.size();
  if (m == 0 || targets.size() != m || masks.size() != m)
    throw std::runtime_error("cross_entropy_loss: batch size mismatch");
  nn::Var acc = t.constant(Tensor::scalar(0.0));
  for (size_t b = 0; b < m; ++b) {
    const auto& steps = batch_steps[b];
    if (targets[b].size() != steps.size() || masks[b].size() != steps.size())
      throw std::runtime_error("cross_entropy_loss: steps/targets misaligned");
    for (size_t i = 0; i < steps.size(); ++i) {
      if (!masks[b][i]) continue;
      nn::Var p = t.slice(steps[i], targets[b][i], 1);
      acc = t.sub(acc, t.log_(p));
    }
  }
  return t.scale(t.reshape(acc, {1}), 1.0 / static_cast<double>(m));
}

}  // namespace t2i::stream
