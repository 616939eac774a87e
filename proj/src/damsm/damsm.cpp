// SPDX-License-Identifier: Apache-2.0
#include "t2i/damsm/damsm.hpp"

#include <cmath>
#include <stdexcept>

namespace t2i::damsm {

ImageEncoder::ImageEncoder(nn::ParamStore& store, const std::string& prefix,
                           const DamsmConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  if (cfg.resolution % cfg.region_edge != 0)
    throw std::runtime_error("damsm encoder: resolution must be a multiple of region_edge");
  int span = cfg.resolution / cfg.region_edge;
  int in_ch = 3;
  int out_ch = cfg.base_channels;
  int idx = 0;
  while (span > 1) {
    if (span % 2 != 0) throw std::runtime_error("damsm encoder: resolution/region_edge must be a power of 2");
    downs_.emplace_back(store, prefix + ".down" + std::to_string(idx), in_ch, out_ch, 2, 2, 0, rng);
    in_ch = out_ch;
    out_ch = std::min(out_ch * 2, 8 * cfg.base_channels);
    span /= 2;
    ++idx;
  }
  proj_ = nn::Conv2d(store, prefix + ".proj", in_ch, cfg.d_common, 1, 1, 0, rng);
  global_ = nn::Affine(store, prefix + ".global", cfg.d_common, cfg.d_common, rng);
}

ImageEncoder::Regions ImageEncoder::encode(nn::Tape& t, nn::Var image) const {
  const Tensor& v = t.value(image);
  if (v.rank() != 3 || v.dim(0) != 3 || v.dim(1) != cfg_.resolution || v.dim(2) != cfg_.resolution)
    throw std::runtime_error("damsm encode_image: expected 3x" + std::to_string(cfg_.resolution) +
                             "x" + std::to_string(cfg_.resolution) + ", got " + shape_str(v));
  nn::Var x = image;
  for (const auto& conv : downs_) x = t.lrelu(conv.apply(t, x), 0.2);
  nn::Var feat = proj_.apply(t, x);  // d_common x edge x edge
  nn::Var vmat = t.reshape(feat, {cfg_.d_common, regions()});
  nn::Var vbar = global_.apply(t, t.mean_hw(feat));
  return {vmat, vbar};
}

TextProjection::TextProjection(nn::ParamStore& store, const std::string& prefix, int d_text,
                               int d_common, Rng& rng)
    : words_(store, prefix + ".words", d_text, d_common, rng),
      sentence_(store, prefix + ".sentence", d_text, d_common, rng) {}

nn::Var TextProjection::project_words(nn::Tape& t, nn::Var e) const {
  return words_.apply_cols(t, e);
}

nn::Var TextProjection::project_sentence(nn::Tape& t, nn::Var ebar) const {
  return sentence_.apply(t, ebar);
}

nn::Var similarity_matrix(nn::Tape& t, nn::Var e_common, nn::Var v) {
  const Tensor& ve = t.value(e_common);
  const Tensor& vv = t.value(v);
  if (ve.rank() != 2 || vv.rank() != 2 || ve.dim(0) != vv.dim(0))
    throw std::runtime_error("similarity_matrix: dimension mismatch " + shape_str(ve) + " vs " +
                             shape_str(vv));
  return t.matmul_tn(e_common, v);  // (T, R)
}

nn::Var normalize_similarity(nn::Tape& t, nn::Var s, const std::vector<uint8_t>& word_mask) {
  return t.softmax_axis(s, 0, word_mask.empty() ? nullptr : &word_mask);
}

WordContexts word_context(nn::Tape& t, nn::Var sbar, nn::Var v, double gamma_region) {
  nn::Var alpha = t.softmax_axis(t.scale(sbar, gamma_region), 1, nullptr);
  nn::Var contexts = t.matmul_nt(v, alpha);  // (D,R)x(T,R)^T -> (D,T)
  return {contexts, alpha};
}

nn::Var matching_score(nn::Tape& t, const WordContexts& ctx, nn::Var e_common, double gamma_score,
                       const std::vector<uint8_t>& word_mask) {
  const int T = t.value(e_common).dim(1);
  std::vector<nn::Var> scores;
  scores.reserve(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) {
    if (!word_mask.empty() && !word_mask[static_cast<size_t>(i)]) {
      scores.push_back(t.constant(Tensor::scalar(0.0)));
      continue;
    }
    nn::Var ci = t.col(ctx.contexts, i);
    nn::Var ei = t.col(e_common, i);
    double nc = 0.0, ne = 0.0;
    for (int d = 0; d < t.value(ci).dim(0); ++d) {
      nc += t.value(ci)[d] * t.value(ci)[d];
      ne += t.value(ei)[d] * t.value(ei)[d];
    }
    if (nc == 0.0 || ne == 0.0)
      throw std::runtime_error("matching_score: zero-norm vector at word " + std::to_string(i));
    scores.push_back(t.scale(nn::cosine(t, ci, ei), gamma_score));
  }
  nn::Var svec = t.concat(scores);
  if (word_mask.empty()) return t.masked_lse(svec, nullptr);
  return t.masked_lse(svec, &word_mask);
}

std::pair<nn::Var, nn::Var> batch_posteriors(nn::Tape& t, nn::Var r_matrix, double gamma_batch) {
  const Tensor& r = t.value(r_matrix);
  if (r.rank() != 2 || r.dim(0) != r.dim(1))
    throw std::runtime_error("batch_posteriors: square matrix expected");
  nn::Var scaled = t.scale(r_matrix, gamma_batch);
  nn::Var p_desc_given_image = t.softmax_axis(scaled, 1, nullptr);  // over descriptions j
  nn::Var p_image_given_desc = t.softmax_axis(scaled, 0, nullptr);  // over images i
  return {p_desc_given_image, p_image_given_desc};
}

namespace {

nn::Var neg_log_diag_sum(nn::Tape& t, nn::Var p) {
  const int m = t.value(p).dim(0);
  nn::Var acc = t.constant(Tensor::scalar(0.0));
  for (int i = 0; i < m; ++i) acc = t.add(acc, t.log_(t.pick(p, i, i)));
  return t.scale(acc, -1.0);
}

}  // namespace

Losses damsm_loss(nn::Tape& t, const std::vector<ImageFeatures>& images,
                  const std::vector<TextFeatures>& texts, const Hyper& hyper) {
  const int m = static_cast<int>(images.size());
  if (m == 0 || texts.size() != images.size())
    throw std::runtime_error("damsm_loss: image/text batch mismatch");

  std::vector<nn::Var> rw_cells, rs_cells;
  rw_cells.reserve(static_cast<size_t>(m) * m);
  rs_cells.reserve(static_cast<size_t>(m) * m);
  for (int i = 0; i < m; ++i) {      // image index
    for (int j = 0; j < m; ++j) {    // description index
      const auto& txt = texts[static_cast<size_t>(j)];
      nn::Var s = similarity_matrix(t, txt.e, images[static_cast<size_t>(i)].v);
      nn::Var sbar = normalize_similarity(t, s, txt.mask);
      WordContexts ctx = word_context(t, sbar, images[static_cast<size_t>(i)].v, hyper.gamma_region);
      rw_cells.push_back(matching_score(t, ctx, txt.e, hyper.gamma_score, txt.mask));
      rs_cells.push_back(nn::cosine(t, images[static_cast<size_t>(i)].vbar, txt.ebar));
    }
  }
  nn::Var rw = t.stack_scalars(rw_cells, m, m);
  nn::Var rs = t.stack_scalars(rs_cells, m, m);

  auto [pw_dq, pw_qd] = batch_posteriors(t, rw, hyper.gamma_batch);
  auto [ps_dq, ps_qd] = batch_posteriors(t, rs, hyper.gamma_batch);

  Losses out;
  out.l1w = neg_log_diag_sum(t, pw_dq);
  out.l2w = neg_log_diag_sum(t, pw_qd);
  out.l1s = neg_log_diag_sum(t, ps_dq);
  out.l2s = neg_log_diag_sum(t, ps_qd);
  out.total = t.add(t.add(out.l1w, out.l2w), t.add(out.l1s, out.l2s));
  return out;
}

nn::Var total_objective(nn::Tape& t, nn::Var l_g, nn::Var l_damsm, std::optional<nn::Var> l_ce,
                        double lambda, bool cycle_mode) {
  nn::Var total = t.add(l_g, t.scale(l_damsm, lambda));
  if (cycle_mode) {
    if (!l_ce) throw std::runtime_error("total_objective: cycle mode requires L_CE");
    total = t.add(total, t.scale(*l_ce, lambda));
  }
  return total;
}

double total_objective(double l_g, double l_damsm, std::optional<double> l_ce, double lambda,
                       bool cycle_mode) {
  double total = l_g + lambda * l_damsm;
  if (cycle_mode) {
    if (!l_ce) throw std::runtime_error("total_objective: cycle mode requires L_CE");
    total += lambda * *l_ce;
  }
  return total;
}

}  // namespace t2i::damsm
