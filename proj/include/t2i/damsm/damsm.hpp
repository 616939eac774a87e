// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "t2i/nn/layers.hpp"

namespace t2i::damsm {

struct Hyper {
  double gamma_region = 5.0;  // attention sharpening over regions
  double gamma_score = 5.0;   // word-score sharpening in the matching score
  double gamma_batch = 10.0;  // batch-posterior sharpening
  double lambda = 5.0;        // weight of the matching loss in the total objective
};

struct DamsmConfig {
  int d_common = 24;     // common image/text embedding dimension
  int d_text = 32;
  int base_channels = 12;
  int resolution = 64;   // expected input edge (final-stage image)
  int region_edge = 8;   // feature-map edge; R = region_edge^2
};

// Convolutional region encoder. Patchified stride-2 downsampling (k2 s2) keeps
// constant inputs constant across regions; a 1x1 projection maps to d_common.
class ImageEncoder {
public:
  ImageEncoder(nn::ParamStore& store, const std::string& prefix, const DamsmConfig& cfg, Rng& rng);

  struct Regions {
    nn::Var v;     // d_common x R
    nn::Var vbar;  // d_common
  };
  Regions encode(nn::Tape& t, nn::Var image) const;

  int regions() const { return cfg_.region_edge * cfg_.region_edge; }
  const DamsmConfig& config() const { return cfg_; }

private:
  DamsmConfig cfg_;
  std::vector<nn::Conv2d> downs_;
  nn::Conv2d proj_;
  nn::Affine global_;
};

// Projects text-encoder output into the common space.
class TextProjection {
public:
  TextProjection(nn::ParamStore& store, const std::string& prefix, int d_text, int d_common,
                 Rng& rng);
  nn::Var project_words(nn::Tape& t, nn::Var e) const;       // (d_text,T) -> (d_common,T)
  nn::Var project_sentence(nn::Tape& t, nn::Var ebar) const;  // (d_text) -> (d_common)

private:
  nn::Affine words_, sentence_;
};

// s = e^T v : (T, R) raw similarity scores.
nn::Var similarity_matrix(nn::Tape& t, nn::Var e_common, nn::Var v);

// Softmax over the word axis per region column; masked words come out 0.
nn::Var normalize_similarity(nn::Tape& t, nn::Var s, const std::vector<uint8_t>& word_mask);

struct WordContexts {
  nn::Var contexts;  // d_common x T
  nn::Var alpha;     // T x R, rows sum to 1 over regions
};

// alpha row i = softmax over regions of gamma_region * sbar[i,:];
// context_i = sum_j alpha[i,j] v_j.
WordContexts word_context(nn::Tape& t, nn::Var sbar, nn::Var v, double gamma_region);

// R(Q,D) = logsumexp over unmasked words of gamma_score * cosine(c_i, e_i).
// Throws on a zero-norm context or word vector among unmasked words.
nn::Var matching_score(nn::Tape& t, const WordContexts& ctx, nn::Var e_common, double gamma_score,
                       const std::vector<uint8_t>& word_mask);

// Row softmax (descriptions given image) and column softmax (images given
// description) of gamma_batch * R.
std::pair<nn::Var, nn::Var> batch_posteriors(nn::Tape& t, nn::Var r_matrix, double gamma_batch);

struct TextFeatures {
  nn::Var e;     // d_common x T (already projected)
  nn::Var ebar;  // d_common
  std::vector<uint8_t> mask;
};

struct ImageFeatures {
  nn::Var v;     // d_common x R
  nn::Var vbar;  // d_common
};

struct Losses {
  nn::Var l1w, l2w, l1s, l2s;
  nn::Var total;
};

// Word losses from the diagonal of the word-level posteriors; sentence losses
// run the same pipeline degenerately with R_s(Q,D) = cosine(vbar, ebar).
Losses damsm_loss(nn::Tape& t, const std::vector<ImageFeatures>& images,
                  const std::vector<TextFeatures>& texts, const Hyper& hyper);

// Eq-style combined objective; the cross-entropy term participates only in
// cycle mode.
nn::Var total_objective(nn::Tape& t, nn::Var l_g, nn::Var l_damsm, std::optional<nn::Var> l_ce,
                        double lambda, bool cycle_mode);
double total_objective(double l_g, double l_damsm, std::optional<double> l_ce, double lambda,
                       bool cycle_mode);

}  // namespace t2i::damsm
