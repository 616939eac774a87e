// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "t2i/damsm/damsm.hpp"
#include "t2i/gan/discriminator.hpp"
#include "t2i/gan/generator.hpp"
#include "t2i/stream/stream.hpp"
#include "t2i/text/encoder.hpp"
#include "t2i/train/config.hpp"

namespace t2i::train {

// Every module built against one parameter store. In attngan_baseline mode no
// STREAM parameters exist at all.
struct Models {
  nn::ParamStore store;
  std::unique_ptr<text::EmbeddingProvider> provider;
  std::unique_ptr<text::TextEncoder> encoder;
  std::unique_ptr<text::CondAugment> ca;
  std::unique_ptr<gan::GeneratorStack> gen;
  std::vector<std::unique_ptr<gan::StageDiscriminator>> discs;
  std::unique_ptr<damsm::ImageEncoder> damsm_img;
  std::unique_ptr<damsm::TextProjection> damsm_txt;
  std::unique_ptr<stream::Stream> stream_mod;
  bool cycle_mode = false;

  Models() = default;
  Models(const Models&) = delete;
  Models& operator=(const Models&) = delete;
};

// Deterministic construction order; parameter init derives from cfg.seed.
void build_models(Models& m, const TrainConfig& cfg, int vocab_size);

damsm::Hyper hyper_of(const TrainConfig& cfg);

}  // namespace t2i::train
