// SPDX-License-Identifier: Apache-2.0
#include "t2i/train/models.hpp"

namespace t2i::train {

damsm::Hyper hyper_of(const TrainConfig& cfg) {
  damsm::Hyper h;
  h.gamma_region = cfg.gamma_region;
  h.gamma_score = cfg.gamma_score;
  h.gamma_batch = cfg.gamma_batch;
  h.lambda = cfg.lambda;
  return h;
}

void build_models(Models& m, const TrainConfig& cfg, int vocab_size) {
  cfg.validate();
  m.cycle_mode = cfg.mode == "cyclegan_bert";
  Rng init = Rng(cfg.seed).fork(0x1A17);

  // The stand-in contextual provider acts like a fixed pretrained model, so
  // its seed is a constant rather than the run seed.
  if (cfg.provider == "learned") {
    m.provider = std::make_unique<text::LearnedTableProvider>(m.store, "text.provider", vocab_size,
                                                              cfg.d_provider, init);
  } else if (cfg.provider == "standin") {
    m.provider = std::make_unique<text::StandinContextualProvider>(cfg.d_provider, 0xBEC7ULL);
  } else {
    m.provider = std::make_unique<text::FileBackedProvider>(cfg.provider.substr(5));
  }

  text::TextEncoderConfig tc;
  tc.d_provider = cfg.d_provider;
  tc.d_text = cfg.d_text;
  tc.mean_pool = cfg.mean_pool_sentence;
  tc.bypass_rnn = cfg.bypass_rnn;
  m.encoder = std::make_unique<text::TextEncoder>(m.store, "text.enc", tc, init);

  m.ca = std::make_unique<text::CondAugment>(m.store, "ca", cfg.d_text, cfg.d_cond, init);

  gan::GeneratorConfig gc;
  gc.d_cond = cfg.d_cond;
  gc.d_z = cfg.d_z;
  gc.d_text = cfg.d_text;
  gc.base_channels = cfg.gen_base_channels;
  gc.base_resolution = cfg.resolutions.front();
  gc.stages = static_cast<int>(cfg.resolutions.size());
  gc.res_blocks = cfg.res_blocks;
  m.gen = std::make_unique<gan::GeneratorStack>(m.store, "gen", gc, init);

  gan::DiscriminatorConfig dc;
  dc.base_channels = cfg.disc_base_channels;
  dc.d_text = cfg.d_text;
  for (size_t i = 0; i < cfg.resolutions.size(); ++i)
    m.discs.push_back(std::make_unique<gan::StageDiscriminator>(
        m.store, "disc" + std::to_string(i), cfg.resolutions[i], dc, init));

  damsm::DamsmConfig dmc;
  dmc.d_common = cfg.d_common;
  dmc.d_text = cfg.d_text;
  dmc.base_channels = cfg.damsm_base_channels;
  dmc.resolution = cfg.resolutions.back();
  dmc.region_edge = cfg.damsm_region_edge;
  m.damsm_img = std::make_unique<damsm::ImageEncoder>(m.store, "damsm.img", dmc, init);
  m.damsm_txt = std::make_unique<damsm::TextProjection>(m.store, "damsm.txt", cfg.d_text,
                                                        cfg.d_common, init);

  if (m.cycle_mode) {
    stream::StreamConfig sc;
    sc.resolution = cfg.resolutions.back();
    sc.base_channels = cfg.stream_base_channels;
    sc.hidden = cfg.stream_hidden;
    sc.embed_dim = cfg.stream_embed;
    sc.vocab_size = vocab_size;
    if (cfg.share_stream_encoder) sc.external_dim = cfg.d_common;
    m.stream_mod = std::make_unique<stream::Stream>(m.store, "stream", sc, init);
  }
}

}  // namespace t2i::train
