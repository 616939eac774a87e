// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; the
// binary exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "damsm_reference.hpp"
#include "helpers.hpp"
#include "t2i/data/dataset.hpp"
#include "t2i/eval/metrics.hpp"
#include "t2i/gan/discriminator.hpp"
#include "t2i/gan/generator.hpp"
#include "t2i/stream/stream.hpp"
#include "t2i/text/encoder.hpp"
#include "t2i/train/trainer.hpp"

using namespace t2i;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", idx, name.c_str(),
              detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. vectorized matching pipeline vs the triple-loop reference
// ---------------------------------------------------------------------------
void criterion1() {
  const auto t0 = Clock::now();
  damsm::Hyper hyper;
  Rng rng(101);
  double worst = 0.0;
  const int M = 3, T = 4, R = 9, D = 8;
  for (int trial = 0; trial < 100; ++trial) {
    nn::Tape t;
    std::vector<damsm::ImageFeatures> images;
    std::vector<damsm::TextFeatures> texts;
    std::vector<testing::ref::Mat> e_ref, v_ref;
    std::vector<std::vector<double>> eb_ref, vb_ref;
    std::vector<std::vector<uint8_t>> masks;
    for (int k = 0; k < M; ++k) {
      Tensor e = testing::random_tensor({D, T}, rng);
      Tensor v = testing::random_tensor({D, R}, rng);
      Tensor eb = testing::random_tensor({D}, rng);
      Tensor vb = testing::random_tensor({D}, rng);
      std::vector<uint8_t> mask(T, 1);
      if (k % 2 == 1) mask.back() = 0;
      texts.push_back({t.constant(e), t.constant(eb), mask});
      images.push_back({t.constant(v), t.constant(vb)});
      testing::ref::Mat em(D, std::vector<double>(T)), vm(D, std::vector<double>(R));
      for (int d = 0; d < D; ++d)
        for (int i = 0; i < T; ++i) em[d][i] = e.at(d, i);
      for (int d = 0; d < D; ++d)
        for (int j = 0; j < R; ++j) vm[d][j] = v.at(d, j);
      e_ref.push_back(em);
      v_ref.push_back(vm);
      eb_ref.emplace_back(eb.data(), eb.data() + D);
      vb_ref.emplace_back(vb.data(), vb.data() + D);
      masks.push_back(mask);
    }
    auto got = damsm::damsm_loss(t, images, texts, hyper);
    auto want = testing::ref::damsm_losses(e_ref, v_ref, eb_ref, vb_ref, masks,
                                           hyper.gamma_region, hyper.gamma_score,
                                           hyper.gamma_batch);
    worst = std::max(worst, std::abs(t.value(got.l1w)[0] - want.l1w));
    worst = std::max(worst, std::abs(t.value(got.l2w)[0] - want.l2w));
    worst = std::max(worst, std::abs(t.value(got.l1s)[0] - want.l1s));
    worst = std::max(worst, std::abs(t.value(got.l2s)[0] - want.l2s));
    worst = std::max(worst, std::abs(t.value(got.total)[0] - want.total));
  }
  const double secs = seconds_since(t0);
  report(1, "matching-loss pipeline agrees with the triple-loop reference",
         worst < 1e-6 && secs < 10.0,
         "max |diff| " + fmt(worst) + " over 100 instances in " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------
// 2. gradient suite
// ---------------------------------------------------------------------------
void criterion2() {
  const auto t0 = Clock::now();
  double worst_plain = 0.0;  // loss-level inputs, tolerance 1e-4
  double worst_conv = 0.0;   // paths through conv encoders, tolerance 1e-3
  Rng pick(202);

  {  // L_DAMSM w.r.t. raw feature inputs
    damsm::Hyper hyper;
    nn::ParamStore store;
    Rng init(1);
    std::vector<std::string> names;
    for (int k = 0; k < 2; ++k) {
      for (auto [base, shape] : std::vector<std::pair<std::string, std::vector<int>>>{
               {"e", {6, 3}}, {"v", {6, 4}}, {"eb", {6}}, {"vb", {6}}}) {
        const std::string name = base + std::to_string(k);
        nn::init_gaussian(store.create(name, shape), init, 1.0);
        names.push_back(name);
      }
    }
    auto build = [&](nn::Tape& t) {
      std::vector<damsm::ImageFeatures> images;
      std::vector<damsm::TextFeatures> texts;
      for (int k = 0; k < 2; ++k) {
        texts.push_back({t.param(store.get("e" + std::to_string(k))),
                         t.param(store.get("eb" + std::to_string(k))),
                         std::vector<uint8_t>(3, 1)});
        images.push_back({t.param(store.get("v" + std::to_string(k))),
                          t.param(store.get("vb" + std::to_string(k)))});
      }
      return damsm::damsm_loss(t, images, texts, hyper).total;
    };
    worst_plain = std::max(worst_plain, testing::check_gradients(build, store, names, 6, pick));
  }

  {  // L_DAMSM through the conv region encoder
    damsm::Hyper hyper;
    nn::ParamStore store;
    Rng init(2);
    damsm::DamsmConfig dc;
    dc.d_common = 6;
    dc.d_text = 8;
    dc.base_channels = 4;
    dc.resolution = 16;
    dc.region_edge = 4;
    damsm::ImageEncoder enc(store, "img", dc, init);
    nn::init_gaussian(store.create("x0", {3, 16, 16}), init, 0.4);
    nn::init_gaussian(store.create("x1", {3, 16, 16}), init, 0.4);
    nn::init_gaussian(store.create("e0", {6, 3}), init, 1.0);
    nn::init_gaussian(store.create("e1", {6, 3}), init, 1.0);
    nn::init_gaussian(store.create("eb0", {6}), init, 1.0);
    nn::init_gaussian(store.create("eb1", {6}), init, 1.0);
    auto build = [&](nn::Tape& t) {
      std::vector<damsm::ImageFeatures> images;
      std::vector<damsm::TextFeatures> texts;
      for (int k = 0; k < 2; ++k) {
        auto reg = enc.encode(t, t.param(store.get("x" + std::to_string(k))));
        images.push_back({reg.v, reg.vbar});
        texts.push_back({t.param(store.get("e" + std::to_string(k))),
                         t.param(store.get("eb" + std::to_string(k))),
                         std::vector<uint8_t>(3, 1)});
      }
      return damsm::damsm_loss(t, images, texts, hyper).total;
    };
    worst_conv = std::max(worst_conv,
                          testing::check_gradients(
                              build, store,
                              {"x0", "x1", "img.down0.W", "img.down1.W", "img.proj.W",
                               "img.global.W", "img.proj.b"},
                              5, pick));
  }

  {  // L_CE through the caption encoder and decoder
    nn::ParamStore store;
    Rng init(3);
    stream::StreamConfig sc;
    sc.resolution = 8;
    sc.base_channels = 4;
    sc.hidden = 6;
    sc.embed_dim = 5;
    sc.vocab_size = 9;
    stream::Stream s(store, "st", sc, init);
    nn::init_gaussian(store.create("img", {3, 8, 8}), init, 0.4);
    std::vector<int> teacher = {1, 4, 7};
    std::vector<int> targets = {4, 7, 2};
    auto build = [&](nn::Tape& t) {
      nn::Var visual = s.encode_for_caption(t, t.param(store.get("img")));
      auto steps = s.decode_caption(t, visual, teacher);
      return stream::cross_entropy_loss(t, {steps}, {targets}, {{1, 1, 1}});
    };
    worst_conv = std::max(
        worst_conv, testing::check_gradients(build, store,
                                             {"img", "st.enc0.W", "st.enc_out.W", "st.cell.W_ih",
                                              "st.cell.W_hh", "st.out.W", "st.embed"},
                                             5, pick));
  }

  {  // L_Gi and L_Di through a discriminator
    nn::ParamStore store;
    Rng init(4);
    gan::DiscriminatorConfig dc;
    dc.base_channels = 4;
    dc.max_channels = 16;
    dc.d_text = 6;
    gan::StageDiscriminator disc(store, "d", 8, dc, init);
    nn::init_gaussian(store.create("fake", {3, 8, 8}), init, 0.4);
    nn::init_gaussian(store.create("real", {3, 8, 8}), init, 0.4);
    nn::init_gaussian(store.create("ebar", {6}), init, 1.0);
    auto build_g = [&](nn::Tape& t) {
      auto out = disc.discriminate(t, t.tanh_(t.param(store.get("fake"))),
                                   t.param(store.get("ebar")));
      return gan::generator_adv_loss_stage(t, {out});
    };
    worst_conv = std::max(worst_conv,
                          testing::check_gradients(build_g, store,
                                                   {"fake", "ebar", "d.down0.W", "d.uncond.W",
                                                    "d.cond_mix.W", "d.cond.W"},
                                                   5, pick));
    auto build_d = [&](nn::Tape& t) {
      auto r = disc.discriminate(t, t.param(store.get("real")), t.param(store.get("ebar")));
      auto f = disc.discriminate(t, t.tanh_(t.param(store.get("fake"))),
                                 t.param(store.get("ebar")));
      return gan::discriminator_loss_stage(t, {r}, {f});
    };
    worst_conv = std::max(worst_conv,
                          testing::check_gradients(build_d, store,
                                                   {"real", "fake", "ebar", "d.down0.b",
                                                    "d.uncond.b", "d.cond.b"},
                                                   5, pick));
  }

  {  // conditioning-augmentation KL
    nn::ParamStore store;
    Rng init(5);
    text::CondAugment ca(store, "ca", 8, 4, init);
    nn::init_gaussian(store.create("ebar", {8}), init, 1.0);
    Tensor eps = testing::random_tensor({4}, init);
    auto build = [&](nn::Tape& t) {
      auto s = ca.sample(t, t.param(store.get("ebar")), eps);
      return text::ca_kl_loss(t, s.mu, s.sigma);
    };
    worst_plain = std::max(worst_plain,
                           testing::check_gradients(build, store,
                                                    {"ebar", "ca.head.W", "ca.head.b"}, 8, pick));
  }

  const double secs = seconds_since(t0);
  report(2, "analytic gradients match central finite differences",
         worst_plain < 1e-4 && worst_conv < 1e-3 && secs < 60.0,
         "loss-level " + fmt(worst_plain) + " (tol 1e-4), conv paths " + fmt(worst_conv) +
             " (tol 1e-3), " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------
// 3. normalization invariants over 1000 random trials each
// ---------------------------------------------------------------------------
void criterion3() {
  Rng rng(303);
  double worst = 0.0;
  auto track = [&worst](double sum) { worst = std::max(worst, std::abs(sum - 1.0)); };

  {  // similarity columns and attention rows
    for (int trial = 0; trial < 1000; ++trial) {
      nn::Tape t;
      Tensor s = testing::random_tensor({4, 6}, rng, 2.0);
      std::vector<uint8_t> mask = {1, 1, 1, static_cast<uint8_t>(trial % 2)};
      nn::Var sbar = damsm::normalize_similarity(t, t.constant(s), mask);
      for (int j = 0; j < 6; ++j) {
        double col = 0;
        for (int i = 0; i < 4; ++i) col += t.value(sbar).at(i, j);
        track(col);
      }
      auto ctx = damsm::word_context(t, sbar, t.constant(testing::random_tensor({5, 6}, rng)), 5.0);
      for (int i = 0; i < 4; ++i) {
        double row = 0;
        for (int j = 0; j < 6; ++j) row += t.value(ctx.alpha).at(i, j);
        track(row);
      }
    }
  }

  {  // generator attention rows
    nn::ParamStore store;
    Rng init(6);
    gan::GeneratorConfig gc;
    gc.d_cond = 4;
    gc.d_z = 4;
    gc.d_text = 6;
    gc.base_channels = 6;
    gc.base_resolution = 4;
    gc.stages = 2;
    gan::GeneratorStack gen(store, "gen", gc, init);
    for (int trial = 0; trial < 1000; ++trial) {
      nn::Tape t(false);
      std::vector<uint8_t> mask = {1, 1, static_cast<uint8_t>(trial % 2 ? 1 : 0)};
      auto attn = gen.word_attention(t, t.constant(testing::random_tensor({6, 4, 4}, rng)),
                                     t.constant(testing::random_tensor({6, 3}, rng)), mask, 1);
      for (int r = 0; r < 16; ++r) {
        double row = 0;
        for (int w = 0; w < 3; ++w) row += t.value(attn.beta).at(r, w);
        track(row);
      }
    }
  }

  {  // batch posterior rows and columns
    for (int trial = 0; trial < 1000; ++trial) {
      nn::Tape t;
      auto [pdq, pqd] = damsm::batch_posteriors(t, t.constant(testing::random_tensor({4, 4}, rng)),
                                                10.0);
      for (int i = 0; i < 4; ++i) {
        double row = 0, col = 0;
        for (int j = 0; j < 4; ++j) {
          row += t.value(pdq).at(i, j);
          col += t.value(pqd).at(j, i);
        }
        track(row);
        track(col);
      }
    }
  }

  {  // decoder step distributions
    nn::ParamStore store;
    Rng init(7);
    stream::StreamConfig sc;
    sc.resolution = 8;
    sc.base_channels = 4;
    sc.hidden = 6;
    sc.embed_dim = 5;
    sc.vocab_size = 11;
    stream::Stream s(store, "st", sc, init);
    for (int trial = 0; trial < 1000; ++trial) {
      nn::Tape t(false);
      auto steps = s.decode_caption(t, t.tanh_(t.constant(testing::random_tensor({6}, rng))),
                                    {1, rng.uniform_int(3, 10)});
      for (const auto& st : steps) {
        double sum = 0;
        for (int v = 0; v < 11; ++v) sum += t.value(st)[v];
        track(sum);
      }
    }
  }

  report(3, "softmax families are stochastic to 1e-6 over 1000 trials", worst < 1e-6,
         "max |sum-1| " + fmt(worst));
}

// ---------------------------------------------------------------------------
// 4. inception-score analytics
// ---------------------------------------------------------------------------
void criterion4() {
  bool ok = true;
  std::string detail;

  std::vector<std::vector<double>> uniform(7, {0.25, 0.25, 0.25, 0.25});
  const double is_uniform = eval::inception_score(uniform);
  ok = ok && std::abs(is_uniform - 1.0) < 1e-9;

  double worst_k = 0.0;
  for (int k = 2; k <= 10; ++k) {
    std::vector<std::vector<double>> conds;
    for (int i = 0; i < k; ++i) {
      std::vector<double> c(static_cast<size_t>(k), 0.0);
      c[static_cast<size_t>(i)] = 1.0;
      conds.push_back(c);
    }
    worst_k = std::max(worst_k, std::abs(eval::inception_score(conds) - k));
  }
  ok = ok && worst_k < 1e-9;

  const double is_two = eval::inception_score({{0.9, 0.1}, {0.1, 0.9}});
  const long double oracle = std::exp(0.9L * std::log(1.8L) + 0.1L * std::log(0.2L));
  ok = ok && std::abs(is_two - static_cast<double>(oracle)) < 1e-9;
  ok = ok && std::abs(is_two - std::exp(0.3681)) < 1e-3;

  report(4, "inception-score closed forms", ok,
         "uniform " + fmt(is_uniform) + ", one-hot max err " + fmt(worst_k) + ", two-sample " +
             fmt(is_two) + " vs oracle " + fmt(static_cast<double>(oracle)));
}

// ---------------------------------------------------------------------------
// 5. closed-form loss points
// ---------------------------------------------------------------------------
void criterion5() {
  nn::Tape t;
  auto half = [&] {
    return gan::StageDiscriminator::Output{t.constant(Tensor::full({1}, 0.5)),
                                           t.constant(Tensor::full({1}, 0.5))};
  };
  const double l_gi = t.value(gan::generator_adv_loss_stage(t, {half()}))[0];
  const double l_di = t.value(gan::discriminator_loss_stage(t, {half()}, {half()}))[0];

  const int V = 23;
  std::vector<std::vector<nn::Var>> steps = {{t.constant(Tensor::full({V}, 1.0 / V))}};
  const double l_ce = t.value(stream::cross_entropy_loss(t, steps, {{5}}, {{1}}))[0];

  const bool ok = std::abs(l_gi - std::log(2.0)) < 1e-9 &&
                  std::abs(l_di - 2.0 * std::log(2.0)) < 1e-9 &&
                  std::abs(l_ce - std::log(static_cast<double>(V))) < 1e-9;
  report(5, "closed-form loss points", ok,
         "L_Gi " + fmt(l_gi) + " (ln 2), L_Di " + fmt(l_di) + " (2 ln 2), L_CE " + fmt(l_ce) +
             " (ln " + std::to_string(V) + ")");
}

// ---------------------------------------------------------------------------
// desk-scale configuration shared by criteria 6-8
// ---------------------------------------------------------------------------
train::TrainConfig desk_config() {
  train::TrainConfig cfg;
  cfg.mode = "cyclegan_bert";
  cfg.seed = 2026;
  cfg.resolutions = {16, 32, 64};
  cfg.batch_size = 16;
  cfg.t_max = 16;
  cfg.d_provider = 24;
  cfg.d_text = 24;
  cfg.d_cond = 12;
  cfg.d_z = 12;
  cfg.d_common = 16;
  cfg.gen_base_channels = 12;
  cfg.disc_base_channels = 6;
  cfg.damsm_base_channels = 8;
  cfg.damsm_region_edge = 8;
  cfg.stream_base_channels = 8;
  cfg.stream_hidden = 32;
  cfg.stream_embed = 16;
  cfg.res_blocks = 2;
  cfg.lr = 4e-4;
  cfg.damsm_lr = 3e-4;
  cfg.stream_lr = 2e-3;
  cfg.epochs = 30;
  cfg.damsm_epochs = 20;
  cfg.stream_epochs = 6;
  cfg.checkpoint_every = 25;
  return cfg;
}

data::Dataset desk_dataset() {
  data::SyntheticConfig s;
  s.n_classes = 8;
  s.n_per_class = 64;  // 512 images
  s.captions_per_image = 1;
  s.resolutions = {16, 32, 64};
  s.render_resolution = 64;
  auto raw = data::generate_synthetic_dataset(s, 2026);
  data::AssembleOptions opt;
  opt.resolutions = {16, 32, 64};
  opt.t_max = 16;
  return data::assemble_dataset(raw, opt);
}

// ---------------------------------------------------------------------------
// 6. desk-scale trend
// ---------------------------------------------------------------------------
void criterion6() {
  const auto t0 = Clock::now();
  train::TrainConfig cfg = desk_config();
  data::Dataset ds = desk_dataset();

  std::printf("  [criterion 6] training the evaluation classifier...\n");
  std::fflush(stdout);
  eval::EvalClassifier classifier = train::train_eval_classifier(ds, 77);

  train::Models m;
  train::build_models(m, cfg, ds.vocab.size());
  const double is_untrained = train::evaluate_is(m, cfg, ds, classifier, 909);
  std::printf("  [criterion 6] untrained IS %.4f (classifier val acc %.3f)\n", is_untrained,
              classifier.val_accuracy());
  std::fflush(stdout);

  std::printf("  [criterion 6] matching pretrain (%d epochs)...\n", cfg.damsm_epochs);
  std::fflush(stdout);
  auto damsm_res = train::pretrain_damsm(cfg, ds, m, "");
  const double first = damsm_res.epoch_losses.front();
  const double last = damsm_res.epoch_losses.back();
  const double drop = (first - last) / first;
  std::printf("  [criterion 6] matching loss %.4f -> %.4f (drop %.1f%%)\n", first, last,
              100.0 * drop);
  std::fflush(stdout);

  std::printf("  [criterion 6] caption pretrain (%d epochs)...\n", cfg.stream_epochs);
  std::fflush(stdout);
  train::pretrain_stream(cfg, ds, m, "");

  std::printf("  [criterion 6] adversarial training (%d epochs)...\n", cfg.epochs);
  std::fflush(stdout);
  train::train_gan(cfg, ds, m, "");
  const double is_trained = train::evaluate_is(m, cfg, ds, classifier, 909);

  const double secs = seconds_since(t0);
  const bool ok = is_trained > is_untrained && drop >= 0.20 && secs < 7200.0;
  report(6, "desk-scale trend after 30 epochs", ok,
         "IS " + fmt(is_untrained) + " -> " + fmt(is_trained) + ", matching-loss drop " +
             fmt(100.0 * drop) + "% (need >= 20%), " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------
// 7. caption-regeneration overfit
// ---------------------------------------------------------------------------
void criterion7() {
  train::TrainConfig cfg = desk_config();
  cfg.stream_epochs = 200;
  cfg.stream_lr = 1e-2;
  cfg.batch_size = 4;

  data::Dataset full = desk_dataset();
  data::Dataset tiny;
  tiny.vocab = full.vocab;
  tiny.class_names = full.class_names;
  std::set<int> seen;
  for (const auto& rec : full.records) {
    if (tiny.records.size() >= 8) break;
    if (seen.count(rec.class_id)) continue;
    seen.insert(rec.class_id);
    data::CaptionRecord r = rec;
    r.image_index = static_cast<int>(tiny.images.size());
    tiny.images.push_back(full.images[static_cast<size_t>(rec.image_index)]);
    tiny.records.push_back(r);
  }

  train::Models m;
  train::build_models(m, cfg, tiny.vocab.size());
  auto res = train::pretrain_stream(cfg, tiny, m, "");

  // final teacher-forced token accuracy over the 8 samples
  long correct = 0, total = 0;
  bool greedy_exact = true;
  for (const auto& rec : tiny.records) {
    nn::Tape t(false);
    const auto& img = tiny.images[static_cast<size_t>(rec.image_index)];
    nn::Var visual = m.stream_mod->encode_for_caption(t, t.constant(img.pyramid.back()));
    std::vector<int> teacher = {data::Vocabulary::kBos};
    teacher.insert(teacher.end(), rec.tokens.begin(), rec.tokens.end());
    std::vector<int> targets = rec.tokens;
    targets.push_back(data::Vocabulary::kEos);
    auto steps = m.stream_mod->decode_caption(t, visual, teacher);
    for (size_t i = 0; i < steps.size(); ++i) {
      const Tensor& p = t.value(steps[i]);
      int best = 0;
      for (int v = 1; v < p.dim(0); ++v)
        if (p[v] > p[best]) best = v;
      if (best == targets[i]) ++correct;
      ++total;
    }
    if (m.stream_mod->greedy_decode(t.value(visual), cfg.t_max + 2) != rec.tokens)
      greedy_exact = false;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(total);
  report(7, "caption module overfits 8 samples", acc >= 0.99 && greedy_exact,
         "token accuracy " + fmt(acc) + ", greedy reproduction " +
             (greedy_exact ? "exact" : "NOT exact"));
  (void)res;
}

// ---------------------------------------------------------------------------
// 8. reproducibility
// ---------------------------------------------------------------------------
void criterion8() {
  train::TrainConfig cfg = desk_config();
  cfg.epochs = 2;
  cfg.damsm_epochs = 2;
  cfg.stream_epochs = 2;
  cfg.checkpoint_every = 1;

  data::SyntheticConfig s;
  s.n_classes = 4;
  s.n_per_class = 16;
  s.captions_per_image = 1;
  s.resolutions = {16, 32, 64};
  s.render_resolution = 64;
  auto raw = data::generate_synthetic_dataset(s, 11);
  data::AssembleOptions opt;
  opt.resolutions = {16, 32, 64};
  opt.t_max = 16;
  data::Dataset ds = data::assemble_dataset(raw, opt);

  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  };

  const fs::path base = fs::temp_directory_path() / "t2i_acceptance_repro";
  fs::remove_all(base);
  std::vector<std::string> csvs;
  std::string last_ckpt;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = base / ("run" + std::to_string(run));
    fs::create_directories(dir);
    train::Models m;
    train::build_models(m, cfg, ds.vocab.size());
    train::pretrain_damsm(cfg, ds, m, dir.string());
    train::pretrain_stream(cfg, ds, m, dir.string());
    auto gan = train::train_gan(cfg, ds, m, dir.string());
    csvs.push_back(slurp((dir / "metrics.csv").string()));
    last_ckpt = gan.checkpoint_paths.back();
  }
  const bool csv_same = !csvs[0].empty() && csvs[0] == csvs[1];

  // checkpoint round trip is bit-exact
  train::Models m;
  train::build_models(m, cfg, ds.vocab.size());
  train::Checkpoint ck = train::load_checkpoint(last_ckpt);
  train::restore_params(ck, m.store, cfg.digest());
  const std::string copy = (base / "copy.ckpt").string();
  train::save_checkpoint(copy, train::snapshot(m.store, cfg.digest(), cfg.seed, ck.epoch,
                                               ck.loss_history));
  train::Checkpoint ck2 = train::load_checkpoint(copy);
  bool bits_same = ck.params.size() == ck2.params.size();
  for (size_t i = 0; bits_same && i < ck.params.size(); ++i) {
    bits_same = ck.params[i].first == ck2.params[i].first &&
                ck.params[i].second.size() == ck2.params[i].second.size() &&
                std::memcmp(ck.params[i].second.data(), ck2.params[i].second.data(),
                            sizeof(double) * static_cast<size_t>(ck.params[i].second.size())) == 0;
  }
  fs::remove_all(base);
  report(8, "seeded runs reproduce metrics byte-for-byte; checkpoints are bit-exact",
         csv_same && bits_same,
         std::string("metrics ") + (csv_same ? "identical" : "DIFFER") + ", parameters " +
             (bits_same ? "bit-exact" : "DIFFER"));
}

// ---------------------------------------------------------------------------
// 9. preprocessing contracts
// ---------------------------------------------------------------------------
void criterion9() {
  Rng rng(909);
  data::ImageU8 img;
  img.w = 96;
  img.h = 96;
  img.rgb.assign(static_cast<size_t>(96) * 96 * 3, 0);
  bool crops_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    data::Rect b;
    b.w = rng.uniform_int(1, 95);
    b.h = rng.uniform_int(1, 95);
    b.x = rng.uniform_int(0, 96 - b.w);
    b.y = rng.uniform_int(0, 96 - b.h);
    auto r = data::crop_to_bbox_ratio(img, b, 0.75);
    const double ratio =
        static_cast<double>(b.area()) / (static_cast<double>(r.image.w) * r.image.h);
    if (!r.clamped && ratio < 0.75) crops_ok = false;
  }

  std::vector<data::CaptionRecord> recs;
  for (int c = 0; c < 20; ++c) {
    data::CaptionRecord r;
    r.class_id = c;
    r.tokens = {5};
    recs.push_back(r);
  }
  bool splits_ok = true;
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    auto m = data::split_class_disjoint(recs, 0.75, seed);
    for (int c : m.train_classes)
      if (m.test_classes.count(c)) splits_ok = false;
    if (m.train_classes.size() + m.test_classes.size() != 20) splits_ok = false;
  }
  report(9, "crop ratio and class-disjoint split contracts", crops_ok && splits_ok,
         std::string("crops ") + (crops_ok ? "ok" : "VIOLATED") + ", splits " +
             (splits_ok ? "disjoint over 1000 seeds" : "OVERLAP"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  std::printf("acceptance suite\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d/9 criteria passed in %.1f s\n", 9 - g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
