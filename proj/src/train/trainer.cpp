// SPDX-License-Identifier: Apache-2.0
#include "t2i/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "t2i/core/error.hpp"
#include "t2i/core/kernels.hpp"
#include "t2i/eval/metrics.hpp"
#include "t2i/nn/adam.hpp"

namespace fs = std::filesystem;

namespace t2i::train {

std::string make_run_dir(const TrainConfig& cfg, const std::string& out_root) {
  fs::create_directories(out_root);
  const std::string base = cfg.digest_hex() + "-s" + std::to_string(cfg.seed);
  fs::path dir = fs::path(out_root) / base;
  int rerun = 2;
  while (fs::exists(dir)) dir = fs::path(out_root) / (base + "-r" + std::to_string(rerun++));
  fs::create_directories(dir);
  save_config_file(cfg, (dir / "config.txt").string());
  return dir.string();
}

void apply_thread_config(const TrainConfig& cfg) {
  kernels::set_threads(cfg.threads);
  kernels::set_parallel(cfg.threads != 1);
}

void abort_if_nonfinite(const std::string& run_dir, const std::string& phase, int epoch,
                        int batch, const std::vector<std::string>& record_ids,
                        const std::string& name, double value) {
  if (std::isfinite(value)) return;
  nlohmann::json dump;
  dump["phase"] = phase;
  dump["epoch"] = epoch;
  dump["batch"] = batch;
  dump["loss"] = name;
  dump["value"] = std::isnan(value) ? "nan" : "inf";
  dump["records"] = record_ids;
  if (!run_dir.empty()) {
    std::ofstream out(fs::path(run_dir) / "nan_dump.json");
    out << dump.dump(2) << "\n";
  }
  throw NumericalAbort(phase + ": non-finite " + name + " at epoch " + std::to_string(epoch) +
                       " batch " + std::to_string(batch));
}

namespace {

struct NanGuard {
  std::string run_dir;
  std::string phase;
  int epoch = 0;
  int batch = 0;
  std::vector<std::string> record_ids;

  void check(const std::string& name, double v) const {
    abort_if_nonfinite(run_dir, phase, epoch, batch, record_ids, name, v);
  }
};

std::vector<std::vector<size_t>> make_batches(size_t n, int batch_size, Rng& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), static_cast<size_t>(0));
  rng.shuffle(order);
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n; start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(n, start + static_cast<size_t>(batch_size));
    if (end - start < 2) break;  // posteriors need at least two pairs
    batches.emplace_back(order.begin() + static_cast<long>(start),
                         order.begin() + static_cast<long>(end));
  }
  return batches;
}

Tensor gaussian_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian();
  return t;
}

// Running means of named loss components over an epoch.
struct Meter {
  std::map<std::string, std::pair<double, long>> acc;
  void add(const std::string& k, double v) {
    auto& [s, n] = acc[k];
    s += v;
    ++n;
  }
  double mean(const std::string& k) const {
    auto it = acc.find(k);
    return it == acc.end() || it->second.second == 0 ? 0.0
                                                     : it->second.first / it->second.second;
  }
};

std::vector<std::string> meter_rows(const Meter& m, int epoch, const TrainConfig& cfg) {
  std::vector<std::string> rows;
  for (const auto& [k, sn] : m.acc)
    rows.push_back(eval::metrics_row(epoch, cfg.mode, k, sn.first / sn.second, cfg.seed));
  return rows;
}

// Frozen text features for one record, computed once per batch on an
// inference tape.
struct EncodedValues {
  Tensor e, ebar, e_common, ebar_common;
  std::vector<uint8_t> mask;
};

EncodedValues encode_values(Models& m, const data::CaptionRecord& rec) {
  nn::Tape t(false);
  auto enc = m.encoder->encode(t, rec.tokens, *m.provider);
  EncodedValues out;
  out.e = t.value(enc.e);
  out.ebar = t.value(enc.ebar);
  out.e_common = t.value(m.damsm_txt->project_words(t, enc.e));
  out.ebar_common = t.value(m.damsm_txt->project_sentence(t, enc.ebar));
  out.mask = enc.mask;
  return out;
}

std::vector<nn::Parameter*> params_with_prefixes(nn::ParamStore& store,
                                                 const std::vector<std::string>& prefixes) {
  std::vector<nn::Parameter*> out;
  for (const auto& p : prefixes) {
    auto sub = store.with_prefix(p);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

Checkpoint snapshot_prefixes(nn::ParamStore& store, const std::vector<std::string>& prefixes,
                             uint64_t digest, uint64_t seed, int epoch,
                             std::vector<std::string> history) {
  Checkpoint c;
  c.config_digest = digest;
  c.seed = seed;
  c.epoch = epoch;
  c.loss_history = std::move(history);
  for (nn::Parameter* p : params_with_prefixes(store, prefixes))
    c.params.emplace_back(p->name, p->value);
  std::sort(c.params.begin(), c.params.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// DAMSM pretraining
// ---------------------------------------------------------------------------

PhaseResult pretrain_damsm(const TrainConfig& cfg, const data::Dataset& ds, Models& m,
                           const std::string& run_dir) {
  const damsm::Hyper hyper = hyper_of(cfg);
  nn::Adam opt(params_with_prefixes(m.store, {"text.", "damsm."}), cfg.damsm_lr, cfg.beta1,
               cfg.beta2);
  Rng run = Rng(cfg.seed).fork(0xDA);
  NanGuard guard{run_dir, "pretrain-damsm"};

  PhaseResult result;
  for (int epoch = 0; epoch < cfg.damsm_epochs; ++epoch) {
    guard.epoch = epoch;
    Rng erng = run.fork(static_cast<uint64_t>(epoch) + 11);
    auto batches = make_batches(ds.records.size(), cfg.batch_size, erng);
    Meter meter;
    int batch_no = 0;
    for (const auto& batch : batches) {
      guard.batch = batch_no++;
      guard.record_ids.clear();
      nn::Tape t;
      std::vector<damsm::TextFeatures> texts;
      std::vector<damsm::ImageFeatures> images;
      for (size_t idx : batch) {
        const auto& rec = ds.records[idx];
        guard.record_ids.push_back(rec.image_id);
        auto enc = m.encoder->encode(t, rec.tokens, *m.provider);
        texts.push_back({m.damsm_txt->project_words(t, enc.e),
                         m.damsm_txt->project_sentence(t, enc.ebar), enc.mask});
        const auto& img = ds.images[static_cast<size_t>(rec.image_index)];
        auto regions = m.damsm_img->encode(t, t.constant(img.pyramid.back()));
        images.push_back({regions.v, regions.vbar});
      }
      auto losses = damsm::damsm_loss(t, images, texts, hyper);
      const double total = t.value(losses.total)[0];
      guard.check("L_DAMSM", total);
      meter.add("damsm_total", total);
      meter.add("damsm_l1w", t.value(losses.l1w)[0]);
      meter.add("damsm_l2w", t.value(losses.l2w)[0]);
      meter.add("damsm_l1s", t.value(losses.l1s)[0]);
      meter.add("damsm_l2s", t.value(losses.l2s)[0]);
      m.store.zero_grads();
      t.backward(losses.total);
      opt.step();
    }
    result.epoch_losses.push_back(meter.mean("damsm_total"));
    auto rows = meter_rows(meter, epoch, cfg);
    result.metrics_rows.insert(result.metrics_rows.end(), rows.begin(), rows.end());
    if (!run_dir.empty())
      eval::append_metrics_rows((fs::path(run_dir) / "metrics.csv").string(), rows);
  }

  if (!run_dir.empty()) {
    result.checkpoint_path = (fs::path(run_dir) / "damsm.ckpt").string();
    save_checkpoint(result.checkpoint_path,
                    snapshot_prefixes(m.store, {"text.", "damsm."}, cfg.digest(), cfg.seed,
                                      cfg.damsm_epochs, result.metrics_rows));
  }
  return result;
}

// ---------------------------------------------------------------------------
// STREAM pretraining
// ---------------------------------------------------------------------------

namespace {

nn::Var stream_visual(Models& m, nn::Tape& t, nn::Var final_image) {
  if (m.stream_mod->config().external_dim > 0) {
    auto regions = m.damsm_img->encode(t, final_image);
    return m.stream_mod->encode_external(t, regions.vbar);
  }
  return m.stream_mod->encode_for_caption(t, final_image);
}

std::vector<int> teacher_of(const data::CaptionRecord& rec) {
  std::vector<int> teacher = {data::Vocabulary::kBos};
  teacher.insert(teacher.end(), rec.tokens.begin(), rec.tokens.end());
  return teacher;
}

std::vector<int> targets_of(const data::CaptionRecord& rec) {
  std::vector<int> targets = rec.tokens;
  targets.push_back(data::Vocabulary::kEos);
  return targets;
}

}  // namespace

PhaseResult pretrain_stream(const TrainConfig& cfg, const data::Dataset& ds, Models& m,
                            const std::string& run_dir) {
  if (!m.stream_mod) throw std::runtime_error("pretrain_stream: stream module absent (baseline mode)");
  nn::Adam opt(params_with_prefixes(m.store, {"stream."}), cfg.stream_lr, cfg.beta1, cfg.beta2);
  Rng run = Rng(cfg.seed).fork(0x57);
  NanGuard guard{run_dir, "pretrain-stream"};

  PhaseResult result;
  for (int epoch = 0; epoch < cfg.stream_epochs; ++epoch) {
    guard.epoch = epoch;
    Rng erng = run.fork(static_cast<uint64_t>(epoch) + 23);
    auto batches = make_batches(ds.records.size(), cfg.batch_size, erng);
    Meter meter;
    int batch_no = 0;
    for (const auto& batch : batches) {
      guard.batch = batch_no++;
      guard.record_ids.clear();
      nn::Tape t;
      std::vector<std::vector<nn::Var>> steps;
      std::vector<std::vector<int>> targets;
      std::vector<std::vector<uint8_t>> masks;
      long correct = 0, total_tok = 0;
      for (size_t idx : batch) {
        const auto& rec = ds.records[idx];
        guard.record_ids.push_back(rec.image_id);
        const auto& img = ds.images[static_cast<size_t>(rec.image_index)];
        nn::Var visual = stream_visual(m, t, t.constant(img.pyramid.back()));
        auto st = m.stream_mod->decode_caption(t, visual, teacher_of(rec));
        auto tg = targets_of(rec);
        for (size_t s = 0; s < st.size(); ++s) {
          const Tensor& p = t.value(st[s]);
          int best = 0;
          for (int i = 1; i < p.dim(0); ++i)
            if (p[i] > p[best]) best = i;
          if (best == tg[s]) ++correct;
          ++total_tok;
        }
        steps.push_back(std::move(st));
        targets.push_back(std::move(tg));
        masks.emplace_back(targets.back().size(), 1);
      }
      nn::Var ce = stream::cross_entropy_loss(t, steps, targets, masks);
      const double ce_v = t.value(ce)[0];
      guard.check("L_CE", ce_v);
      meter.add("stream_ce", ce_v);
      meter.add("stream_token_acc", static_cast<double>(correct) / static_cast<double>(total_tok));
      m.store.zero_grads();
      t.backward(ce);
      opt.step();
    }
    result.epoch_losses.push_back(meter.mean("stream_ce"));
    auto rows = meter_rows(meter, epoch, cfg);
    result.metrics_rows.insert(result.metrics_rows.end(), rows.begin(), rows.end());
    if (!run_dir.empty())
      eval::append_metrics_rows((fs::path(run_dir) / "metrics.csv").string(), rows);
  }

  if (!run_dir.empty()) {
    result.checkpoint_path = (fs::path(run_dir) / "stream.ckpt").string();
    save_checkpoint(result.checkpoint_path,
                    snapshot_prefixes(m.store, {"stream."}, cfg.digest(), cfg.seed,
                                      cfg.stream_epochs, result.metrics_rows));
  }
  return result;
}

// ---------------------------------------------------------------------------
// adversarial training
// ---------------------------------------------------------------------------

GanResult train_gan(const TrainConfig& cfg, const data::Dataset& ds, Models& m,
                    const std::string& run_dir) {
  const damsm::Hyper hyper = hyper_of(cfg);
  const int stages = static_cast<int>(cfg.resolutions.size());

  nn::Adam opt_g(params_with_prefixes(m.store, {"gen.", "ca."}), cfg.lr, cfg.beta1, cfg.beta2);
  std::vector<std::unique_ptr<nn::Adam>> opt_d;
  for (int i = 0; i < stages; ++i)
    opt_d.push_back(std::make_unique<nn::Adam>(
        m.store.with_prefix("disc" + std::to_string(i) + "."), cfg.lr, cfg.beta1, cfg.beta2));
  std::unique_ptr<nn::Adam> opt_stream_ft;
  if (m.cycle_mode && cfg.stream_finetune)
    opt_stream_ft = std::make_unique<nn::Adam>(params_with_prefixes(m.store, {"stream."}),
                                               cfg.stream_finetune_lr, cfg.beta1, cfg.beta2);

  Rng run = Rng(cfg.seed).fork(0x6A);
  NanGuard guard{run_dir, "train"};
  GanResult result;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    guard.epoch = epoch;
    Rng erng = run.fork(static_cast<uint64_t>(epoch) * 1000003 + 7);
    auto batches = make_batches(ds.records.size(), cfg.batch_size, erng);
    Meter meter;
    int batch_no = 0;
    for (const auto& batch : batches) {
      guard.batch = batch_no;
      guard.record_ids.clear();
      Rng brng = run.fork(static_cast<uint64_t>(epoch) * 1000003 + 7777 + static_cast<uint64_t>(batch_no));
      ++batch_no;

      // frozen text features
      std::vector<EncodedValues> enc;
      enc.reserve(batch.size());
      for (size_t idx : batch) {
        guard.record_ids.push_back(ds.records[idx].image_id);
        enc.push_back(encode_values(m, ds.records[idx]));
      }

      // generator forward (kept on one tape for the later G step)
      nn::Tape tg;
      std::vector<std::vector<nn::Var>> fake_vars(static_cast<size_t>(stages));
      std::vector<std::vector<Tensor>> fake_vals(static_cast<size_t>(stages));
      std::vector<nn::Var> kls;
      for (size_t b = 0; b < batch.size(); ++b) {
        const Tensor eps = gaussian_tensor({cfg.d_cond}, brng);
        const Tensor z = gaussian_tensor({cfg.d_z}, brng);
        auto ca = m.ca->sample(tg, tg.constant(enc[b].ebar), eps);
        kls.push_back(text::ca_kl_loss(tg, ca.mu, ca.sigma));
        auto out = m.gen->generate(tg, tg.constant(enc[b].e), enc[b].mask, ca.c, tg.constant(z));
        for (int s = 0; s < stages; ++s) {
          fake_vars[static_cast<size_t>(s)].push_back(out.images[static_cast<size_t>(s)]);
          fake_vals[static_cast<size_t>(s)].push_back(tg.value(out.images[static_cast<size_t>(s)]));
        }
      }

      // discriminator updates on detached fakes
      for (int s = 0; s < stages; ++s) {
        nn::Tape td;
        std::vector<gan::StageDiscriminator::Output> reals, fakes;
        for (size_t b = 0; b < batch.size(); ++b) {
          const auto& rec = ds.records[batch[b]];
          const auto& img = ds.images[static_cast<size_t>(rec.image_index)];
          nn::Var ebar = td.constant(enc[b].ebar);
          reals.push_back(m.discs[static_cast<size_t>(s)]->discriminate(
              td, td.constant(img.pyramid[static_cast<size_t>(s)]), ebar));
          fakes.push_back(m.discs[static_cast<size_t>(s)]->discriminate(
              td, td.constant(fake_vals[static_cast<size_t>(s)][b]), ebar));
        }
        nn::Var l_d = gan::discriminator_loss_stage(td, reals, fakes);
        const double v = td.value(l_d)[0];
        guard.check("L_D" + std::to_string(s), v);
        meter.add("L_D" + std::to_string(s), v);
        m.store.zero_grads();
        td.backward(l_d);
        opt_d[static_cast<size_t>(s)]->step();
      }

      // generator objective against the updated discriminators
      nn::Var l_g = tg.constant(Tensor::scalar(0.0));
      for (int s = 0; s < stages; ++s) {
        std::vector<gan::StageDiscriminator::Output> fakes;
        for (size_t b = 0; b < batch.size(); ++b)
          fakes.push_back(m.discs[static_cast<size_t>(s)]->discriminate(
              tg, fake_vars[static_cast<size_t>(s)][b], tg.constant(enc[b].ebar)));
        nn::Var l_gi = gan::generator_adv_loss_stage(tg, fakes);
        meter.add("L_G" + std::to_string(s), tg.value(l_gi)[0]);
        l_g = tg.add(l_g, l_gi);
      }
      guard.check("L_G", tg.value(l_g)[0]);
      meter.add("L_G", tg.value(l_g)[0]);

      std::vector<damsm::TextFeatures> texts;
      std::vector<damsm::ImageFeatures> images;
      std::vector<damsm::ImageEncoder::Regions> fake_regions;
      for (size_t b = 0; b < batch.size(); ++b) {
        auto regions = m.damsm_img->encode(tg, fake_vars[static_cast<size_t>(stages - 1)][b]);
        fake_regions.push_back(regions);
        images.push_back({regions.v, regions.vbar});
        texts.push_back({tg.constant(enc[b].e_common), tg.constant(enc[b].ebar_common),
                         enc[b].mask});
      }
      nn::Var l_damsm = damsm::damsm_loss(tg, images, texts, hyper).total;
      guard.check("L_DAMSM", tg.value(l_damsm)[0]);
      meter.add("L_DAMSM", tg.value(l_damsm)[0]);

      nn::Var total{};
      if (m.cycle_mode) {
        std::vector<std::vector<nn::Var>> steps;
        std::vector<std::vector<int>> targets;
        std::vector<std::vector<uint8_t>> masks;
        for (size_t b = 0; b < batch.size(); ++b) {
          const auto& rec = ds.records[batch[b]];
          nn::Var visual =
              m.stream_mod->config().external_dim > 0
                  ? m.stream_mod->encode_external(tg, fake_regions[b].vbar)
                  : m.stream_mod->encode_for_caption(tg,
                                                     fake_vars[static_cast<size_t>(stages - 1)][b]);
          steps.push_back(m.stream_mod->decode_caption(tg, visual, teacher_of(rec)));
          targets.push_back(targets_of(rec));
          masks.emplace_back(targets.back().size(), 1);
        }
        nn::Var l_ce = stream::cross_entropy_loss(tg, steps, targets, masks);
        guard.check("L_CE", tg.value(l_ce)[0]);
        meter.add("L_CE", tg.value(l_ce)[0]);

        nn::Var kl = kls[0];
        for (size_t b = 1; b < kls.size(); ++b) kl = tg.add(kl, kls[b]);
        kl = tg.scale(kl, 1.0 / static_cast<double>(kls.size()));
        guard.check("L_CA", tg.value(kl)[0]);
        meter.add("L_CA", tg.value(kl)[0]);

        total = damsm::total_objective(tg, l_g, l_damsm, l_ce, cfg.lambda, true);
        total = tg.add(total, tg.scale(kl, cfg.ca_kl_weight));
      } else {
        total = damsm::total_objective(tg, l_g, l_damsm, std::nullopt, cfg.lambda, false);
      }
      guard.check("L_total", tg.value(total)[0]);
      meter.add("L_total", tg.value(total)[0]);

      m.store.zero_grads();
      tg.backward(total);
      opt_g.step();
      if (opt_stream_ft) opt_stream_ft->step();
    }

    auto rows = meter_rows(meter, epoch, cfg);
    result.metrics_rows.insert(result.metrics_rows.end(), rows.begin(), rows.end());
    if (!run_dir.empty())
      eval::append_metrics_rows((fs::path(run_dir) / "metrics.csv").string(), rows);

    const bool cadence_hit = (epoch + 1) % cfg.checkpoint_every == 0;
    if (!run_dir.empty() && (cadence_hit || epoch + 1 == cfg.epochs)) {
      const std::string path =
          (fs::path(run_dir) / ("ckpt_epoch" + std::to_string(epoch + 1) + ".bin")).string();
      save_checkpoint(path, snapshot(m.store, cfg.digest(), cfg.seed, epoch + 1,
                                     result.metrics_rows));
      result.checkpoint_paths.push_back(path);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// generation / evaluation glue
// ---------------------------------------------------------------------------

GenerationResult generate_sample(Models& m, const TrainConfig& cfg, const std::vector<int>& tokens,
                                 Rng& noise_rng, bool regen_caption) {
  nn::Tape t(false);
  auto enc = m.encoder->encode(t, tokens, *m.provider);
  const Tensor eps = gaussian_tensor({cfg.d_cond}, noise_rng);
  const Tensor z = gaussian_tensor({cfg.d_z}, noise_rng);
  auto ca = m.ca->sample(t, enc.ebar, eps);
  auto out = m.gen->generate(t, enc.e, enc.mask, ca.c, t.constant(z));

  GenerationResult res;
  for (auto img : out.images) res.images.push_back(t.value(img));
  for (auto b : out.betas) res.betas.push_back(t.value(b));
  if (regen_caption && m.stream_mod) {
    nn::Var visual = m.stream_mod->config().external_dim > 0
                         ? m.stream_mod->encode_external(
                               t, m.damsm_img->encode(t, out.images.back()).vbar)
                         : m.stream_mod->encode_for_caption(t, out.images.back());
    res.regen_tokens = m.stream_mod->greedy_decode(t.value(visual), cfg.t_max + 2);
  }
  return res;
}

std::vector<std::pair<Tensor, int>> sample_images_for_is(Models& m, const TrainConfig& cfg,
                                                         const data::Dataset& ds, int per_class,
                                                         uint64_t seed) {
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < ds.records.size(); ++i) by_class[ds.records[i].class_id].push_back(i);

  std::vector<std::pair<Tensor, int>> out;
  Rng root(seed);
  for (auto& [cls, indices] : by_class) {
    Rng crng = root.fork(static_cast<uint64_t>(cls) + 101);
    std::vector<size_t> pool = indices;
    crng.shuffle(pool);
    const size_t take = std::min<size_t>(pool.size(), static_cast<size_t>(per_class));
    for (size_t k = 0; k < take; ++k) {
      const auto& rec = ds.records[pool[k]];
      Rng nrng = crng.fork(k + 7);
      auto gen = generate_sample(m, cfg, rec.tokens, nrng, false);
      out.emplace_back(gen.images.back(), cls);
    }
  }
  return out;
}

double evaluate_is(Models& m, const TrainConfig& cfg, const data::Dataset& ds,
                   const eval::EvalClassifier& classifier, uint64_t seed) {
  auto samples = sample_images_for_is(m, cfg, ds, cfg.is_samples_per_class, seed);
  std::vector<std::vector<double>> conditionals;
  conditionals.reserve(samples.size());
  for (const auto& [img, cls] : samples) conditionals.push_back(classifier.predict(img));
  const int splits = std::max(1, cfg.is_splits);
  if (splits == 1) return eval::inception_score(conditionals);
  const size_t chunk = std::max<size_t>(1, conditionals.size() / static_cast<size_t>(splits));
  double mean = 0.0;
  int n = 0;
  for (size_t start = 0; start < conditionals.size(); start += chunk) {
    const size_t end = std::min(conditionals.size(), start + chunk);
    mean += eval::inception_score({conditionals.begin() + static_cast<long>(start),
                                   conditionals.begin() + static_cast<long>(end)});
    ++n;
  }
  return mean / n;
}

eval::EvalClassifier train_eval_classifier(const data::Dataset& ds, uint64_t seed,
                                           int max_epochs) {
  eval::ClassifierConfig cc;
  cc.resolution = ds.max_resolution();
  cc.n_classes = static_cast<int>(ds.class_names.size());
  cc.max_epochs = max_epochs;
  eval::EvalClassifier cls(cc, seed);
  std::vector<const Tensor*> images;
  std::vector<int> labels;
  for (const auto& img : ds.images) {
    images.push_back(&img.pyramid.back());
    labels.push_back(img.class_id);
  }
  cls.train(images, labels);
  return cls;
}

std::vector<std::pair<int, double>> is_curve(const TrainConfig& cfg, const data::Dataset& ds,
                                             const std::vector<std::string>& checkpoint_paths,
                                             const std::string& out_csv,
                                             const std::string& out_png, uint64_t eval_seed) {
  if (checkpoint_paths.size() < 2)
    throw std::runtime_error("is_curve: need at least two checkpoints");
  eval::EvalClassifier classifier = train_eval_classifier(ds, eval_seed);

  std::vector<std::pair<int, double>> points;
  std::vector<std::string> rows;
  for (const auto& path : checkpoint_paths) {
    Checkpoint ckpt = load_checkpoint(path);
    Models m;
    build_models(m, cfg, ds.vocab.size());
    restore_params(ckpt, m.store, cfg.digest());
    const double is = evaluate_is(m, cfg, ds, classifier, eval_seed);
    points.emplace_back(ckpt.epoch, is);
    rows.push_back(eval::metrics_row(ckpt.epoch, cfg.mode, "inception_score", is, eval_seed));
  }
  std::sort(points.begin(), points.end());
  eval::append_metrics_rows(out_csv, rows);
  std::vector<std::pair<double, double>> pts;
  for (auto& [e, v] : points) pts.emplace_back(e, v);
  eval::write_line_plot(out_png, pts, "epoch", "inception score");
  return points;
}

}  // namespace t2i::train
