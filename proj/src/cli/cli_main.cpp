// SPDX-License-Identifier: Apache-2.0
#include "t2i/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "t2i/core/error.hpp"
#include "t2i/data/dataset.hpp"
#include "t2i/eval/metrics.hpp"
#include "t2i/train/trainer.hpp"

namespace fs = std::filesystem;

namespace t2i {

namespace {

std::string run_root() {
  const char* env = std::getenv("T2I_RUN_ROOT");
  return env && *env ? env : "runs";
}

data::AssembleOptions assemble_options(const train::TrainConfig& cfg) {
  data::AssembleOptions opt;
  opt.resolutions = cfg.resolutions;
  opt.crop_min_ratio = cfg.crop_min_ratio;
  opt.t_max = cfg.t_max;
  opt.min_freq = cfg.min_freq;
  return opt;
}

data::Dataset load_dataset_for(const train::TrainConfig& cfg) {
  if (cfg.dataset_dir.empty())
    throw std::runtime_error("dataset_dir is not set (config key dataset_dir or --set)");
  return data::load_dataset(cfg.dataset_dir, assemble_options(cfg));
}

// Grayscale heat tiles per word, first tile the generated image.
void write_attention_grid(const std::string& path, const Tensor& image, const Tensor& beta,
                          int words) {
  const int edge = image.dim(1);
  const int regions = beta.dim(0);
  const int redge = static_cast<int>(std::lround(std::sqrt(static_cast<double>(regions))));
  const int sep = 2;
  data::ImageU8 grid;
  grid.h = edge;
  grid.w = (words + 1) * edge + words * sep;
  grid.rgb.assign(static_cast<size_t>(grid.w) * grid.h * 3, 255);

  data::ImageU8 img = data::tensor_to_image(image);
  for (int y = 0; y < edge; ++y)
    for (int x = 0; x < edge; ++x)
      for (int c = 0; c < 3; ++c) grid.at(y, x, c) = img.at(y, x, c);

  for (int t = 0; t < words; ++t) {
    double mx = 0.0;
    for (int r = 0; r < regions; ++r) mx = std::max(mx, beta.at(r, t));
    if (mx <= 0.0) mx = 1.0;
    const int x0 = (t + 1) * (edge + sep);
    for (int y = 0; y < edge; ++y) {
      for (int x = 0; x < edge; ++x) {
        const int ry = y * redge / edge;
        const int rx = x * redge / edge;
        const double v = beta.at(ry * redge + rx, t) / mx;
        const uint8_t g = static_cast<uint8_t>(std::lround(v * 255.0));
        grid.at(y, x0 + x, 0) = g;
        grid.at(y, x0 + x, 1) = g;
        grid.at(y, x0 + x, 2) = g;
      }
    }
  }
  data::write_png(path, grid);
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;

  train::TrainConfig resolve() const {
    train::TrainConfig cfg;
    if (!config_path.empty()) cfg = train::load_config_file(config_path);
    for (const auto& kv : sets) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

int run(const std::vector<std::string>& args) {
  CLI::App app{"attention-based text-to-image GAN with caption-regeneration cycle"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_path, "key=value config file");
  app.add_option("--set", common.sets, "override a config key (repeatable)")->take_all();

  // make-dataset
  auto* mk = app.add_subcommand("make-dataset", "render the synthetic captioned-shapes dataset");
  std::string mk_out;
  data::SyntheticConfig mk_cfg;
  uint64_t mk_seed = 1;
  mk->add_option("--out", mk_out, "output directory")->required();
  mk->add_option("--classes", mk_cfg.n_classes, "number of classes");
  mk->add_option("--per-class", mk_cfg.n_per_class, "images per class");
  mk->add_option("--captions", mk_cfg.captions_per_image, "captions per image");
  mk->add_option("--render-res", mk_cfg.render_resolution, "render resolution");
  mk->add_option("--seed", mk_seed, "generation seed");

  auto* pd = app.add_subcommand("pretrain-damsm", "pretrain the matching encoders");
  auto* ps = app.add_subcommand("pretrain-stream", "pretrain the caption-regeneration module");

  auto* tr = app.add_subcommand("train", "adversarial training");
  std::string tr_damsm, tr_stream;
  bool tr_force = false;
  tr->add_option("--damsm", tr_damsm, "pretrained matching checkpoint")->required();
  tr->add_option("--stream", tr_stream, "pretrained caption checkpoint (cycle mode)");
  tr->add_flag("--force-digest", tr_force, "accept checkpoints from a different config");

  auto* gen = app.add_subcommand("generate", "generate images for a caption");
  std::string gen_ckpt, gen_caption, gen_out = "generated";
  uint64_t gen_seed = 1;
  gen->add_option("--checkpoint", gen_ckpt)->required();
  gen->add_option("--caption", gen_caption)->required();
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--gen-seed", gen_seed, "noise seed");
  bool gen_force = false;
  gen->add_flag("--force-digest", gen_force);

  auto* ev = app.add_subcommand("evaluate", "compute metrics over checkpoints");
  std::string ev_metric, ev_ckpts, ev_out = "eval", ev_log;
  uint64_t ev_seed = 1;
  int ev_per_class = 0;
  bool ev_force = false;
  ev->add_option("--metric", ev_metric, "is | consistency | mos-report")->required();
  ev->add_option("--checkpoints", ev_ckpts, "comma-separated checkpoint list");
  ev->add_option("--out", ev_out, "output directory");
  ev->add_option("--log", ev_log, "MOS session log (mos-report)");
  ev->add_option("--eval-seed", ev_seed, "evaluation seed");
  ev->add_option("--per-class", ev_per_class, "override samples per class");
  ev->add_flag("--force-digest", ev_force);

  auto* mos = app.add_subcommand("mos", "mean-opinion-score tooling");
  mos->require_subcommand(1);
  auto* mosr = mos->add_subcommand("record", "run an interactive rating session");
  std::string mos_items, mos_rater, mos_log = "mos_sessions.log";
  uint64_t mos_seed = 1;
  mosr->add_option("--items", mos_items, "items CSV: item_id,source_tag,image_path,caption")
      ->required();
  mosr->add_option("--rater", mos_rater, "rater id")->required();
  mosr->add_option("--log", mos_log, "append-only session log");
  mosr->add_option("--mos-seed", mos_seed, "presentation-order seed");
  auto* mosp = mos->add_subcommand("report", "aggregate session logs");
  std::string mosp_log;
  mosp->add_option("--log", mosp_log, "session log")->required();

  std::vector<const char*> argv;
  argv.push_back("t2i");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (mk->parsed()) {
    auto raw = data::generate_synthetic_dataset(mk_cfg, mk_seed);
    data::write_dataset_layout(raw, mk_out);
    std::cout << "wrote " << raw.examples.size() << " images in " << raw.class_names.size()
              << " classes to " << mk_out << "\n";
    return 0;
  }

  train::TrainConfig cfg = common.resolve();
  train::apply_thread_config(cfg);

  if (pd->parsed()) {
    data::Dataset ds = load_dataset_for(cfg);
    train::Models m;
    train::build_models(m, cfg, ds.vocab.size());
    const std::string dir = train::make_run_dir(cfg, run_root());
    auto res = train::pretrain_damsm(cfg, ds, m, dir);
    std::cout << "matching pretrain done; checkpoint: " << res.checkpoint_path << "\n";
    return 0;
  }

  if (ps->parsed()) {
    if (cfg.mode != "cyclegan_bert")
      throw std::runtime_error("pretrain-stream requires mode=cyclegan_bert");
    data::Dataset ds = load_dataset_for(cfg);
    train::Models m;
    train::build_models(m, cfg, ds.vocab.size());
    const std::string dir = train::make_run_dir(cfg, run_root());
    auto res = train::pretrain_stream(cfg, ds, m, dir);
    std::cout << "caption pretrain done; checkpoint: " << res.checkpoint_path << "\n";
    return 0;
  }

  if (tr->parsed()) {
    data::Dataset ds = load_dataset_for(cfg);
    train::Models m;
    train::build_models(m, cfg, ds.vocab.size());
    train::restore_params(train::load_checkpoint(tr_damsm), m.store, cfg.digest(), tr_force);
    if (m.cycle_mode) {
      if (tr_stream.empty())
        throw std::runtime_error("train: cyclegan_bert mode requires --stream");
      train::restore_params(train::load_checkpoint(tr_stream), m.store, cfg.digest(), tr_force);
    }
    const std::string dir = train::make_run_dir(cfg, run_root());
    auto res = train::train_gan(cfg, ds, m, dir);
    std::cout << "training done; " << res.checkpoint_paths.size() << " checkpoints in " << dir
              << "\n";
    return 0;
  }

  if (gen->parsed()) {
    data::Dataset ds = load_dataset_for(cfg);
    train::Models m;
    train::build_models(m, cfg, ds.vocab.size());
    train::restore_params(train::load_checkpoint(gen_ckpt), m.store, cfg.digest(), gen_force);
    auto tk = data::tokenize(gen_caption, ds.vocab, cfg.t_max);
    Rng rng(gen_seed);
    auto res = train::generate_sample(m, cfg, tk.ids, rng, m.cycle_mode);
    fs::create_directories(gen_out);
    for (size_t i = 0; i < res.images.size(); ++i)
      data::write_png((fs::path(gen_out) / ("stage" + std::to_string(i) + ".png")).string(),
                      data::tensor_to_image(res.images[i]));
    for (size_t i = 0; i < res.betas.size(); ++i)
      write_attention_grid(
          (fs::path(gen_out) / ("attn_stage" + std::to_string(i + 1) + ".png")).string(),
          res.images[i + 1], res.betas[i], static_cast<int>(tk.ids.size()));
    if (m.cycle_mode) {
      const std::string caption = data::detokenize(res.regen_tokens, ds.vocab);
      std::ofstream(fs::path(gen_out) / "regenerated_caption.txt") << caption << "\n";
      std::cout << "regenerated caption: " << caption << "\n";
    }
    std::cout << "wrote " << res.images.size() << " stage images to " << gen_out << "\n";
    return 0;
  }

  if (ev->parsed()) {
    if (ev_metric == "mos-report") {
      if (ev_log.empty()) throw std::runtime_error("evaluate --metric mos-report needs --log");
      auto stats = eval::mos_report(ev_log);
      for (const auto& [tag, s] : stats)
        std::cout << tag << ": mean " << s.mean << " stddev " << s.stddev << " n " << s.n << "\n";
      return 0;
    }
    data::Dataset ds = load_dataset_for(cfg);
    if (ev_per_class > 0) cfg.is_samples_per_class = ev_per_class;
    std::vector<std::string> ckpts;
    {
      std::stringstream ss(ev_ckpts);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) ckpts.push_back(item);
    }
    if (ckpts.empty()) throw std::runtime_error("evaluate: --checkpoints required");
    fs::create_directories(ev_out);

    if (ev_metric == "is") {
      if (ckpts.size() >= 2) {
        auto pts = train::is_curve(cfg, ds, ckpts, (fs::path(ev_out) / "is_curve.csv").string(),
                                   (fs::path(ev_out) / "is_curve.png").string(), ev_seed);
        for (auto& [epoch, is] : pts) std::cout << "epoch " << epoch << ": IS " << is << "\n";
      } else {
        auto classifier = train::train_eval_classifier(ds, ev_seed);
        train::Models m;
        train::build_models(m, cfg, ds.vocab.size());
        train::restore_params(train::load_checkpoint(ckpts[0]), m.store, cfg.digest(), ev_force);
        const double is = train::evaluate_is(m, cfg, ds, classifier, ev_seed);
        eval::append_metrics_rows(
            (fs::path(ev_out) / "is.csv").string(),
            {eval::metrics_row(train::load_checkpoint(ckpts[0]).epoch, cfg.mode,
                               "inception_score", is, ev_seed)});
        std::cout << "IS " << is << "\n";
      }
      return 0;
    }

    if (ev_metric == "consistency") {
      train::Models m;
      train::build_models(m, cfg, ds.vocab.size());
      train::restore_params(train::load_checkpoint(ckpts[0]), m.store, cfg.digest(), ev_force);
      std::map<std::string, std::pair<long, long>> per_attr;  // hits / total
      Rng rng(ev_seed);
      long n = 0;
      double acc_sum = 0.0;
      for (size_t i = 0; i < ds.records.size(); i += std::max<size_t>(1, ds.records.size() / 64)) {
        const auto& rec = ds.records[i];
        if (!rec.attributes.count("color")) continue;
        Rng nrng = rng.fork(i);
        auto gen = train::generate_sample(m, cfg, rec.tokens, nrng, false);
        auto res = eval::caption_consistency(data::tensor_to_image(gen.images.back()),
                                             rec.attributes);
        for (const auto& [k, hit] : res.matches) {
          per_attr[k].second++;
          if (hit) per_attr[k].first++;
        }
        acc_sum += res.accuracy;
        ++n;
      }
      if (n == 0) throw std::runtime_error("consistency: dataset has no attribute annotations");
      std::vector<std::string> rows;
      for (const auto& [k, ht] : per_attr) {
        const double frac = static_cast<double>(ht.first) / static_cast<double>(ht.second);
        rows.push_back(eval::metrics_row(0, cfg.mode, "consistency_" + k, frac, ev_seed));
        std::cout << k << ": " << frac << "\n";
      }
      rows.push_back(eval::metrics_row(0, cfg.mode, "consistency_overall", acc_sum / n, ev_seed));
      std::cout << "overall: " << acc_sum / n << "\n";
      eval::append_metrics_rows((fs::path(ev_out) / "consistency.csv").string(), rows);
      return 0;
    }
    throw std::runtime_error("evaluate: unknown metric '" + ev_metric + "'");
  }

  if (mosr->parsed()) {
    auto items = eval::load_mos_items(mos_items);
    eval::run_mos_session(std::cin, std::cout, items, mos_rater, mos_seed, mos_log);
    return 0;
  }
  if (mosp->parsed()) {
    auto stats = eval::mos_report(mosp_log);
    for (const auto& [tag, s] : stats)
      std::cout << tag << ": mean " << s.mean << " stddev " << s.stddev << " n " << s.n << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  try {
    return run(args);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace t2i
