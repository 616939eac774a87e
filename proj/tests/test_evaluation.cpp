// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "t2i/core/rng.hpp"
#include "t2i/data/dataset.hpp"
#include "t2i/eval/classifier.hpp"
#include "t2i/eval/metrics.hpp"

using namespace t2i;
using namespace t2i::eval;
namespace fs = std::filesystem;

TEST_CASE("kl divergence") {
  CHECK(kl_divergence({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(kl_divergence({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // extended-precision oracle for the (0.9, 0.1) || (0.5, 0.5) case
  const long double want = 0.9L * std::log(0.9L / 0.5L) + 0.1L * std::log(0.1L / 0.5L);
  const double got = kl_divergence({0.9, 0.1}, {0.5, 0.5});
  CHECK(got == doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
  CHECK(std::abs(got - 0.3681) < 1e-4);

  CHECK_THROWS(kl_divergence({0.5, 0.5}, {1.0, 0.0}));

  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(4), q(4);
    double zp = 0, zq = 0;
    for (int i = 0; i < 4; ++i) {
      p[i] = rng.uniform(0.01, 1.0);
      q[i] = rng.uniform(0.01, 1.0);
      zp += p[i];
      zq += q[i];
    }
    for (int i = 0; i < 4; ++i) {
      p[i] /= zp;
      q[i] /= zq;
    }
    CHECK(kl_divergence(p, q) >= -1e-12);
  }
}

TEST_CASE("inception score analytics") {
  SUBCASE("identical conditionals give exactly one") {
    std::vector<std::vector<double>> conds(5, {0.2, 0.3, 0.5});
    CHECK(inception_score(conds) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("one-hot coverage of K classes gives K") {
    for (int k = 2; k <= 10; ++k) {
      std::vector<std::vector<double>> conds;
      for (int i = 0; i < k; ++i) {
        std::vector<double> c(static_cast<size_t>(k), 0.0);
        c[static_cast<size_t>(i)] = 1.0;
        conds.push_back(c);
      }
      CHECK(std::abs(inception_score(conds) - k) < 1e-9);
    }
  }
  SUBCASE("two-sample case matches the closed form") {
    const double is = inception_score({{0.9, 0.1}, {0.1, 0.9}});
    const long double kl = 0.9L * std::log(1.8L) + 0.1L * std::log(0.2L);
    CHECK(is == doctest::Approx(static_cast<double>(std::exp(kl))).epsilon(1e-12));
    CHECK(std::abs(is - std::exp(0.3681)) < 1e-3);
  }
  SUBCASE("empty input raises") {
    CHECK_THROWS(inception_score({}));
  }
  SUBCASE("always within [1, K]") {
    Rng rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
      const int k = rng.uniform_int(2, 6);
      const int n = rng.uniform_int(1, 12);
      std::vector<std::vector<double>> conds;
      for (int i = 0; i < n; ++i) {
        std::vector<double> c(static_cast<size_t>(k));
        double z = 0;
        for (auto& v : c) {
          v = rng.uniform(1e-4, 1.0);
          z += v;
        }
        for (auto& v : c) v /= z;
        conds.push_back(c);
      }
      const double is = inception_score(conds);
      CHECK(is >= 1.0 - 1e-9);
      CHECK(is <= k + 1e-9);
    }
  }
}

TEST_CASE("mos session flow") {
  const fs::path log = fs::temp_directory_path() / "t2i_mos_test.log";
  fs::remove(log);
  std::vector<MosItem> items = {{"i1", "ground_truth", "a.png", "a bird"},
                                {"i2", "model_A", "b.png", "a bird"},
                                {"i3", "model_B", "c.png", "a bird"}};

  SUBCASE("invalid ratings re-prompt; ratings land in the log") {
    std::istringstream in("9\nfoo\n4\n5\n3\n");
    std::ostringstream out;
    run_mos_session(in, out, items, "r1", 7, log.string());
    CHECK(out.str().find("please enter an integer") != std::string::npos);
    auto stats = mos_report(log.string());
    int n = 0;
    for (auto& [tag, s] : stats) n += s.n;
    CHECK(n == 3);
  }

  SUBCASE("interrupted sessions resume where they left off") {
    std::istringstream in1("4\n");  // rate one item, then EOF
    std::ostringstream out1;
    run_mos_session(in1, out1, items, "r1", 7, log.string());
    std::istringstream in2("5\n2\n");
    std::ostringstream out2;
    run_mos_session(in2, out2, items, "r1", 7, log.string());
    auto stats = mos_report(log.string());
    int n = 0;
    for (auto& [tag, s] : stats) n += s.n;
    CHECK(n == 3);
    // a third run has nothing left to ask
    std::istringstream in3("");
    std::ostringstream out3;
    run_mos_session(in3, out3, items, "r1", 7, log.string());
    CHECK(out3.str().find("0 new ratings") != std::string::npos);
  }
  fs::remove(log);
}

TEST_CASE("mos report aggregation") {
  const fs::path log = fs::temp_directory_path() / "t2i_mos_report.log";
  {
    std::ofstream f(log);
    f << "r1,i1,ground_truth,4,100\n";
    f << "r1,i2,ground_truth,5,101\n";
    f << "r2,i1,ground_truth,4,102\n";
    f << "r2,i3,model_A,3,103\n";
    f << "r1,i3,model_A,3,104\n";
  }
  auto stats = mos_report(log.string());
  CHECK(stats.at("ground_truth").mean == doctest::Approx(13.0 / 3));
  CHECK(stats.at("ground_truth").n == 3);
  CHECK(stats.at("model_A").mean == doctest::Approx(3.0));
  CHECK(stats.at("model_A").stddev == doctest::Approx(0.0));

  // invariant under line order
  const fs::path log2 = fs::temp_directory_path() / "t2i_mos_report2.log";
  {
    std::ofstream f(log2);
    f << "r1,i3,model_A,3,104\n";
    f << "r2,i1,ground_truth,4,102\n";
    f << "r1,i2,ground_truth,5,101\n";
    f << "r2,i3,model_A,3,103\n";
    f << "r1,i1,ground_truth,4,100\n";
  }
  auto stats2 = mos_report(log2.string());
  CHECK(stats2.at("ground_truth").mean == doctest::Approx(stats.at("ground_truth").mean));
  CHECK(stats2.at("model_A").mean == doctest::Approx(stats.at("model_A").mean));

  const fs::path empty = fs::temp_directory_path() / "t2i_mos_empty.log";
  std::ofstream(empty).close();
  CHECK_THROWS(mos_report(empty.string()));
  fs::remove(log);
  fs::remove(log2);
  fs::remove(empty);
}

TEST_CASE("consistency probe on ground-truth renders") {
  data::SyntheticConfig cfg;
  cfg.n_classes = 6;
  cfg.n_per_class = 4;
  auto raw = data::generate_synthetic_dataset(cfg, 5);
  long hits = 0, total = 0;
  for (const auto& ex : raw.examples) {
    auto res = caption_consistency(ex.render, ex.attributes);
    for (const auto& [k, v] : res.matches) {
      ++total;
      if (v) ++hits;
    }
  }
  // ground truth should probe essentially perfectly
  CHECK(static_cast<double>(hits) / static_cast<double>(total) > 0.95);

  CHECK_THROWS(caption_consistency(raw.examples[0].render, {{"color", "red"}}));
}

TEST_CASE("eval classifier separates the synthetic classes") {
  data::SyntheticConfig cfg;
  cfg.n_classes = 2;
  cfg.n_per_class = 24;
  cfg.resolutions = {16};
  cfg.render_resolution = 32;
  auto raw = data::generate_synthetic_dataset(cfg, 9);
  data::AssembleOptions opt;
  opt.resolutions = {16};
  auto ds = data::assemble_dataset(raw, opt);

  ClassifierConfig cc;
  cc.resolution = 16;
  cc.n_classes = 2;
  cc.base_channels = 6;
  cc.max_epochs = 40;
  EvalClassifier cls(cc, 3);
  std::vector<const Tensor*> images;
  std::vector<int> labels;
  for (const auto& img : ds.images) {
    images.push_back(&img.pyramid.back());
    labels.push_back(img.class_id);
  }
  cls.train(images, labels);
  CHECK(cls.val_accuracy() >= 0.95);

  // deterministic trajectory under the same seed
  EvalClassifier cls2(cc, 3);
  cls2.train(images, labels);
  CHECK(cls.val_history() == cls2.val_history());

  auto probs = cls.predict(*images[0]);
  double z = 0;
  for (double p : probs) {
    CHECK(p >= 0.0);
    z += p;
  }
  CHECK(z == doctest::Approx(1.0).epsilon(1e-9));

  ClassifierConfig bad = cc;
  bad.n_classes = 1;
  CHECK_THROWS(EvalClassifier(bad, 3));
}

TEST_CASE("line plot and metrics csv") {
  const fs::path png = fs::temp_directory_path() / "t2i_plot_test.png";
  write_line_plot(png.string(), {{0, 1.0}, {25, 1.4}, {50, 1.7}, {100, 1.8}}, "epoch", "is");
  auto img = data::read_image(png.string());
  CHECK(img.w == 480);
  CHECK(img.h == 320);
  fs::remove(png);

  const fs::path csv = fs::temp_directory_path() / "t2i_metrics_test.csv";
  fs::remove(csv);
  append_metrics_rows(csv.string(), {metrics_row(3, "cyclegan_bert", "L_G", 0.5, 42)});
  append_metrics_rows(csv.string(), {metrics_row(4, "cyclegan_bert", "L_G", 0.25, 42)});
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,model,metric,value,seed");
  std::getline(in, line);
  CHECK(line == "3,cyclegan_bert,L_G,0.5,42");
  std::getline(in, line);
  CHECK(line == "4,cyclegan_bert,L_G,0.25,42");
  fs::remove(csv);
}
