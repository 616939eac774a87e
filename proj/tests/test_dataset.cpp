// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "t2i/data/dataset.hpp"

using namespace t2i;
using namespace t2i::data;
namespace fs = std::filesystem;

TEST_CASE("vocabulary from a tiny corpus") {
  Vocabulary v = build_vocabulary({"a red bird", "a red bird"}, 1);
  CHECK(v.size() == 7);  // 4 reserved + a, bird, red
  CHECK(v.contains("a"));
  CHECK(v.contains("red"));
  CHECK(v.contains("bird"));
  // all frequency 2: lexicographic order
  CHECK(v.token_to_id.at("a") == 4);
  CHECK(v.token_to_id.at("bird") == 5);
  CHECK(v.token_to_id.at("red") == 6);
}

TEST_CASE("frequency threshold maps rare tokens to unk") {
  Vocabulary v = build_vocabulary({"x y", "x z"}, 2);
  CHECK(v.size() == 5);  // reserved + x
  CHECK(v.contains("x"));
  CHECK(!v.contains("y"));
  CHECK(v.id_or_unk("y") == Vocabulary::kUnk);
  CHECK(v.id_or_unk("z") == Vocabulary::kUnk);
  CHECK_THROWS(build_vocabulary({}, 1));
}

TEST_CASE("synthetic corpus vocabulary equals an independent frequency count") {
  SyntheticConfig cfg;
  cfg.n_classes = 8;
  cfg.n_per_class = 16;  // 128 images x 4 captions = 512 captions
  auto raw = generate_synthetic_dataset(cfg, 7);
  std::vector<std::string> corpus;
  for (const auto& ex : raw.examples)
    for (const auto& c : ex.captions) corpus.push_back(c);
  CHECK(corpus.size() == 512);

  // independent counter: lowercase alnum split, threshold
  std::map<std::string, long> freq;
  for (const auto& line : corpus) {
    std::string cur;
    for (char ch : line) {
      if (std::isalnum(static_cast<unsigned char>(ch)))
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      else if (!cur.empty()) {
        ++freq[cur];
        cur.clear();
      }
    }
    if (!cur.empty()) ++freq[cur];
  }
  long kept = 0;
  for (auto& [tok, n] : freq)
    if (n >= 1) ++kept;
  Vocabulary v = build_vocabulary(corpus, 1);
  CHECK(v.size() == kept + 4);
}

TEST_CASE("tokenize basics") {
  Vocabulary v = build_vocabulary({"a red bird"}, 1);
  auto r = tokenize("A red bird.", v, 16);
  CHECK(r.ids == std::vector<int>{v.token_to_id.at("a"), v.token_to_id.at("red"),
                                  v.token_to_id.at("bird")});
  CHECK(r.mask == std::vector<uint8_t>{1, 1, 1});

  std::string longtext;
  for (int i = 0; i < 21; ++i) longtext += "a red bird ";
  auto tr = tokenize(longtext, v, 16);
  CHECK(tr.ids.size() == 16);

  CHECK_THROWS(tokenize("...!!!", v, 16));

  // idempotence on the detokenized output for in-vocab text
  auto first = tokenize("a  Red bird!", v, 16);
  const std::string round = detokenize(first.ids, v);
  auto second = tokenize(round, v, 16);
  CHECK(first.ids == second.ids);
}

TEST_CASE("crop ratio contract") {
  ImageU8 img;
  img.w = 100;
  img.h = 100;
  img.rgb.assign(100 * 100 * 3, 7);

  SUBCASE("bbox covering the whole image is returned unchanged") {
    auto r = crop_to_bbox_ratio(img, {0, 0, 100, 100}, 0.75);
    CHECK(r.image.w == 100);
    CHECK(!r.clamped);
    CHECK(r.crop.w == 100);
  }

  SUBCASE("centered 30x30 bbox at the default 0.75 ratio") {
    auto r = crop_to_bbox_ratio(img, {35, 35, 30, 30}, 0.75);
    // edge <= ceil(30/sqrt(0.75)) = 35 and the ratio must hold
    CHECK(r.image.w <= 35);
    CHECK(static_cast<double>(30 * 30) / (r.image.w * r.image.h) >= 0.75);
    CHECK(!r.clamped);
    // exhaustive: no larger square crop satisfies the ratio
    for (int edge = r.image.w + 1; edge <= 100; ++edge)
      CHECK(static_cast<double>(30 * 30) / (static_cast<double>(edge) * edge) < 0.75);
  }

  SUBCASE("degenerate bbox raises") {
    CHECK_THROWS(crop_to_bbox_ratio(img, {10, 10, 0, 5}, 0.75));
  }

  SUBCASE("random bboxes: ratio holds or the crop is flagged clamped") {
    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
      Rect b;
      b.w = rng.uniform_int(1, 99);
      b.h = rng.uniform_int(1, 99);
      b.x = rng.uniform_int(0, 100 - b.w);
      b.y = rng.uniform_int(0, 100 - b.h);
      auto r = crop_to_bbox_ratio(img, b, 0.75);
      const double ratio = static_cast<double>(b.area()) / (static_cast<double>(r.image.w) * r.image.h);
      if (!r.clamped) CHECK(ratio >= 0.75);
    }
  }
}

TEST_CASE("pyramid construction") {
  SUBCASE("constant image stays constant at every level") {
    Tensor img = Tensor::full({3, 64, 64}, 0.25);
    auto pyr = make_pyramid(img, 16, 3);
    REQUIRE(pyr.size() == 3);
    for (const auto& level : pyr)
      for (int64_t i = 0; i < level.size(); ++i) CHECK(level[i] == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("paper-scale resolutions 64/128/256") {
    Tensor img = Tensor::zeros({3, 256, 256});
    auto pyr = make_pyramid(img, 64, 3);
    CHECK(pyr[0].dim(1) == 64);
    CHECK(pyr[1].dim(1) == 128);
    CHECK(pyr[2].dim(1) == 256);
  }

  SUBCASE("checkerboard 4x4 halves to exact cell means") {
    Tensor img = Tensor::zeros({1, 4, 4});
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) img.at(0, y, x) = (x + y) % 2 == 0 ? 1.0 : -1.0;
    auto half = area_resize(img, 2, 2);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) CHECK(half.at(0, y, x) == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("area averaging conserves the mean across levels") {
    Rng rng(5);
    Tensor img({3, 64, 64});
    for (int64_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(-1.0, 1.0);
    auto pyr = make_pyramid(img, 16, 3);
    for (size_t k = 0; k + 1 < pyr.size(); ++k) {
      double m0 = 0, m1 = 0;
      for (int64_t i = 0; i < pyr[k].size(); ++i) m0 += pyr[k][i];
      for (int64_t i = 0; i < pyr[k + 1].size(); ++i) m1 += pyr[k + 1][i];
      CHECK(m0 / pyr[k].size() == doctest::Approx(m1 / pyr[k + 1].size()).epsilon(1e-6));
    }
  }

  SUBCASE("image smaller than the largest level raises") {
    Tensor img = Tensor::zeros({3, 32, 32});
    CHECK_THROWS(make_pyramid(img, 16, 3));
  }
}

TEST_CASE("class-disjoint split") {
  auto records_for = [](int classes) {
    std::vector<CaptionRecord> recs;
    for (int c = 0; c < classes; ++c) {
      CaptionRecord r;
      r.class_id = c;
      r.tokens = {5};
      recs.push_back(r);
    }
    return recs;
  };

  SUBCASE("two classes at 0.5 puts one on each side") {
    auto m = split_class_disjoint(records_for(2), 0.5, 1);
    CHECK(m.train_classes.size() == 1);
    CHECK(m.test_classes.size() == 1);
  }

  SUBCASE("same seed is reproducible") {
    auto a = split_class_disjoint(records_for(20), 0.7, 42);
    auto b = split_class_disjoint(records_for(20), 0.7, 42);
    CHECK(a.train_classes == b.train_classes);
    CHECK(a.test_classes == b.test_classes);
  }

  SUBCASE("200 classes at 0.8 gives 160/40 with empty intersection") {
    auto m = split_class_disjoint(records_for(200), 0.8, 9);
    CHECK(m.train_classes.size() == 160);
    CHECK(m.test_classes.size() == 40);
    std::set<int> inter;
    std::set_intersection(m.train_classes.begin(), m.train_classes.end(),
                          m.test_classes.begin(), m.test_classes.end(),
                          std::inserter(inter, inter.begin()));
    CHECK(inter.empty());
  }

  SUBCASE("single class raises") { CHECK_THROWS(split_class_disjoint(records_for(1), 0.5, 1)); }
}

TEST_CASE("synthetic dataset generation") {
  SyntheticConfig cfg;
  cfg.n_classes = 4;
  cfg.n_per_class = 6;
  auto raw = generate_synthetic_dataset(cfg, 11);
  REQUIRE(raw.examples.size() == 24);

  SUBCASE("captions carry the class color and shape") {
    for (const auto& ex : raw.examples) {
      const auto& color = ex.attributes.at("color");
      const auto& shape = ex.attributes.at("shape");
      for (const auto& cap : ex.captions) {
        CHECK(cap.find(color) != std::string::npos);
        CHECK(cap.find(shape) != std::string::npos);
      }
    }
  }

  SUBCASE("same seed renders bit-identical images") {
    auto raw2 = generate_synthetic_dataset(cfg, 11);
    for (size_t i = 0; i < raw.examples.size(); ++i)
      CHECK(raw.examples[i].render.rgb == raw2.examples[i].render.rgb);
  }

  SUBCASE("declared color dominates the foreground histogram") {
    // independent pixel-count oracle
    const std::map<std::string, std::array<int, 3>> palette = {
        {"red", {220, 40, 40}},    {"green", {40, 200, 60}},  {"blue", {50, 70, 220}},
        {"yellow", {230, 220, 50}}, {"purple", {160, 60, 200}}, {"orange", {240, 150, 40}},
        {"cyan", {60, 210, 220}},  {"white", {235, 235, 235}}};
    for (const auto& ex : raw.examples) {
      const auto& want = palette.at(ex.attributes.at("color"));
      long match = 0, fg = 0;
      for (int y = 0; y < ex.render.h; ++y)
        for (int x = 0; x < ex.render.w; ++x) {
          const int r = ex.render.at(y, x, 0), g = ex.render.at(y, x, 1), b = ex.render.at(y, x, 2);
          if (r == 24 && g == 24 && b == 24) continue;  // background
          ++fg;
          if (std::abs(r - want[0]) < 30 && std::abs(g - want[1]) < 30 && std::abs(b - want[2]) < 30)
            ++match;
        }
      CHECK(fg > 0);
      CHECK(static_cast<double>(match) / fg > 0.99);
    }
  }
}

TEST_CASE("dataset layout round-trip and loader errors") {
  const fs::path dir = fs::temp_directory_path() / "t2i_test_layout";
  fs::remove_all(dir);

  SyntheticConfig cfg;
  cfg.n_classes = 2;
  cfg.n_per_class = 3;
  cfg.captions_per_image = 2;
  auto raw = generate_synthetic_dataset(cfg, 3);
  write_dataset_layout(raw, dir.string());

  SUBCASE("round-trip preserves ids, captions, bboxes and attributes") {
    auto loaded = load_dataset_layout(dir.string());
    REQUIRE(loaded.examples.size() == raw.examples.size());
    std::map<std::string, const RawExample*> by_id;
    for (const auto& ex : loaded.examples) by_id[ex.image_id] = &ex;
    for (const auto& ex : raw.examples) {
      REQUIRE(by_id.count(ex.image_id));
      const RawExample& got = *by_id.at(ex.image_id);
      CHECK(got.captions == ex.captions);
      CHECK(got.bbox.x == ex.bbox.x);
      CHECK(got.bbox.w == ex.bbox.w);
      CHECK(got.attributes == ex.attributes);
      CHECK(got.render.rgb == ex.render.rgb);  // png is lossless
    }

    AssembleOptions opt;
    opt.resolutions = {16, 32, 64};
    Dataset ds = assemble_dataset(loaded, opt);
    CHECK(ds.records.size() == raw.examples.size() * 2);
    CHECK(ds.images.size() == raw.examples.size());
    CHECK(ds.max_resolution() == 64);
  }

  SUBCASE("missing caption file names the offending path") {
    const fs::path victim = dir / "text" / raw.class_names[0] / (raw.examples[0].image_id + ".txt");
    fs::remove(victim);
    try {
      load_dataset_layout(dir.string());
      FAIL("expected a throw");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find(victim.string()) != std::string::npos);
    }
  }

  SUBCASE("malformed bbox row names the file") {
    std::ofstream(dir / "bounding_boxes.txt", std::ios::app) << "broken row here\n";
    try {
      load_dataset_layout(dir.string());
      FAIL("expected a throw");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("bounding_boxes.txt") != std::string::npos);
    }
  }

  fs::remove_all(dir);
}
