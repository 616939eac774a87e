// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "t2i/core/rng.hpp"
#include "t2i/data/image_ops.hpp"
#include "t2i/data/vocab.hpp"

namespace t2i::data {

// One caption of one image.
struct CaptionRecord {
  std::string image_id;
  int class_id = 0;
  std::vector<int> tokens;  // non-empty, no reserved ids, length <= t_max
  std::string raw_text;
  std::map<std::string, std::string> attributes;  // synthetic ground truth
  int image_index = 0;                             // into Dataset::images
  bool crop_clamped = false;
};

struct ImageExample {
  std::string image_id;
  int class_id = 0;
  std::vector<Tensor> pyramid;  // ascending resolutions, values in [-1, 1]
  std::optional<Rect> bbox;     // in source-image pixels
};

struct SplitManifest {
  std::set<int> train_classes;
  std::set<int> test_classes;
  uint64_t seed = 0;
};

struct Dataset {
  Vocabulary vocab;
  std::vector<std::string> class_names;
  std::vector<ImageExample> images;
  std::vector<CaptionRecord> records;

  int max_resolution() const {
    return images.empty() ? 0 : images.front().pyramid.back().dim(1);
  }
};

// Deterministic class partition (not a record partition). Needs >= 2 classes.
SplitManifest split_class_disjoint(const std::vector<CaptionRecord>& records,
                                   double train_fraction, uint64_t seed);

// ---------------------------------------------------------------------------
// synthetic captioned shapes
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  int n_classes = 8;
  int n_per_class = 64;
  std::vector<int> resolutions = {16, 32, 64};
  int captions_per_image = 4;
  int render_resolution = 64;
};

// Raw rendered example before preprocessing.
struct RawExample {
  std::string image_id;
  int class_id = 0;
  ImageU8 render;
  Rect bbox;
  std::vector<std::string> captions;
  std::map<std::string, std::string> attributes;  // shape, color, size, position
};

struct RawSynthetic {
  std::vector<std::string> class_names;
  std::vector<RawExample> examples;
};

// Renders colored geometric shapes and template captions; pure in (config, seed).
RawSynthetic generate_synthetic_dataset(const SyntheticConfig& cfg, uint64_t seed);

struct AssembleOptions {
  std::vector<int> resolutions = {16, 32, 64};
  double crop_min_ratio = 0.0;  // 0 disables cropping
  int t_max = 16;
  int min_freq = 1;
};

// Crop / pyramid / vocabulary / tokenize. Shared by the synthetic path and
// the on-disk loader.
Dataset assemble_dataset(const RawSynthetic& raw, const AssembleOptions& opt);

// ---------------------------------------------------------------------------
// on-disk layout:
//   images/<class>/<id>.png|jpg
//   text/<class>/<id>.txt            one caption per line
//   bounding_boxes.txt               "<id> x y w h" per line (optional file)
//   attributes.json                  per-image attribute map (optional)
// ---------------------------------------------------------------------------

void write_dataset_layout(const RawSynthetic& raw, const std::string& dir);

// Reads the layout back into raw form; errors name the offending path.
RawSynthetic load_dataset_layout(const std::string& dir);

inline Dataset load_dataset(const std::string& dir, const AssembleOptions& opt) {
  return assemble_dataset(load_dataset_layout(dir), opt);
}

const std::vector<std::string>& synthetic_color_names();
const std::vector<std::string>& synthetic_shape_names();

}  // namespace t2i::data
