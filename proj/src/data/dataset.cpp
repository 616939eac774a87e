// SPDX-License-Identifier: Apache-2.0
#include "t2i/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace t2i::data {

SplitManifest split_class_disjoint(const std::vector<CaptionRecord>& records,
                                   double train_fraction, uint64_t seed) {
  std::set<int> classes;
  for (const auto& r : records) classes.insert(r.class_id);
  if (classes.size() < 2) throw std::runtime_error("split_class_disjoint: need >= 2 classes");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::runtime_error("split_class_disjoint: fraction must be in (0, 1)");

  std::vector<int> ids(classes.begin(), classes.end());
  Rng rng(seed);
  rng.shuffle(ids);
  const int k = static_cast<int>(ids.size());
  int n_train = static_cast<int>(std::lround(train_fraction * k));
  n_train = std::clamp(n_train, 1, k - 1);

  SplitManifest m;
  m.seed = seed;
  for (int i = 0; i < k; ++i)
    (i < n_train ? m.train_classes : m.test_classes).insert(ids[static_cast<size_t>(i)]);
  return m;
}

// ---------------------------------------------------------------------------
// synthetic shapes
// ---------------------------------------------------------------------------

namespace {

struct Color {
  uint8_t r, g, b;
};

const std::vector<std::string>& color_names() {
  static const std::vector<std::string> names = {"red",    "green",  "blue", "yellow",
                                                 "purple", "orange", "cyan", "white"};
  return names;
}

const std::vector<Color>& color_values() {
  static const std::vector<Color> vals = {{220, 40, 40},  {40, 200, 60},  {50, 70, 220},
                                          {230, 220, 50}, {160, 60, 200}, {240, 150, 40},
                                          {60, 210, 220}, {235, 235, 235}};
  return vals;
}

const std::vector<std::string>& shape_names() {
  static const std::vector<std::string> names = {"circle", "square", "triangle"};
  return names;
}

struct Placement {
  std::string name;
  double dx, dy;  // center offset as a fraction of the edge
};

const std::vector<Placement>& placements() {
  static const std::vector<Placement> p = {{"upper left", -0.22, -0.22},
                                           {"upper right", 0.22, -0.22},
                                           {"lower left", -0.22, 0.22},
                                           {"lower right", 0.22, 0.22},
                                           {"center", 0.0, 0.0}};
  return p;
}

constexpr uint8_t kBackground = 24;

void render_shape(ImageU8& img, int shape, const Color& col, double cx, double cy, double r) {
  const int n = img.w;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      bool inside = false;
      switch (shape) {
        case 0:  // circle
          inside = (px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r;
          break;
        case 1:  // square
          inside = std::abs(px - cx) <= r && std::abs(py - cy) <= r;
          break;
        case 2: {  // upward triangle with vertices (cx, cy-r), (cx±r, cy+r)
          const double fy = (py - (cy - r)) / (2.0 * r);
          inside = fy >= 0.0 && fy <= 1.0 && std::abs(px - cx) <= fy * r;
          break;
        }
        default:
          break;
      }
      if (inside) {
        img.at(y, x, 0) = col.r;
        img.at(y, x, 1) = col.g;
        img.at(y, x, 2) = col.b;
      }
    }
  }
}

Rect shape_bbox(int shape, double cx, double cy, double r, int edge) {
  double x0 = cx - r, x1 = cx + r, y0 = cy - r, y1 = cy + r;
  if (shape == 2) y0 = cy - r;  // triangle shares the square extent
  Rect b;
  b.x = std::max(0, static_cast<int>(std::floor(x0)));
  b.y = std::max(0, static_cast<int>(std::floor(y0)));
  b.w = std::min(edge, static_cast<int>(std::ceil(x1))) - b.x;
  b.h = std::min(edge, static_cast<int>(std::ceil(y1))) - b.y;
  return b;
}

std::string make_caption(Rng& rng, const std::string& size, const std::string& color,
                         const std::string& shape, const std::string& pos) {
  switch (rng.uniform_int(0, 3)) {
    case 0:
      return "a " + size + " " + color + " " + shape + " in the " + pos;
    case 1:
      return "the " + pos + " of the image shows a " + size + " " + color + " " + shape;
    case 2:
      return "there is a " + size + " " + color + " " + shape + " in the " + pos;
    default:
      return "a " + color + " " + shape + " of " + size + " size sits in the " + pos;
  }
}

}  // namespace

const std::vector<std::string>& synthetic_color_names() { return color_names(); }
const std::vector<std::string>& synthetic_shape_names() { return shape_names(); }

RawSynthetic generate_synthetic_dataset(const SyntheticConfig& cfg, uint64_t seed) {
  if (cfg.n_classes < 2) throw std::runtime_error("generate_synthetic_dataset: need >= 2 classes");
  if (cfg.n_per_class < 1) throw std::runtime_error("generate_synthetic_dataset: need >= 1 image per class");
  const int n_colors = static_cast<int>(color_names().size());
  const int n_shapes = static_cast<int>(shape_names().size());
  if (cfg.n_classes > n_colors * n_shapes)
    throw std::runtime_error("generate_synthetic_dataset: at most " +
                             std::to_string(n_colors * n_shapes) + " classes supported");

  RawSynthetic out;
  std::vector<std::pair<int, int>> combos;  // (color, shape), colors rotate fastest
  for (int k = 0; k < cfg.n_classes; ++k) combos.emplace_back(k % n_colors, (k / n_colors + k) % n_shapes);
  for (auto [c, s] : combos) out.class_names.push_back(color_names()[static_cast<size_t>(c)] + "_" + shape_names()[static_cast<size_t>(s)]);

  Rng root(seed);
  const int edge = cfg.render_resolution;
  for (int k = 0; k < cfg.n_classes; ++k) {
    Rng rng = root.fork(static_cast<uint64_t>(k) + 1000);
    const auto [color_idx, shape_idx] = combos[static_cast<size_t>(k)];
    for (int i = 0; i < cfg.n_per_class; ++i) {
      RawExample ex;
      {
        std::ostringstream id;
        id << "c" << std::setw(3) << std::setfill('0') << k << "_i" << std::setw(4)
           << std::setfill('0') << i;
        ex.image_id = id.str();
      }
      ex.class_id = k;

      const int place_idx = rng.uniform_int(0, static_cast<int>(placements().size()) - 1);
      const bool small = rng.uniform() < 0.5;
      const double radius = (small ? 0.12 : 0.20) * edge;
      const Placement& pl = placements()[static_cast<size_t>(place_idx)];
      // small deterministic jitter keeps images within a class distinct
      const double jx = rng.uniform(-0.02, 0.02) * edge;
      const double jy = rng.uniform(-0.02, 0.02) * edge;
      const double cx = edge * (0.5 + pl.dx) + jx;
      const double cy = edge * (0.5 + pl.dy) + jy;

      ex.render.w = edge;
      ex.render.h = edge;
      ex.render.rgb.assign(static_cast<size_t>(edge) * edge * 3, kBackground);
      render_shape(ex.render, shape_idx, color_values()[static_cast<size_t>(color_idx)], cx, cy, radius);
      ex.bbox = shape_bbox(shape_idx, cx, cy, radius, edge);

      const std::string size_word = small ? "small" : "large";
      ex.attributes["shape"] = shape_names()[static_cast<size_t>(shape_idx)];
      ex.attributes["color"] = color_names()[static_cast<size_t>(color_idx)];
      ex.attributes["size"] = size_word;
      ex.attributes["position"] = pl.name;
      for (int c = 0; c < cfg.captions_per_image; ++c)
        ex.captions.push_back(make_caption(rng, size_word, ex.attributes["color"],
                                           ex.attributes["shape"], pl.name));
      out.examples.push_back(std::move(ex));
    }
  }
  return out;
}

Dataset assemble_dataset(const RawSynthetic& raw, const AssembleOptions& opt) {
  if (raw.examples.empty()) throw std::runtime_error("assemble_dataset: no examples");
  for (size_t i = 1; i < opt.resolutions.size(); ++i)
    if (opt.resolutions[i] != 2 * opt.resolutions[i - 1])
      throw std::runtime_error("assemble_dataset: resolutions must double per level");

  Dataset ds;
  ds.class_names = raw.class_names;

  std::vector<std::string> corpus;
  for (const auto& ex : raw.examples)
    for (const auto& cap : ex.captions) corpus.push_back(cap);
  ds.vocab = build_vocabulary(corpus, opt.min_freq);

  for (const auto& ex : raw.examples) {
    ImageExample img;
    img.image_id = ex.image_id;
    img.class_id = ex.class_id;
    img.bbox = ex.bbox;
    bool clamped = false;
    ImageU8 source = ex.render;
    if (opt.crop_min_ratio > 0.0 && ex.bbox.area() > 0) {
      CropResult cr = crop_to_bbox_ratio(ex.render, ex.bbox, opt.crop_min_ratio);
      source = std::move(cr.image);
      clamped = cr.clamped;
    }
    img.pyramid = make_pyramid(image_to_tensor(source), opt.resolutions.front(),
                               static_cast<int>(opt.resolutions.size()));
    const int image_index = static_cast<int>(ds.images.size());
    ds.images.push_back(std::move(img));

    for (const auto& cap : ex.captions) {
      CaptionRecord rec;
      rec.image_id = ex.image_id;
      rec.class_id = ex.class_id;
      rec.raw_text = cap;
      auto tk = tokenize(cap, ds.vocab, opt.t_max);
      rec.tokens = tk.ids;
      rec.attributes = ex.attributes;
      rec.image_index = image_index;
      rec.crop_clamped = clamped;
      ds.records.push_back(std::move(rec));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// layout I/O
// ---------------------------------------------------------------------------

void write_dataset_layout(const RawSynthetic& raw, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream bboxes(fs::path(dir) / "bounding_boxes.txt");
  json attrs = json::object();
  for (const auto& ex : raw.examples) {
    const std::string& cls = raw.class_names[static_cast<size_t>(ex.class_id)];
    const fs::path img_dir = fs::path(dir) / "images" / cls;
    const fs::path txt_dir = fs::path(dir) / "text" / cls;
    fs::create_directories(img_dir);
    fs::create_directories(txt_dir);
    write_png((img_dir / (ex.image_id + ".png")).string(), ex.render);
    std::ofstream txt(txt_dir / (ex.image_id + ".txt"));
    for (const auto& cap : ex.captions) txt << cap << "\n";
    bboxes << ex.image_id << " " << ex.bbox.x << " " << ex.bbox.y << " " << ex.bbox.w << " "
           << ex.bbox.h << "\n";
    if (!ex.attributes.empty()) attrs[ex.image_id] = ex.attributes;
  }
  std::ofstream(fs::path(dir) / "attributes.json") << attrs.dump(2) << "\n";
}

RawSynthetic load_dataset_layout(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root / "images"))
    throw std::runtime_error("dataset: missing images/ under " + dir);

  std::map<std::string, Rect> bboxes;
  const fs::path bbox_path = root / "bounding_boxes.txt";
  if (fs::exists(bbox_path)) {
    std::ifstream in(bbox_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string id;
      Rect r;
      if (!(ss >> id >> r.x >> r.y >> r.w >> r.h))
        throw std::runtime_error("dataset: malformed bbox row " + std::to_string(line_no) +
                                 " in " + bbox_path.string());
      bboxes[id] = r;
    }
  }

  json attrs = json::object();
  if (fs::exists(root / "attributes.json")) {
    std::ifstream in(root / "attributes.json");
    in >> attrs;
  }

  RawSynthetic raw;
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root / "images"))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw std::runtime_error("dataset: no class directories in " + dir);

  for (const auto& cdir : class_dirs) {
    const std::string cls = cdir.filename().string();
    const int class_id = static_cast<int>(raw.class_names.size());
    raw.class_names.push_back(cls);

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cdir)) {
      const auto ext = e.path().extension().string();
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      RawExample ex;
      ex.image_id = f.stem().string();
      ex.class_id = class_id;
      ex.render = read_image(f.string());

      const fs::path txt = root / "text" / cls / (ex.image_id + ".txt");
      std::ifstream tin(txt);
      if (!tin) throw std::runtime_error("dataset: missing caption file " + txt.string());
      std::string line;
      while (std::getline(tin, line))
        if (!line.empty()) ex.captions.push_back(line);
      if (ex.captions.empty())
        throw std::runtime_error("dataset: caption file has no captions: " + txt.string());

      auto bit = bboxes.find(ex.image_id);
      ex.bbox = bit != bboxes.end() ? bit->second : Rect{0, 0, ex.render.w, ex.render.h};
      if (attrs.contains(ex.image_id))
        for (auto& [k, v] : attrs[ex.image_id].items())
          ex.attributes[k] = v.get<std::string>();
      raw.examples.push_back(std::move(ex));
    }
  }
  if (raw.examples.empty()) throw std::runtime_error("dataset: no images found in " + dir);
  return raw;
}

}  // namespace t2i::data
