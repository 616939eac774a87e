// SPDX-License-Identifier: Apache-2.0
#include "t2i/eval/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "t2i/core/rng.hpp"

namespace t2i::eval {

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::runtime_error("kl_divergence: size mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;  // 0 log 0 = 0
    if (q[i] <= 0.0)
      throw std::runtime_error("kl_divergence: Q is zero where P is positive (index " +
                               std::to_string(i) + ")");
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return sum;
}

double inception_score(const std::vector<std::vector<double>>& conditionals) {
  if (conditionals.empty()) throw std::runtime_error("inception_score: no samples");
  const size_t k = conditionals.front().size();
  std::vector<double> marginal(k, 0.0);
  for (const auto& c : conditionals) {
    if (c.size() != k) throw std::runtime_error("inception_score: ragged conditionals");
    for (size_t i = 0; i < k; ++i) marginal[i] += c[i];
  }
  for (double& m : marginal) m /= static_cast<double>(conditionals.size());
  double mean_kl = 0.0;
  for (const auto& c : conditionals) mean_kl += kl_divergence(c, marginal);
  mean_kl /= static_cast<double>(conditionals.size());
  return std::exp(mean_kl);
}

// ---------------------------------------------------------------------------
// MOS
// ---------------------------------------------------------------------------

std::vector<MosItem> load_mos_items(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mos: cannot open items file " + path);
  std::vector<MosItem> items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    MosItem it;
    std::getline(ss, it.item_id, ',');
    std::getline(ss, it.source_tag, ',');
    std::getline(ss, it.image_path, ',');
    std::getline(ss, it.caption);
    if (it.item_id.empty() || it.source_tag.empty())
      throw std::runtime_error("mos: malformed items row " + std::to_string(line_no) + " in " + path);
    items.push_back(std::move(it));
  }
  if (items.empty()) throw std::runtime_error("mos: items file is empty: " + path);
  return items;
}

void run_mos_session(std::istream& in, std::ostream& out, const std::vector<MosItem>& items,
                     const std::string& rater_id, uint64_t seed, const std::string& log_path) {
  // Already-rated items for this rater, for resumability.
  std::set<std::string> done;
  {
    std::ifstream log(log_path);
    std::string line;
    while (std::getline(log, line)) {
      std::stringstream ss(line);
      std::string rater, item;
      std::getline(ss, rater, ',');
      std::getline(ss, item, ',');
      if (rater == rater_id) done.insert(item);
    }
  }

  std::vector<size_t> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::ofstream log(log_path, std::ios::app);
  if (!log) throw std::runtime_error("mos: cannot open log for append: " + log_path);

  int shown = 0;
  for (size_t idx : order) {
    const MosItem& it = items[idx];
    if (done.count(it.item_id)) continue;
    ++shown;
    out << "\nitem " << it.item_id << "\n";
    out << "image:   " << it.image_path << "\n";
    out << "caption: " << it.caption << "\n";
    int rating = 0;
    for (;;) {
      out << "rating [1-5] (q quits, resume later): " << std::flush;
      std::string reply;
      if (!std::getline(in, reply)) return;  // EOF: resumable
      if (reply == "q" || reply == "Q") return;
      try {
        size_t pos = 0;
        rating = std::stoi(reply, &pos);
        if (pos == reply.size() && rating >= 1 && rating <= 5) break;
      } catch (...) {
      }
      out << "please enter an integer from 1 to 5\n";
    }
    const auto now = std::chrono::system_clock::now();
    const long long unix_time =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    log << rater_id << "," << it.item_id << "," << it.source_tag << "," << rating << ","
        << unix_time << "\n";
    log.flush();
  }
  out << "\nsession complete (" << shown << " new ratings)\n";
}

std::map<std::string, MosStats> mos_report(const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("mos: cannot open log " + log_path);
  std::map<std::string, std::vector<double>> by_tag;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string rater, item, tag, rating_str;
    std::getline(ss, rater, ',');
    std::getline(ss, item, ',');
    std::getline(ss, tag, ',');
    std::getline(ss, rating_str, ',');
    if (tag.empty() || rating_str.empty())
      throw std::runtime_error("mos: malformed log row " + std::to_string(line_no));
    by_tag[tag].push_back(std::stod(rating_str));
  }
  if (by_tag.empty()) throw std::runtime_error("mos: log is empty: " + log_path);
  std::map<std::string, MosStats> out;
  for (const auto& [tag, ratings] : by_tag) {
    MosStats s;
    s.n = static_cast<int>(ratings.size());
    for (double r : ratings) s.mean += r;
    s.mean /= s.n;
    for (double r : ratings) s.stddev += (r - s.mean) * (r - s.mean);
    s.stddev = s.n > 1 ? std::sqrt(s.stddev / (s.n - 1)) : 0.0;
    out[tag] = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// consistency probe
// ---------------------------------------------------------------------------

namespace {

struct Foreground {
  std::vector<uint8_t> mask;  // h*w
  double cx = 0, cy = 0;
  long count = 0;
  double mean_r = 0, mean_g = 0, mean_b = 0;
};

Foreground find_foreground(const data::ImageU8& img) {
  Foreground f;
  f.mask.assign(static_cast<size_t>(img.w) * img.h, 0);
  // background reference: median-ish corner sample
  double br = 0, bg = 0, bb = 0;
  const int corners[4][2] = {{0, 0}, {0, img.w - 1}, {img.h - 1, 0}, {img.h - 1, img.w - 1}};
  for (auto& c : corners) {
    br += img.at(c[0], c[1], 0);
    bg += img.at(c[0], c[1], 1);
    bb += img.at(c[0], c[1], 2);
  }
  br /= 4; bg /= 4; bb /= 4;
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const double dr = img.at(y, x, 0) - br;
      const double dg = img.at(y, x, 1) - bg;
      const double db = img.at(y, x, 2) - bb;
      if (std::abs(dr) + std::abs(dg) + std::abs(db) > 90.0) {
        f.mask[static_cast<size_t>(y) * img.w + x] = 1;
        f.cx += x + 0.5;
        f.cy += y + 0.5;
        f.mean_r += img.at(y, x, 0);
        f.mean_g += img.at(y, x, 1);
        f.mean_b += img.at(y, x, 2);
        ++f.count;
      }
    }
  }
  if (f.count > 0) {
    f.cx /= f.count;
    f.cy /= f.count;
    f.mean_r /= f.count;
    f.mean_g /= f.count;
    f.mean_b /= f.count;
  }
  return f;
}

struct Palette {
  std::string name;
  double r, g, b;
};

const std::vector<Palette>& palette() {
  static const std::vector<Palette> p = {
      {"red", 220, 40, 40},    {"green", 40, 200, 60},  {"blue", 50, 70, 220},
      {"yellow", 230, 220, 50}, {"purple", 160, 60, 200}, {"orange", 240, 150, 40},
      {"cyan", 60, 210, 220},  {"white", 235, 235, 235}};
  return p;
}

std::string nearest_color(double r, double g, double b) {
  double best = 1e300;
  std::string name;
  for (const auto& c : palette()) {
    const double d = (r - c.r) * (r - c.r) + (g - c.g) * (g - c.g) + (b - c.b) * (b - c.b);
    if (d < best) {
      best = d;
      name = c.name;
    }
  }
  return name;
}

std::string centroid_position(double cx, double cy, int w, int h) {
  const double dx = cx - w / 2.0, dy = cy - h / 2.0;
  if (std::abs(dx) < w / 8.0 && std::abs(dy) < h / 8.0) return "center";
  std::string pos = dy < 0 ? "upper" : "lower";
  pos += dx < 0 ? " left" : " right";
  return pos;
}

// IoU of the foreground mask against a canonical shape template whose
// centroid sits at the measured centroid with matching area. The upward
// triangle's centroid lies r/3 below its bounding-box center.
double shape_iou(const Foreground& f, int w, int h, int shape) {
  const double area = static_cast<double>(f.count);
  double r = 1.0;
  switch (shape) {
    case 0: r = std::sqrt(area / 3.141592653589793); break;  // circle
    case 1: r = std::sqrt(area) / 2.0; break;                // square: (2r)^2
    case 2: r = std::sqrt(area / 2.0); break;                // triangle: 2r^2
    default: break;
  }
  long inter = 0, uni = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5 - f.cx;
      const double py = y + 0.5 - f.cy;
      bool in_tpl = false;
      switch (shape) {
        case 0: in_tpl = px * px + py * py <= r * r; break;
        case 1: in_tpl = std::abs(px) <= r && std::abs(py) <= r; break;
        case 2: {
          const double fy = (py + r / 3.0 + r) / (2.0 * r);
          in_tpl = fy >= 0.0 && fy <= 1.0 && std::abs(px) <= fy * r;
          break;
        }
        default: break;
      }
      const bool in_fg = f.mask[static_cast<size_t>(y) * w + x] != 0;
      if (in_tpl && in_fg) ++inter;
      if (in_tpl || in_fg) ++uni;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

ConsistencyResult caption_consistency(const data::ImageU8& image,
                                      const std::map<std::string, std::string>& attributes) {
  for (const char* key : {"color", "position", "shape"})
    if (!attributes.count(key))
      throw std::runtime_error(std::string("caption_consistency: attribute '") + key +
                               "' is absent");

  ConsistencyResult res;
  const Foreground f = find_foreground(image);
  if (f.count == 0) {
    res.matches = {{"color", false}, {"position", false}, {"shape", false}};
    res.accuracy = 0.0;
    return res;
  }

  res.matches["color"] = nearest_color(f.mean_r, f.mean_g, f.mean_b) == attributes.at("color");
  res.matches["position"] =
      centroid_position(f.cx, f.cy, image.w, image.h) == attributes.at("position");

  static const std::vector<std::string> shapes = {"circle", "square", "triangle"};
  int best_shape = 0;
  double best_iou = -1.0;
  for (int s = 0; s < 3; ++s) {
    const double iou = shape_iou(f, image.w, image.h, s);
    if (iou > best_iou) {
      best_iou = iou;
      best_shape = s;
    }
  }
  res.matches["shape"] = shapes[static_cast<size_t>(best_shape)] == attributes.at("shape");

  int hit = 0;
  for (const auto& [k, v] : res.matches) hit += v ? 1 : 0;
  res.accuracy = static_cast<double>(hit) / static_cast<double>(res.matches.size());
  return res;
}

// ---------------------------------------------------------------------------
// plotting and CSV
// ---------------------------------------------------------------------------

namespace {

void draw_line(data::ImageU8& img, int x0, int y0, int x1, int y1, uint8_t r, uint8_t g,
               uint8_t b) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    if (x0 >= 0 && x0 < img.w && y0 >= 0 && y0 < img.h) {
      img.at(y0, x0, 0) = r;
      img.at(y0, x0, 1) = g;
      img.at(y0, x0, 2) = b;
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

void write_line_plot(const std::string& path, const std::vector<std::pair<double, double>>& points,
                     const std::string& x_label, const std::string& y_label) {
  if (points.empty()) throw std::runtime_error("write_line_plot: no points");
  const int W = 480, H = 320, ML = 48, MB = 32, MT = 16, MR = 16;
  data::ImageU8 img;
  img.w = W;
  img.h = H;
  img.rgb.assign(static_cast<size_t>(W) * H * 3, 255);

  double xmin = points[0].first, xmax = points[0].first;
  double ymin = points[0].second, ymax = points[0].second;
  for (const auto& [x, y] : points) {
    xmin = std::min(xmin, x); xmax = std::max(xmax, x);
    ymin = std::min(ymin, y); ymax = std::max(ymax, y);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

  auto px = [&](double x) {
    return ML + static_cast<int>((x - xmin) / (xmax - xmin) * (W - ML - MR));
  };
  auto py = [&](double y) {
    return H - MB - static_cast<int>((y - ymin) / (ymax - ymin) * (H - MT - MB));
  };

  draw_line(img, ML, MT, ML, H - MB, 0, 0, 0);
  draw_line(img, ML, H - MB, W - MR, H - MB, 0, 0, 0);
  for (int k = 0; k <= 4; ++k) {  // ticks
    const int tx = ML + k * (W - ML - MR) / 4;
    draw_line(img, tx, H - MB, tx, H - MB + 4, 0, 0, 0);
    const int ty = H - MB - k * (H - MT - MB) / 4;
    draw_line(img, ML - 4, ty, ML, ty, 0, 0, 0);
  }
  for (size_t i = 1; i < points.size(); ++i)
    draw_line(img, px(points[i - 1].first), py(points[i - 1].second), px(points[i].first),
              py(points[i].second), 30, 60, 200);
  for (const auto& [x, y] : points) {  // markers
    const int cx = px(x), cy = py(y);
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx)
        if (cx + dx >= 0 && cx + dx < W && cy + dy >= 0 && cy + dy < H && dx * dx + dy * dy <= 4) {
          img.at(cy + dy, cx + dx, 0) = 200;
          img.at(cy + dy, cx + dx, 1) = 40;
          img.at(cy + dy, cx + dx, 2) = 40;
        }
  }
  (void)x_label;
  (void)y_label;
  data::write_png(path, img);
}

std::string metrics_row(int epoch, const std::string& model, const std::string& metric,
                        double value, uint64_t seed) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%s,%s,%.17g,%llu", epoch, model.c_str(), metric.c_str(),
                value, static_cast<unsigned long long>(seed));
  return buf;
}

void append_metrics_rows(const std::string& csv_path, const std::vector<std::string>& rows) {
  const bool fresh = !std::filesystem::exists(csv_path);
  std::ofstream out(csv_path, std::ios::app);
  if (!out) throw std::runtime_error("metrics: cannot append to " + csv_path);
  if (fresh) out << "epoch,model,metric,value,seed\n";
  for (const auto& r : rows) out << r << "\n";
}

}  // namespace t2i::eval
