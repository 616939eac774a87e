// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "t2i/data/imageio.hpp"

namespace t2i::eval {

// Sum P log(P/Q) with the 0 log 0 = 0 convention. Throws when Q is zero at a
// point where P is positive.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// exp of the mean KL of each conditional against their mean.
double inception_score(const std::vector<std::vector<double>>& conditionals);

// ---------------------------------------------------------------------------
// MOS recording and aggregation
// ---------------------------------------------------------------------------

struct MosItem {
  std::string item_id;
  std::string source_tag;  // ground_truth | model_A | model_B | ...
  std::string image_path;
  std::string caption;
};

// items CSV: item_id,source_tag,image_path,caption (no header)
std::vector<MosItem> load_mos_items(const std::string& path);

// Interactive terminal flow: presents items in seeded random order, accepts
// ratings 1..5 (re-prompting on anything else), appends one log line per
// rating immediately. Items already rated by this rater in the log are
// skipped, which makes an interrupted session resumable.
// Log line: rater_id,item_id,source_tag,rating,unix_time
void run_mos_session(std::istream& in, std::ostream& out, const std::vector<MosItem>& items,
                     const std::string& rater_id, uint64_t seed, const std::string& log_path);

struct MosStats {
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

std::map<std::string, MosStats> mos_report(const std::string& log_path);

// ---------------------------------------------------------------------------
// caption-consistency probe (synthetic attributes)
// ---------------------------------------------------------------------------

struct ConsistencyResult {
  std::map<std::string, bool> matches;  // color, position, shape
  double accuracy = 0.0;                // fraction matched
};

// color by dominant foreground color, position by centroid quadrant, shape by
// template correlation. Throws when the required attributes are absent.
ConsistencyResult caption_consistency(const data::ImageU8& image,
                                      const std::map<std::string, std::string>& attributes);

// ---------------------------------------------------------------------------
// plotting and CSV
// ---------------------------------------------------------------------------

// Minimal line plot (axes, ticks, polyline) rendered straight to PNG.
void write_line_plot(const std::string& path, const std::vector<std::pair<double, double>>& points,
                     const std::string& x_label, const std::string& y_label);

void append_metrics_rows(const std::string& csv_path,
                         const std::vector<std::string>& rows);  // creates header if new

std::string metrics_row(int epoch, const std::string& model, const std::string& metric,
                        double value, uint64_t seed);

}  // namespace t2i::eval
