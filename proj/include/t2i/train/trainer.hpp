// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "t2i/data/dataset.hpp"
#include "t2i/eval/classifier.hpp"
#include "t2i/train/checkpoint.hpp"
#include "t2i/train/models.hpp"

namespace t2i::train {

// <out_root>/<config-digest>-s<seed>; reruns get a -rN suffix so metrics stay
// append-only per run.
std::string make_run_dir(const TrainConfig& cfg, const std::string& out_root);

// Applies cfg.threads to the kernel dispatcher (1 selects the serial path).
void apply_thread_config(const TrainConfig& cfg);

// NaN/Inf policy: dump the offending batch to <run_dir>/nan_dump.json and
// raise NumericalAbort. No-op for finite values.
void abort_if_nonfinite(const std::string& run_dir, const std::string& phase, int epoch,
                        int batch, const std::vector<std::string>& record_ids,
                        const std::string& name, double value);

struct PhaseResult {
  std::string checkpoint_path;             // final checkpoint of the phase
  std::vector<double> epoch_losses;        // headline loss per epoch
  std::vector<std::string> metrics_rows;   // what was appended to metrics.csv
};

// Minimizes the word/sentence matching loss on real pairs; trains the text
// encoder and the image region encoder. Writes metrics.csv rows and a
// checkpoint holding the text.* / damsm.* arrays.
PhaseResult pretrain_damsm(const TrainConfig& cfg, const data::Dataset& ds, Models& m,
                           const std::string& run_dir);

// Teacher-forced caption regeneration on real images; stream.* arrays only.
PhaseResult pretrain_stream(const TrainConfig& cfg, const data::Dataset& ds, Models& m,
                            const std::string& run_dir);

// Adversarial training. Assumes pretrained text/damsm (and stream, in cycle
// mode) values are already in the store. Returns every checkpoint written
// (cadence plus final).
struct GanResult {
  std::vector<std::string> checkpoint_paths;
  std::vector<std::string> metrics_rows;
};
GanResult train_gan(const TrainConfig& cfg, const data::Dataset& ds, Models& m,
                    const std::string& run_dir);

// ---------------------------------------------------------------------------
// generation and evaluation glue
// ---------------------------------------------------------------------------

struct GenerationResult {
  std::vector<Tensor> images;  // per stage
  std::vector<Tensor> betas;   // attention maps for stages >= 1
  std::vector<int> regen_tokens;  // cycle mode: greedy caption from the top image
};

GenerationResult generate_sample(Models& m, const TrainConfig& cfg, const std::vector<int>& tokens,
                                 Rng& noise_rng, bool regen_caption);

// Per class, draws up to per_class captions without replacement and generates
// one final-stage image each. Returns (image, class_id) pairs.
std::vector<std::pair<Tensor, int>> sample_images_for_is(Models& m, const TrainConfig& cfg,
                                                         const data::Dataset& ds, int per_class,
                                                         uint64_t seed);

double evaluate_is(Models& m, const TrainConfig& cfg, const data::Dataset& ds,
                   const eval::EvalClassifier& classifier, uint64_t seed);

// Trains the desk-scale eval classifier on the dataset's top-resolution images.
eval::EvalClassifier train_eval_classifier(const data::Dataset& ds, uint64_t seed,
                                           int max_epochs = 60);

// (epoch, IS) per checkpoint, with CSV and plot emitted to out_csv/out_png.
std::vector<std::pair<int, double>> is_curve(const TrainConfig& cfg, const data::Dataset& ds,
                                             const std::vector<std::string>& checkpoint_paths,
                                             const std::string& out_csv,
                                             const std::string& out_png, uint64_t eval_seed);

}  // namespace t2i::train
