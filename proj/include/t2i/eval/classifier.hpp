// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "t2i/nn/adam.hpp"
#include "t2i/nn/layers.hpp"

namespace t2i::eval {

struct ClassifierConfig {
  int resolution = 64;
  int n_classes = 0;
  int base_channels = 12;
  int batch_size = 16;
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int max_epochs = 60;
  int plateau_epochs = 5;  // stop after this many epochs without val improvement
  double val_fraction = 0.2;
};

// Small convolutional classifier standing in for a fine-tuned large
// pretrained model; produces per-image class distributions for the
// inception-score evaluation. Deterministic given (config, seed).
class EvalClassifier {
public:
  EvalClassifier(const ClassifierConfig& cfg, uint64_t seed);

  // images: 3 x res x res in [-1, 1]; labels: class ids. Trains to a
  // validation-accuracy plateau.
  void train(const std::vector<const Tensor*>& images, const std::vector<int>& labels);

  std::vector<double> predict(const Tensor& image) const;  // sums to 1

  double val_accuracy() const { return val_accuracy_; }
  const std::vector<double>& val_history() const { return val_history_; }

private:
  nn::Var logits(nn::Tape& t, nn::Var image) const;

  ClassifierConfig cfg_;
  uint64_t seed_;
  nn::ParamStore store_;
  std::vector<nn::Conv2d> convs_;
  nn::Affine head_;
  double val_accuracy_ = 0.0;
  std::vector<double> val_history_;
};

}  // namespace t2i::eval
