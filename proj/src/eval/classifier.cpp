// SPDX-License-Identifier: Apache-2.0
#include "t2i/eval/classifier.hpp"

#include <algorithm>
#include <stdexcept>

namespace t2i::eval {

EvalClassifier::EvalClassifier(const ClassifierConfig& cfg, uint64_t seed)
    : cfg_(cfg), seed_(seed) {
  if (cfg.n_classes < 2) throw std::runtime_error("classifier: need at least 2 classes");
  Rng rng = Rng(seed).fork(0xC1A55);
  int res = cfg.resolution;
  int in_ch = 3;
  int out_ch = cfg.base_channels;
  int idx = 0;
  while (res > 4) {
    if (res % 2 != 0) throw std::runtime_error("classifier: resolution must be a power of 2");
    convs_.emplace_back(store_, "cls.down" + std::to_string(idx), in_ch, out_ch, 2, 2, 0, rng);
    in_ch = out_ch;
    out_ch = std::min(out_ch * 2, 8 * cfg.base_channels);
    res /= 2;
    ++idx;
  }
  head_ = nn::Affine(store_, "cls.head", in_ch, cfg.n_classes, rng);
}

nn::Var EvalClassifier::logits(nn::Tape& t, nn::Var image) const {
  nn::Var x = image;
  for (const auto& conv : convs_) x = t.lrelu(conv.apply(t, x), 0.2);
  return head_.apply(t, t.mean_hw(x));
}

void EvalClassifier::train(const std::vector<const Tensor*>& images,
                           const std::vector<int>& labels) {
  if (images.size() != labels.size() || images.empty())
    throw std::runtime_error("classifier: bad training set");

  Rng rng = Rng(seed_).fork(0x7241);
  std::vector<size_t> order(images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const size_t n_val = std::max<size_t>(1, static_cast<size_t>(cfg_.val_fraction * images.size()));
  std::vector<size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());
  if (train_idx.empty()) throw std::runtime_error("classifier: training split is empty");

  nn::Adam opt(store_.all(), cfg_.lr, cfg_.beta1, cfg_.beta2);

  double best_val = -1.0;
  int since_best = 0;
  for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    Rng erng = rng.fork(static_cast<uint64_t>(epoch) + 17);
    erng.shuffle(train_idx);
    for (size_t start = 0; start < train_idx.size(); start += static_cast<size_t>(cfg_.batch_size)) {
      const size_t end = std::min(train_idx.size(), start + static_cast<size_t>(cfg_.batch_size));
      nn::Tape t;
      nn::Var loss = t.constant(Tensor::scalar(0.0));
      for (size_t k = start; k < end; ++k) {
        const size_t i = train_idx[k];
        nn::Var p = t.clamp(t.softmax_vec(logits(t, t.constant(*images[i]))), 1e-12, 1.0);
        loss = t.sub(loss, t.log_(t.slice(p, labels[i], 1)));
      }
      loss = t.scale(loss, 1.0 / static_cast<double>(end - start));
      store_.zero_grads();
      t.backward(loss);
      opt.step();
    }

    long hits = 0;
    for (size_t i : val_idx) {
      const auto probs = predict(*images[i]);
      const int best = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
      if (best == labels[i]) ++hits;
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(val_idx.size());
    val_history_.push_back(acc);
    val_accuracy_ = acc;
    if (acc > best_val + 1e-9) {
      best_val = acc;
      since_best = 0;
    } else if (++since_best >= cfg_.plateau_epochs) {
      break;
    }
  }
}

std::vector<double> EvalClassifier::predict(const Tensor& image) const {
  nn::Tape t(false);
  nn::Var p = t.softmax_vec(logits(t, t.constant(image)));
  const Tensor& v = t.value(p);
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace t2i::eval
