// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace t2i::train {

// Flat run configuration. Every field maps to a `key=value` line in a config
// file; CLI flags override file values.
struct TrainConfig {
  std::string mode = "cyclegan_bert";  // attngan_baseline | cyclegan_bert
  uint64_t seed = 1;
  std::string dataset_dir;
  std::string provider = "standin";  // learned | standin | file:<path>
  std::vector<int> resolutions = {16, 32, 64};

  int t_max = 16;
  int min_freq = 1;
  int batch_size = 16;
  double crop_min_ratio = 0.0;  // 0 disables bbox cropping on load

  int d_provider = 48;
  int d_text = 32;
  int d_cond = 16;
  int d_z = 16;
  int d_common = 24;

  int gen_base_channels = 24;
  int disc_base_channels = 8;
  int damsm_base_channels = 12;
  int damsm_region_edge = 8;
  int stream_base_channels = 12;
  int stream_hidden = 48;
  int stream_embed = 24;
  int res_blocks = 2;

  bool mean_pool_sentence = false;
  bool bypass_rnn = false;
  bool share_stream_encoder = false;

  double gamma_region = 5.0;
  double gamma_score = 5.0;
  double gamma_batch = 10.0;
  double lambda = 5.0;
  double ca_kl_weight = 1.0;

  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double damsm_lr = 2e-4;
  double stream_lr = 1e-3;
  bool stream_finetune = false;
  double stream_finetune_lr = 2e-5;

  int epochs = 100;
  int damsm_epochs = 200;
  int stream_epochs = 100;
  int checkpoint_every = 25;

  double train_fraction = 0.75;  // class-disjoint split
  int is_samples_per_class = 20;
  int is_splits = 1;  // >1 averages the score over disjoint sample chunks
  int threads = 0;

  void validate() const;

  std::map<std::string, std::string> to_key_values() const;
  void set(const std::string& key, const std::string& value);
  uint64_t digest() const;
  std::string digest_hex() const;
};

TrainConfig load_config_file(const std::string& path);
void save_config_file(const TrainConfig& cfg, const std::string& path);

// "16,32,64" <-> {16,32,64}
std::vector<int> parse_int_list(const std::string& s);
std::string format_int_list(const std::vector<int>& v);

}  // namespace t2i::train
