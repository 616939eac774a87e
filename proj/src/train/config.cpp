// SPDX-License-Identifier: Apache-2.0
#include "t2i/train/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace t2i::train {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::runtime_error("config: bad boolean value '" + v + "'");
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

void TrainConfig::validate() const {
  if (mode != "attngan_baseline" && mode != "cyclegan_bert")
    throw std::runtime_error("config: unknown mode '" + mode + "'");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
    throw std::runtime_error("config: beta1/beta2 must lie in (0, 1)");
  if (resolutions.empty()) throw std::runtime_error("config: resolutions empty");
  for (size_t i = 1; i < resolutions.size(); ++i)
    if (resolutions[i] != 2 * resolutions[i - 1])
      throw std::runtime_error("config: resolutions must double per level");
  if (checkpoint_every < 1) throw std::runtime_error("config: checkpoint_every must be >= 1");
  if (batch_size < 2) throw std::runtime_error("config: batch_size must be >= 2");
  if (gamma_region <= 0 || gamma_score <= 0 || gamma_batch <= 0)
    throw std::runtime_error("config: gammas must be positive");
  if (lambda < 0) throw std::runtime_error("config: lambda must be >= 0");
  if (d_text % 2 != 0) throw std::runtime_error("config: d_text must be even");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::runtime_error("config: train_fraction must be in (0, 1)");
  if (provider != "learned" && provider != "standin" && provider.rfind("file:", 0) != 0)
    throw std::runtime_error("config: provider must be learned, standin, or file:<path>");
}

std::map<std::string, std::string> TrainConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["mode"] = mode;
  kv["seed"] = std::to_string(seed);
  kv["dataset_dir"] = dataset_dir;
  kv["provider"] = provider;
  kv["resolutions"] = format_int_list(resolutions);
  kv["t_max"] = std::to_string(t_max);
  kv["min_freq"] = std::to_string(min_freq);
  kv["batch_size"] = std::to_string(batch_size);
  kv["crop_min_ratio"] = fmt_double(crop_min_ratio);
  kv["d_provider"] = std::to_string(d_provider);
  kv["d_text"] = std::to_string(d_text);
  kv["d_cond"] = std::to_string(d_cond);
  kv["d_z"] = std::to_string(d_z);
  kv["d_common"] = std::to_string(d_common);
  kv["gen_base_channels"] = std::to_string(gen_base_channels);
  kv["disc_base_channels"] = std::to_string(disc_base_channels);
  kv["damsm_base_channels"] = std::to_string(damsm_base_channels);
  kv["damsm_region_edge"] = std::to_string(damsm_region_edge);
  kv["stream_base_channels"] = std::to_string(stream_base_channels);
  kv["stream_hidden"] = std::to_string(stream_hidden);
  kv["stream_embed"] = std::to_string(stream_embed);
  kv["res_blocks"] = std::to_string(res_blocks);
  kv["mean_pool_sentence"] = mean_pool_sentence ? "1" : "0";
  kv["bypass_rnn"] = bypass_rnn ? "1" : "0";
  kv["share_stream_encoder"] = share_stream_encoder ? "1" : "0";
  kv["gamma_region"] = fmt_double(gamma_region);
  kv["gamma_score"] = fmt_double(gamma_score);
  kv["gamma_batch"] = fmt_double(gamma_batch);
  kv["lambda"] = fmt_double(lambda);
  kv["ca_kl_weight"] = fmt_double(ca_kl_weight);
  kv["lr"] = fmt_double(lr);
  kv["beta1"] = fmt_double(beta1);
  kv["beta2"] = fmt_double(beta2);
  kv["damsm_lr"] = fmt_double(damsm_lr);
  kv["stream_lr"] = fmt_double(stream_lr);
  kv["stream_finetune"] = stream_finetune ? "1" : "0";
  kv["stream_finetune_lr"] = fmt_double(stream_finetune_lr);
  kv["epochs"] = std::to_string(epochs);
  kv["damsm_epochs"] = std::to_string(damsm_epochs);
  kv["stream_epochs"] = std::to_string(stream_epochs);
  kv["checkpoint_every"] = std::to_string(checkpoint_every);
  kv["train_fraction"] = fmt_double(train_fraction);
  kv["is_samples_per_class"] = std::to_string(is_samples_per_class);
  kv["is_splits"] = std::to_string(is_splits);
  kv["threads"] = std::to_string(threads);
  return kv;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "mode") mode = value;
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "dataset_dir") dataset_dir = value;
  else if (key == "provider") provider = value;
  else if (key == "resolutions") resolutions = parse_int_list(value);
  else if (key == "t_max") t_max = std::stoi(value);
  else if (key == "min_freq") min_freq = std::stoi(value);
  else if (key == "batch_size") batch_size = std::stoi(value);
  else if (key == "crop_min_ratio") crop_min_ratio = std::stod(value);
  else if (key == "d_provider") d_provider = std::stoi(value);
  else if (key == "d_text") d_text = std::stoi(value);
  else if (key == "d_cond") d_cond = std::stoi(value);
  else if (key == "d_z") d_z = std::stoi(value);
  else if (key == "d_common") d_common = std::stoi(value);
  else if (key == "gen_base_channels") gen_base_channels = std::stoi(value);
  else if (key == "disc_base_channels") disc_base_channels = std::stoi(value);
  else if (key == "damsm_base_channels") damsm_base_channels = std::stoi(value);
  else if (key == "damsm_region_edge") damsm_region_edge = std::stoi(value);
  else if (key == "stream_base_channels") stream_base_channels = std::stoi(value);
  else if (key == "stream_hidden") stream_hidden = std::stoi(value);
  else if (key == "stream_embed") stream_embed = std::stoi(value);
  else if (key == "res_blocks") res_blocks = std::stoi(value);
  else if (key == "mean_pool_sentence") mean_pool_sentence = parse_bool(value);
  else if (key == "bypass_rnn") bypass_rnn = parse_bool(value);
  else if (key == "share_stream_encoder") share_stream_encoder = parse_bool(value);
  else if (key == "gamma_region") gamma_region = std::stod(value);
  else if (key == "gamma_score") gamma_score = std::stod(value);
  else if (key == "gamma_batch") gamma_batch = std::stod(value);
  else if (key == "lambda") lambda = std::stod(value);
  else if (key == "ca_kl_weight") ca_kl_weight = std::stod(value);
  else if (key == "lr") lr = std::stod(value);
  else if (key == "beta1") beta1 = std::stod(value);
  else if (key == "beta2") beta2 = std::stod(value);
  else if (key == "damsm_lr") damsm_lr = std::stod(value);
  else if (key == "stream_lr") stream_lr = std::stod(value);
  else if (key == "stream_finetune") stream_finetune = parse_bool(value);
  else if (key == "stream_finetune_lr") stream_finetune_lr = std::stod(value);
  else if (key == "epochs") epochs = std::stoi(value);
  else if (key == "damsm_epochs") damsm_epochs = std::stoi(value);
  else if (key == "stream_epochs") stream_epochs = std::stoi(value);
  else if (key == "checkpoint_every") checkpoint_every = std::stoi(value);
  else if (key == "train_fraction") train_fraction = std::stod(value);
  else if (key == "is_samples_per_class") is_samples_per_class = std::stoi(value);
  else if (key == "is_splits") is_splits = std::stoi(value);
  else if (key == "threads") threads = std::stoi(value);
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

uint64_t TrainConfig::digest() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto absorb = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : to_key_values()) {
    absorb(k);
    absorb("=");
    absorb(v);
    absorb("\n");
  }
  return h;
}

std::string TrainConfig::digest_hex() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest()));
  return buf;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
      line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line = line.substr(start);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(line_no) + " is not key=value in " + path);
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void save_config_file(const TrainConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  for (const auto& [k, v] : cfg.to_key_values()) out << k << "=" << v << "\n";
}

}  // namespace t2i::train
