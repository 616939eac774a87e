// SPDX-License-Identifier: Apache-2.0
#include "t2i/train/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace t2i::train {

namespace {

constexpr char kMagic[8] = {'T', '2', 'I', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_string(std::ostream& os, const std::string& s) {
  write_le<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const uint32_t n = read_le<uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

Checkpoint snapshot(nn::ParamStore& store, uint64_t config_digest, uint64_t seed, int epoch,
                    std::vector<std::string> loss_history) {
  Checkpoint c;
  c.config_digest = config_digest;
  c.seed = seed;
  c.epoch = epoch;
  c.loss_history = std::move(loss_history);
  for (nn::Parameter* p : store.all()) c.params.emplace_back(p->name, p->value);
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
  os.write(kMagic, 8);
  write_le<uint32_t>(os, 1);  // version
  write_le<uint64_t>(os, ckpt.config_digest);
  write_le<uint64_t>(os, ckpt.seed);
  write_le<uint32_t>(os, static_cast<uint32_t>(ckpt.epoch));
  write_le<uint32_t>(os, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& [name, tensor] : ckpt.params) {
    write_string(os, name);
    write_le<uint32_t>(os, static_cast<uint32_t>(tensor.rank()));
    for (int d = 0; d < tensor.rank(); ++d) write_le<uint64_t>(os, static_cast<uint64_t>(tensor.dim(d)));
    for (int64_t i = 0; i < tensor.size(); ++i) {
      const double v = tensor[i];
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      write_le<uint64_t>(os, bits);
    }
  }
  write_le<uint32_t>(os, static_cast<uint32_t>(ckpt.loss_history.size()));
  for (const auto& row : ckpt.loss_history) write_string(os, row);
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const uint32_t version = read_le<uint32_t>(is);
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version in " + path);
  Checkpoint c;
  c.config_digest = read_le<uint64_t>(is);
  c.seed = read_le<uint64_t>(is);
  c.epoch = static_cast<int>(read_le<uint32_t>(is));
  const uint32_t n_params = read_le<uint32_t>(is);
  for (uint32_t k = 0; k < n_params; ++k) {
    std::string name = read_string(is);
    const uint32_t rank = read_le<uint32_t>(is);
    std::vector<int> shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(read_le<uint64_t>(is));
    Tensor tensor(shape);
    for (int64_t i = 0; i < tensor.size(); ++i) {
      const uint64_t bits = read_le<uint64_t>(is);
      std::memcpy(&tensor[i], &bits, sizeof(bits));
    }
    c.params.emplace_back(std::move(name), std::move(tensor));
  }
  const uint32_t n_rows = read_le<uint32_t>(is);
  for (uint32_t k = 0; k < n_rows; ++k) c.loss_history.push_back(read_string(is));
  if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
  return c;
}

void restore_params(const Checkpoint& ckpt, nn::ParamStore& store, uint64_t expected_digest,
                    bool allow_digest_mismatch, bool allow_extra) {
  if (!allow_digest_mismatch && ckpt.config_digest != expected_digest)
    throw std::runtime_error("checkpoint: config digest mismatch (use the override to force)");
  for (const auto& [name, tensor] : ckpt.params) {
    if (!store.has(name)) {
      if (allow_extra) continue;
      throw std::runtime_error("checkpoint: store has no parameter '" + name + "'");
    }
    nn::Parameter& p = store.get(name);
    if (!p.value.same_shape(tensor))
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    p.value = tensor;
  }
}

}  // namespace t2i::train
