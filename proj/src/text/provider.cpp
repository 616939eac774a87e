// SPDX-License-Identifier: Apache-2.0
#include "t2i/text/provider.hpp"

#include <cstring>
#include <fstream>

namespace t2i::text {

LearnedTableProvider::LearnedTableProvider(nn::ParamStore& store, const std::string& prefix,
                                           int vocab_size, int dim, Rng& rng)
    : dim_(dim) {
  table_ = &store.create(prefix + ".table", {vocab_size, dim});
  nn::init_gaussian(*table_, rng, 0.1);
}

nn::Var LearnedTableProvider::embed(nn::Tape& t, const std::vector<int>& tokens) {
  return t.embed_cols(t.param(*table_), tokens);
}

nn::Var StandinContextualProvider::embed(nn::Tape& t, const std::vector<int>& tokens) {
  const int T = static_cast<int>(tokens.size());
  Tensor out({dim_, T});
  for (int i = 0; i < T; ++i) {
    const uint64_t left = i > 0 ? static_cast<uint64_t>(tokens[static_cast<size_t>(i) - 1]) + 1 : 0;
    const uint64_t right =
        i + 1 < T ? static_cast<uint64_t>(tokens[static_cast<size_t>(i) + 1]) + 1 : 0;
    uint64_t h = splitmix64(seed_ ^ 0x7a3c9e1fULL);
    h = splitmix64(h ^ static_cast<uint64_t>(tokens[static_cast<size_t>(i)]));
    h = splitmix64(h ^ (left << 20));
    h = splitmix64(h ^ (right << 40));
    Rng col(h);
    for (int d = 0; d < dim_; ++d) out.at(d, i) = col.gaussian();
  }
  return t.constant(std::move(out));
}

uint64_t caption_hash(const std::vector<int>& tokens) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (int id : tokens) {
    uint32_t v = static_cast<uint32_t>(id);
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

void write_f64_le(std::ostream& os, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  write_le<uint64_t>(os, bits);
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

double read_f64_le(std::istream& is) {
  const uint64_t bits = read_le<uint64_t>(is);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

constexpr char kMagic[8] = {'T', '2', 'I', 'E', 'M', 'B', '1', '\0'};

}  // namespace

void write_embedding_file(const std::string& path, const std::string& provider_name, int dim,
                          const std::vector<std::pair<uint64_t, Tensor>>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write embedding file: " + path);
  os.write(kMagic, 8);
  write_le<uint32_t>(os, static_cast<uint32_t>(dim));
  write_le<uint32_t>(os, static_cast<uint32_t>(provider_name.size()));
  os.write(provider_name.data(), static_cast<std::streamsize>(provider_name.size()));
  write_le<uint64_t>(os, entries.size());
  for (const auto& [hash, m] : entries) {
    if (m.rank() != 2 || m.dim(0) != dim)
      throw std::runtime_error("embedding file: entry shape must be (dim, T)");
    write_le<uint64_t>(os, hash);
    write_le<uint32_t>(os, static_cast<uint32_t>(m.dim(1)));
    for (int64_t i = 0; i < m.size(); ++i) write_f64_le(os, m[i]);
  }
}

FileBackedProvider::FileBackedProvider(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open embedding file: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("bad embedding file magic: " + path);
  dim_ = static_cast<int>(read_le<uint32_t>(is));
  const uint32_t name_len = read_le<uint32_t>(is);
  name_.resize(name_len);
  is.read(name_.data(), name_len);
  const uint64_t count = read_le<uint64_t>(is);
  for (uint64_t k = 0; k < count; ++k) {
    const uint64_t hash = read_le<uint64_t>(is);
    const uint32_t T = read_le<uint32_t>(is);
    Tensor m({dim_, static_cast<int>(T)});
    for (int64_t i = 0; i < m.size(); ++i) m[i] = read_f64_le(is);
    entries_.emplace(hash, std::move(m));
  }
  if (!is) throw std::runtime_error("truncated embedding file: " + path);
}

nn::Var FileBackedProvider::embed(nn::Tape& t, const std::vector<int>& tokens) {
  auto it = entries_.find(caption_hash(tokens));
  if (it == entries_.end())
    throw std::runtime_error("embedding file has no entry for this caption (hash miss)");
  if (it->second.dim(1) != static_cast<int>(tokens.size()))
    throw std::runtime_error("embedding file entry length mismatch");
  return t.constant(it->second);
}

}  // namespace t2i::text
