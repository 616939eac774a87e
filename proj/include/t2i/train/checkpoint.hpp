// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "t2i/nn/params.hpp"

namespace t2i::train {

// Named parameter arrays plus run metadata. Save/load round-trips every value
// bit-exactly (doubles are stored as little-endian IEEE-754 bit patterns).
struct Checkpoint {
  uint64_t config_digest = 0;
  uint64_t seed = 0;
  int epoch = 0;
  std::vector<std::pair<std::string, Tensor>> params;  // sorted by name
  std::vector<std::string> loss_history;               // metrics CSV rows
};

Checkpoint snapshot(nn::ParamStore& store, uint64_t config_digest, uint64_t seed, int epoch,
                    std::vector<std::string> loss_history);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint arrays into existing parameters (shape-checked). Refuses a
// digest mismatch unless allow_digest_mismatch. Parameters absent from the
// store raise unless allow_extra.
void restore_params(const Checkpoint& ckpt, nn::ParamStore& store, uint64_t expected_digest,
                    bool allow_digest_mismatch = false, bool allow_extra = false);

}  // namespace t2i::train
