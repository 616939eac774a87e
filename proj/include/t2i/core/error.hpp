// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace t2i {

// Raised when a loss turns NaN/Inf mid-training. The CLI maps it to exit code 2.
struct NumericalAbort : std::runtime_error {
  explicit NumericalAbort(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace t2i
