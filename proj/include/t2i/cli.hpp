// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace t2i {

// Full command-line entry point. Exit codes: 0 success, 1 usage error,
// 2 numerical abort.
int cli_main(const std::vector<std::string>& args);

}  // namespace t2i
