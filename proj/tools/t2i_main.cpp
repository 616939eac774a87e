// SPDX-License-Identifier: Apache-2.0
#include "t2i/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return t2i::cli_main(args);
}
