// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "partialformer/cli.hpp"

int main(int argc, char** argv) {
  return pf::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
