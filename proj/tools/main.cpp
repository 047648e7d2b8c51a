// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "rigidock/cli.hpp"

int main(int argc, char **argv) {
  return rigidock::run_cli(argc, argv, std::cout, std::cerr);
}
