// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "heal/cli.hpp"

int main(int argc, char** argv) { return heal::run_cli(argc, argv, std::cout, std::cerr); }
