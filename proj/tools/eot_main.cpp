// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "eot/cli.hpp"

int main(int argc, char** argv) { return eot::cli::run(argc, argv, std::cout, std::cerr); }
