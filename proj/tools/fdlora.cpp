// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "fdlora/harness/cli.hpp"

int main(int argc, char** argv) { return fdlora::cli_main(argc, argv, std::cout, std::cerr); }
