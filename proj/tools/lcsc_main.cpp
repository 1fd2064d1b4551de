// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "lcsc/cli.hpp"

int main(int argc, char** argv) { return lcsc::run_cli(argc, argv, std::cout, std::cerr); }
