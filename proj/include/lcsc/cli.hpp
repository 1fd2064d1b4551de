// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: `compile`, `inspect` and `validate`.
//
// Exit codes: 0 success, 1 a sample or file failed, 2 usage or configuration error.

#pragma once

#include <ostream>

namespace lcsc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lcsc
