// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace fdlora {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunError = 1;
inline constexpr int kExitUsage = 2;

/// Subcommands run, sweep, partition, evaluate and fuse. Returns 0 on
/// success, 1 when a run fails, 2 for bad flags or an invalid config.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fdlora
