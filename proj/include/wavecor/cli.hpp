#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wavecor/config.hpp"

WAVECOR_BEGIN_NAMESPACE

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `wavecor` command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Thread count from WAVECOR_THREADS, or `fallback` when unset.
int threads_from_env(int fallback);

WAVECOR_END_NAMESPACE
