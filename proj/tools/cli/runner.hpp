#pragma once

#include <iosfwd>

#include "manifest.hpp"

namespace bperc::cli {

enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitInsufficient = 2, kExitUsage = 64 };

/// Runs the experiment and writes its outputs under m.out. Throws UsageError
/// when a parameter turns out to be outside an operation's domain; nothing
/// is written in that case.
int run(const Manifest& m, std::ostream& log);

}  // namespace bperc::cli
