#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rmfac {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitDiverged = 2;

/// Entry point of the mfac-sim tool. Subcommands:
///   run      --config F [--seed N] [--variant proposed|baseline] [--out DIR] [--charts]
///   validate --config F
///   plot     --trace FILE --out DIR
///   compare  --config F [--seed N] [--out DIR]
///   batch    --config F --seeds A..B [--variant V] [--out DIR]
/// Data goes to files; diagnostics go to `err`; a one-line status goes to
/// `out`. Returns 0 on success, 1 on invalid input and 2 when the run ended
/// in a divergence fault.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rmfac
