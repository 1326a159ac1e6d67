#pragma once

namespace hmlab::cli {

/// Full `hmlab` command-line entry point. Exit codes: 0 pass/converged,
/// 1 check failure, 2 solver divergence, 3 usage or spec error.
int run(int argc, const char* const* argv);

}  // namespace hmlab::cli
