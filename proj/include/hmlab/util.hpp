#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hmlab {

/// Default seed for every pseudo-random choice in the project.
inline constexpr std::uint64_t kDefaultSeed = 987654321u;

/// Round-trip-exact decimal rendering (17 significant digits).
std::string fmt17(double v);

/// Least-squares slope of log(err) vs log(s); err values are clamped away
/// from zero so exact-to-rounding entries do not produce -inf.
double loglog_slope(std::span<const double> spacings, std::span<const double> errors);

/// Refinement pass rule: fitted slope >= 1.9, or the residual is already at
/// the rounding floor (< 1e-11) on the coarsest grid.
bool refinement_pass(std::span<const double> spacings, std::span<const double> errors,
                     double min_slope = 1.9, double floor_escape = 1e-11);

/// Write a whole file atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace hmlab
