#include "hmlab/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hmlab/errors.hpp"

namespace hmlab {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double loglog_slope(std::span<const double> spacings, std::span<const double> errors) {
  if (spacings.size() != errors.size() || spacings.size() < 2)
    throw Error("loglog_slope: need matching lists with >= 2 entries");
  const std::size_t n = spacings.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = std::log(spacings[k]);
    ys[k] = std::log(std::max(errors[k], 1e-300));
  }
  double xm = 0, ym = 0;
  for (std::size_t k = 0; k < n; ++k) {
    xm += xs[k];
    ym += ys[k];
  }
  xm /= n;
  ym /= n;
  double num = 0, den = 0;
  for (std::size_t k = 0; k < n; ++k) {
    num += (xs[k] - xm) * (ys[k] - ym);
    den += (xs[k] - xm) * (xs[k] - xm);
  }
  return num / den;
}

bool refinement_pass(std::span<const double> spacings, std::span<const double> errors,
                     double min_slope, double floor_escape) {
  double coarsest_s = 0.0, coarsest_err = 0.0;
  for (std::size_t k = 0; k < spacings.size(); ++k) {
    if (spacings[k] > coarsest_s) {
      coarsest_s = spacings[k];
      coarsest_err = errors[k];
    }
  }
  if (coarsest_err < floor_escape) return true;
  return loglog_slope(spacings, errors) >= min_slope;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write_file_atomic: cannot open " + tmp.string());
    out << contents;
    if (!out) throw Error("write_file_atomic: short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace hmlab
