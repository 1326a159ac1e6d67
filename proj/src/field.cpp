#include "hmlab/field.hpp"

#include <algorithm>

namespace hmlab {

Mask erode_mask(const Grid& grid, const Mask& mask, int radius) {
  if (mask.size() != grid.size()) throw Error("erode_mask: mask size mismatch");
  if (radius <= 0) return mask;
  Mask out(grid.size(), 0);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (i < radius || j < radius || i >= grid.nx - radius || j >= grid.ny - radius) continue;
      bool ok = true;
      for (int dj = -radius; dj <= radius && ok; ++dj)
        for (int di = -radius; di <= radius && ok; ++di)
          if (!mask[grid.index(i + di, j + dj)]) ok = false;
      if (ok) out[grid.index(i, j)] = 1;
    }
  }
  return out;
}

double max_abs_diff(const RealField& a, const RealField& b) {
  if (a.grid() != b.grid()) throw Error("max_abs_diff: grid mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    if (a.mask()[k] && b.mask()[k]) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

double max_abs_diff(const ComplexField& a, const ComplexField& b) {
  if (a.grid() != b.grid()) throw Error("max_abs_diff: grid mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    if (a.mask()[k] && b.mask()[k]) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

double max_abs(const RealField& f) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.values().size(); ++k)
    if (f.mask()[k]) m = std::max(m, std::abs(f.values()[k]));
  return m;
}

double max_abs(const ComplexField& f) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.values().size(); ++k)
    if (f.mask()[k]) m = std::max(m, std::abs(f.values()[k]));
  return m;
}

}  // namespace hmlab
