#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hmlab/errors.hpp"

namespace hmlab {

using Complex = std::complex<double>;
using Mask = std::vector<std::uint8_t>;

/// Uniform rectangular sampling lattice. Node (i, j) sits at
/// (x0 + i*s, y0 + j*s) with the same spacing s in both axes.
struct Grid {
  double x0 = 0.0;
  double y0 = 0.0;
  int nx = 0;
  int ny = 0;
  double s = 1.0;

  Grid() = default;
  Grid(double x0_, double y0_, int nx_, int ny_, double s_)
      : x0(x0_), y0(y0_), nx(nx_), ny(ny_), s(s_) {
    if (nx < 5 || ny < 5) throw Error("Grid: nx and ny must be >= 5");
    if (!(s > 0.0) || !std::isfinite(s)) throw Error("Grid: spacing must be positive and finite");
    if (!std::isfinite(x0) || !std::isfinite(y0)) throw Error("Grid: origin must be finite");
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  bool contains(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
  double x(int i) const { return x0 + i * s; }
  double y(int j) const { return y0 + j * s; }
  Complex node(int i, int j) const { return {x(i), y(j)}; }

  bool operator==(const Grid& o) const {
    return x0 == o.x0 && y0 == o.y0 && nx == o.nx && ny == o.ny && s == o.s;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Erode a mask with a Chebyshev ball of the given radius: a node survives
/// only if every node within `radius` rings (including diagonals) is valid.
Mask erode_mask(const Grid& grid, const Mask& mask, int radius);

/// Grid-sampled function with a per-node validity mask. Values at invalid
/// nodes are kept but carry no meaning.
template <typename T>
class Field {
 public:
  Field() = default;  // empty placeholder; no valid nodes

  explicit Field(const Grid& grid, T fill = T{}, bool valid = true)
      : grid_(grid), values_(grid.size(), fill), mask_(grid.size(), valid ? 1 : 0) {}

  Field(const Grid& grid, std::vector<T> values, Mask mask)
      : grid_(grid), values_(std::move(values)), mask_(std::move(mask)) {
    if (values_.size() != grid_.size() || mask_.size() != grid_.size())
      throw Error("Field: value/mask dimensions disagree with the grid");
  }

  const Grid& grid() const { return grid_; }
  int nx() const { return grid_.nx; }
  int ny() const { return grid_.ny; }
  double spacing() const { return grid_.s; }

  const T& at(int i, int j) const { return values_[grid_.index(i, j)]; }
  T& at(int i, int j) { return values_[grid_.index(i, j)]; }
  bool valid(int i, int j) const { return mask_[grid_.index(i, j)] != 0; }
  void set_valid(int i, int j, bool v) { mask_[grid_.index(i, j)] = v ? 1 : 0; }

  const std::vector<T>& values() const { return values_; }
  std::vector<T>& values() { return values_; }
  const Mask& mask() const { return mask_; }
  Mask& mask() { return mask_; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto m : mask_) n += m;
    return n;
  }

  void require_valid(const std::string& what) const {
    if (valid_count() == 0) throw EmptyInteriorError(what + ": empty interior (no valid nodes)");
  }

  /// True when valid values are all finite (complex: both parts).
  bool finite_on_mask() const {
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!mask_[k]) continue;
      if constexpr (std::is_same_v<T, Complex>) {
        if (!std::isfinite(values_[k].real()) || !std::isfinite(values_[k].imag())) return false;
      } else {
        if (!std::isfinite(values_[k])) return false;
      }
    }
    return true;
  }

 private:
  Grid grid_;
  std::vector<T> values_;
  Mask mask_;
};

using ComplexField = Field<Complex>;
using RealField = Field<double>;

/// Apply fn to every valid node of a; invalid nodes keep R{}.
template <typename R, typename A, typename F>
Field<R> transform(const Field<A>& a, F&& fn) {
  Field<R> out(a.grid(), R{}, false);
  out.mask() = a.mask();
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t k = 0; k < av.size(); ++k)
    if (a.mask()[k]) ov[k] = fn(av[k]);
  return out;
}

/// Combine two same-grid fields nodewise; output mask is the intersection.
template <typename R, typename A, typename B, typename F>
Field<R> combine(const Field<A>& a, const Field<B>& b, F&& fn) {
  if (a.grid() != b.grid()) throw Error("combine: fields live on different grids");
  Field<R> out(a.grid(), R{}, false);
  auto& ov = out.values();
  for (std::size_t k = 0; k < ov.size(); ++k) {
    if (a.mask()[k] && b.mask()[k]) {
      out.mask()[k] = 1;
      ov[k] = fn(a.values()[k], b.values()[k]);
    }
  }
  return out;
}

/// Maximum |a - b| over jointly valid nodes (0 when none).
double max_abs_diff(const RealField& a, const RealField& b);
double max_abs_diff(const ComplexField& a, const ComplexField& b);

/// Maximum |value| over valid nodes (0 when none).
double max_abs(const RealField& f);
double max_abs(const ComplexField& f);

}  // namespace hmlab
