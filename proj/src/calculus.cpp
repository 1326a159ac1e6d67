#include "hmlab/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace hmlab {

namespace {

constexpr Complex kI{0.0, 1.0};

template <typename T>
Mask eroded_or_throw(const Field<T>& f, int radius, const char* what) {
  Mask m = erode_mask(f.grid(), f.mask(), radius);
  bool any = std::any_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; });
  if (!any) throw EmptyInteriorError(std::string(what) + ": empty interior after mask erosion");
  return m;
}

// (f_x - i*f_y)/2 and (f_x + i*f_y)/2 by central differences.
template <typename T>
ComplexField wirtinger_impl(const Field<T>& f, double ybar_sign, const char* what) {
  Mask m = eroded_or_throw(f, 1, what);
  ComplexField out(f.grid(), Complex{}, false);
  out.mask() = std::move(m);
  const double inv2s = 1.0 / (2.0 * f.spacing());
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      if (!out.valid(i, j)) continue;
      const Complex fx = Complex(f.at(i + 1, j) - f.at(i - 1, j)) * inv2s;
      const Complex fy = Complex(f.at(i, j + 1) - f.at(i, j - 1)) * inv2s;
      out.at(i, j) = 0.5 * (fx + ybar_sign * kI * fy);
    }
  }
  return out;
}

template <typename T>
Field<T> laplacian_impl(const Field<T>& f, const char* what) {
  Mask m = eroded_or_throw(f, 1, what);
  Field<T> out(f.grid(), T{}, false);
  out.mask() = std::move(m);
  const double inv_s2 = 1.0 / (f.spacing() * f.spacing());
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      if (!out.valid(i, j)) continue;
      const T sum = f.at(i + 1, j) + f.at(i - 1, j) + f.at(i, j + 1) + f.at(i, j - 1);
      out.at(i, j) = (sum - 4.0 * f.at(i, j)) * inv_s2;
    }
  }
  return out;
}

}  // namespace

ComplexField wirtinger_dz(const ComplexField& f) { return wirtinger_impl(f, -1.0, "wirtinger_dz"); }
ComplexField wirtinger_dz(const RealField& f) { return wirtinger_impl(f, -1.0, "wirtinger_dz"); }
ComplexField wirtinger_dzbar(const ComplexField& f) {
  return wirtinger_impl(f, +1.0, "wirtinger_dzbar");
}
ComplexField wirtinger_dzbar(const RealField& f) {
  return wirtinger_impl(f, +1.0, "wirtinger_dzbar");
}

ComplexField laplacian(const ComplexField& f) { return laplacian_impl(f, "laplacian"); }
RealField laplacian(const RealField& f) { return laplacian_impl(f, "laplacian"); }

RealField grad_norm_sq(const RealField& R) {
  ComplexField Rz = wirtinger_impl(R, -1.0, "grad_norm_sq");
  return transform<double>(Rz, [](Complex v) { return 4.0 * std::norm(v); });
}

SecondDerivatives second_derivatives(const ComplexField& f) {
  // Direct 9-point stencils; the documented radius is two rings so that the
  // triple shares one mask with composed first-derivative routes.
  Mask m = eroded_or_throw(f, 2, "second_derivatives");
  ComplexField zz(f.grid(), Complex{}, false);
  ComplexField zzbar(f.grid(), Complex{}, false);
  ComplexField zbzb(f.grid(), Complex{}, false);
  zz.mask() = m;
  zzbar.mask() = m;
  zbzb.mask() = std::move(m);
  const double inv_s2 = 1.0 / (f.spacing() * f.spacing());
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      if (!zz.valid(i, j)) continue;
      const Complex fxx = (f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)) * inv_s2;
      const Complex fyy = (f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)) * inv_s2;
      const Complex fxy = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) - f.at(i - 1, j + 1) +
                           f.at(i - 1, j - 1)) *
                          (0.25 * inv_s2);
      zz.at(i, j) = 0.25 * (fxx - fyy) - 0.5 * kI * fxy;
      zzbar.at(i, j) = 0.25 * (fxx + fyy);
      zbzb.at(i, j) = 0.25 * (fxx - fyy) + 0.5 * kI * fxy;
    }
  }
  return {std::move(zz), std::move(zzbar), std::move(zbzb)};
}

RealField log_laplacian_crosscheck(const RealField& R, double positivity_floor_rel) {
  const double floor = positivity_floor_rel * max_abs(R);
  RealField Rpos = R;
  bool any = false;
  for (std::size_t k = 0; k < Rpos.values().size(); ++k) {
    if (Rpos.mask()[k] && Rpos.values()[k] <= floor) Rpos.mask()[k] = 0;
    any = any || Rpos.mask()[k];
  }
  if (!any) throw FieldNotPositiveError("log_laplacian_crosscheck: field not positive");
  RealField lap = laplacian(Rpos);
  RealField g2 = grad_norm_sq(Rpos);
  RealField out(R.grid(), 0.0, false);
  for (int j = 0; j < R.ny(); ++j) {
    for (int i = 0; i < R.nx(); ++i) {
      if (!lap.valid(i, j) || !g2.valid(i, j)) continue;
      const double r = R.at(i, j);
      out.at(i, j) = (r * lap.at(i, j) - g2.at(i, j)) / (r * r);
      out.set_valid(i, j, true);
    }
  }
  out.require_valid("log_laplacian_crosscheck");
  return out;
}

}  // namespace hmlab
