#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "hmlab/calculus.hpp"
#include "hmlab/util.hpp"

using namespace hmlab;

namespace {

ComplexField sample_fn(const Grid& g, const std::function<Complex(Complex)>& f) {
  ComplexField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i, j) = f(g.node(i, j));
  return out;
}

RealField sample_real(const Grid& g, const std::function<double(Complex)>& f) {
  RealField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i, j) = f(g.node(i, j));
  return out;
}

double max_err_vs(const ComplexField& got, const std::function<Complex(Complex)>& expect) {
  double m = 0.0;
  const Grid& g = got.grid();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (got.valid(i, j)) m = std::max(m, std::abs(got.at(i, j) - expect(g.node(i, j))));
  return m;
}

double max_err_vs(const RealField& got, const std::function<double(Complex)>& expect) {
  double m = 0.0;
  const Grid& g = got.grid();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (got.valid(i, j)) m = std::max(m, std::abs(got.at(i, j) - expect(g.node(i, j))));
  return m;
}

const Grid kGrid(0.5, 0.5, 17, 21, 1.0 / 16.0);

}  // namespace

TEST_CASE("grid invariants") {
  CHECK_THROWS_AS(Grid(0, 0, 4, 10, 0.1), Error);
  CHECK_THROWS_AS(Grid(0, 0, 10, 4, 0.1), Error);
  CHECK_THROWS_AS(Grid(0, 0, 10, 10, 0.0), Error);
  CHECK_THROWS_AS(Grid(0, 0, 10, 10, -1.0), Error);
  Grid g(1.0, -2.0, 7, 5, 0.25);
  CHECK(g.node(0, 0) == Complex(1.0, -2.0));
  CHECK(g.node(2, 3) == Complex(1.5, -1.25));
}

TEST_CASE("wirtinger_dz examples") {
  auto fz = sample_fn(kGrid, [](Complex z) { return z; });
  CHECK(max_err_vs(wirtinger_dz(fz), [](Complex) { return Complex(1, 0); }) == 0.0);
  auto fzb = sample_fn(kGrid, [](Complex z) { return std::conj(z); });
  CHECK(max_err_vs(wirtinger_dz(fzb), [](Complex) { return Complex(0, 0); }) == 0.0);
  auto fq = sample_fn(kGrid, [](Complex z) { return z * z; });
  CHECK(max_err_vs(wirtinger_dz(fq), [](Complex z) { return 2.0 * z; }) < 1e-13);
}

TEST_CASE("wirtinger_dzbar examples") {
  auto fzb = sample_fn(kGrid, [](Complex z) { return std::conj(z); });
  CHECK(max_err_vs(wirtinger_dzbar(fzb), [](Complex) { return Complex(1, 0); }) == 0.0);
  auto fz = sample_fn(kGrid, [](Complex z) { return z; });
  CHECK(max_err_vs(wirtinger_dzbar(fz), [](Complex) { return Complex(0, 0); }) == 0.0);
  auto f = sample_fn(kGrid, [](Complex z) { return z * z + 0.3 * std::conj(z) * std::conj(z); });
  CHECK(max_err_vs(wirtinger_dzbar(f), [](Complex z) { return 0.6 * std::conj(z); }) < 1e-13);
}

TEST_CASE("laplacian examples") {
  auto f = sample_real(kGrid, [](Complex z) { return std::norm(z); });
  CHECK(max_err_vs(laplacian(f), [](Complex) { return 4.0; }) < 1e-11);
  auto c = sample_real(kGrid, [](Complex) { return 3.25; });
  CHECK(max_err_vs(laplacian(c), [](Complex) { return 0.0; }) == 0.0);
  // log|z| is harmonic away from the origin; the grid stays away from it.
  auto lg = sample_real(kGrid, [](Complex z) { return std::log(std::abs(z)); });
  CHECK(max_err_vs(laplacian(lg), [](Complex) { return 0.0; }) < 0.05);
}

TEST_CASE("grad_norm_sq examples and route consistency") {
  auto fx = sample_real(kGrid, [](Complex z) { return z.real(); });
  CHECK(max_err_vs(grad_norm_sq(fx), [](Complex) { return 1.0; }) == 0.0);
  auto fq = sample_real(kGrid, [](Complex z) { return std::norm(z); });
  CHECK(max_err_vs(grad_norm_sq(fq), [](Complex z) { return 4.0 * std::norm(z); }) < 1e-12);
  auto c = sample_real(kGrid, [](Complex) { return 2.0; });
  CHECK(max_err_vs(grad_norm_sq(c), [](Complex) { return 0.0; }) == 0.0);

  // 4|R_z|^2 agrees with the direct R_x^2 + R_y^2 stencil route.
  auto smooth =
      sample_real(kGrid, [](Complex z) { return std::exp(z.real()) * std::sin(2 * z.imag()); });
  RealField via_wirtinger = grad_norm_sq(smooth);
  const double inv2s = 1.0 / (2.0 * kGrid.s);
  double worst = 0.0;
  for (int j = 1; j < kGrid.ny - 1; ++j)
    for (int i = 1; i < kGrid.nx - 1; ++i) {
      const double rx = (smooth.at(i + 1, j) - smooth.at(i - 1, j)) * inv2s;
      const double ry = (smooth.at(i, j + 1) - smooth.at(i, j - 1)) * inv2s;
      const double direct = rx * rx + ry * ry;
      worst = std::max(worst,
                       std::abs(via_wirtinger.at(i, j) - direct) / std::max(1.0, std::abs(direct)));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("second_derivatives examples") {
  auto fq = sample_fn(kGrid, [](Complex z) { return z * z; });
  SecondDerivatives d = second_derivatives(fq);
  CHECK(max_err_vs(d.zz, [](Complex) { return Complex(2, 0); }) < 1e-11);
  CHECK(max_err_vs(d.zzbar, [](Complex) { return Complex(0, 0); }) < 1e-11);
  CHECK(max_err_vs(d.zbarzbar, [](Complex) { return Complex(0, 0); }) < 1e-11);

  auto fm = sample_fn(kGrid, [](Complex z) { return z * std::conj(z); });
  CHECK(max_err_vs(second_derivatives(fm).zzbar, [](Complex) { return Complex(1, 0); }) < 1e-11);

  auto fa = sample_fn(kGrid, [](Complex z) { return 2.0 * z + Complex(0, 1); });
  SecondDerivatives da = second_derivatives(fa);
  CHECK(max_err_vs(da.zz, [](Complex) { return Complex(0, 0); }) == 0.0);
  CHECK(max_err_vs(da.zbarzbar, [](Complex) { return Complex(0, 0); }) == 0.0);
}

TEST_CASE("log_laplacian_crosscheck examples") {
  auto fe = sample_real(kGrid, [](Complex z) { return std::exp(z.real()); });
  CHECK(max_err_vs(log_laplacian_crosscheck(fe), [](Complex) { return 0.0; }) < 1e-3);
  auto c = sample_real(kGrid, [](Complex) { return 5.0; });
  CHECK(max_err_vs(log_laplacian_crosscheck(c), [](Complex) { return 0.0; }) == 0.0);
  auto q = sample_real(kGrid, [](Complex z) { return std::norm(z); });
  CHECK(max_err_vs(log_laplacian_crosscheck(q), [](Complex) { return 0.0; }) < 0.05);
  auto neg = sample_real(kGrid, [](Complex) { return -1.0; });
  CHECK_THROWS_AS(log_laplacian_crosscheck(neg), FieldNotPositiveError);
}

TEST_CASE("derivative operations exact on random degree-2 polynomials") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    double a[6], b[6];
    for (auto& v : a) v = coef(rng);
    for (auto& v : b) v = coef(rng);
    auto poly = [](const double* c, double x, double y) {
      return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
    };
    auto f = sample_fn(kGrid, [&](Complex z) {
      return Complex(poly(a, z.real(), z.imag()), poly(b, z.real(), z.imag()));
    });
    auto dx = [](const double* c, double x, double y) { return c[1] + 2 * c[3] * x + c[4] * y; };
    auto dy = [](const double* c, double x, double y) { return c[2] + c[4] * x + 2 * c[5] * y; };
    CHECK(max_err_vs(wirtinger_dz(f), [&](Complex z) {
            const double x = z.real(), y = z.imag();
            const Complex fx(dx(a, x, y), dx(b, x, y));
            const Complex fy(dy(a, x, y), dy(b, x, y));
            return 0.5 * (fx - Complex(0, 1) * fy);
          }) < 1e-13);
    CHECK(max_err_vs(laplacian(f), [&](Complex) {
            return Complex(2 * a[3] + 2 * a[5], 2 * b[3] + 2 * b[5]);
          }) < 1e-11);
    SecondDerivatives d = second_derivatives(f);
    CHECK(max_err_vs(d.zzbar, [&](Complex) {
            return 0.25 * Complex(2 * a[3] + 2 * a[5], 2 * b[3] + 2 * b[5]);
          }) < 1e-11);
  }
}

TEST_CASE("mask algebra: erosion by the stencil radius, no masked reads") {
  std::mt19937_64 rng(4321);
  std::bernoulli_distribution keep(0.97);
  Grid g(0, 0, 24, 21, 0.125);
  ComplexField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      f.at(i, j) = Complex(i * 0.1, j * 0.2);
      f.set_valid(i, j, keep(rng));
    }

  CHECK(wirtinger_dz(f).mask() == erode_mask(g, f.mask(), 1));
  CHECK(laplacian(f).mask() == erode_mask(g, f.mask(), 1));
  SecondDerivatives d2 = second_derivatives(f);
  CHECK(d2.zz.mask() == erode_mask(g, f.mask(), 2));
  CHECK(d2.zzbar.mask() == erode_mask(g, f.mask(), 2));

  // Poison invalid nodes: valid outputs must stay finite.
  ComplexField poisoned = f;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!poisoned.valid(i, j)) poisoned.at(i, j) = Complex(NAN, NAN);
  CHECK(wirtinger_dz(poisoned).finite_on_mask());
  CHECK(laplacian(poisoned).finite_on_mask());
  CHECK(second_derivatives(poisoned).zz.finite_on_mask());
}

TEST_CASE("empty interior raises") {
  Grid g(0, 0, 5, 5, 0.5);
  ComplexField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f.set_valid(i, j, i == 0);
  CHECK_THROWS_AS(wirtinger_dz(f), EmptyInteriorError);
  ComplexField full(g);  // 5x5: second derivatives leave exactly one node
  CHECK(second_derivatives(full).zz.valid_count() == 1);
}

TEST_CASE("refinement order >= 1.9 for every derivative operation") {
  const Complex a(0.7, 0.0), bc(0.9, 0.0);
  auto h = [&](Complex z) { return std::exp(a * z) + 0.4 * std::conj(std::exp(bc * z)); };
  auto hz = [&](Complex z) { return a * std::exp(a * z); };
  auto hzb = [&](Complex z) { return 0.4 * std::conj(bc * std::exp(bc * z)); };
  auto hzz = [&](Complex z) { return a * a * std::exp(a * z); };
  auto hzbzb = [&](Complex z) { return 0.4 * std::conj(bc * bc * std::exp(bc * z)); };

  std::vector<double> spacings = {1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<double> e_dz, e_dzb, e_lap, e_zz, e_zbzb, e_grad, e_logx;
  for (double s : spacings) {
    const int n = static_cast<int>(std::lround(1.0 / s)) + 1;
    Grid g(0.25, 0.25, n, n, s);
    auto f = sample_fn(g, h);
    e_dz.push_back(max_err_vs(wirtinger_dz(f), hz));
    e_dzb.push_back(max_err_vs(wirtinger_dzbar(f), hzb));
    SecondDerivatives d = second_derivatives(f);
    e_zz.push_back(max_err_vs(d.zz, hzz));
    e_zbzb.push_back(max_err_vs(d.zbarzbar, hzbzb));

    auto r = sample_real(g, [](Complex z) { return std::exp(z.real()) * std::sin(2 * z.imag()); });
    e_lap.push_back(max_err_vs(laplacian(r), [](Complex z) {
      return -3.0 * std::exp(z.real()) * std::sin(2 * z.imag());
    }));
    auto rg =
        sample_real(g, [](Complex z) { return std::exp(z.real()) * std::sin(2 * z.imag()) + 3.0; });
    e_grad.push_back(max_err_vs(grad_norm_sq(rg), [](Complex z) {
      const double ex = std::exp(z.real());
      const double rx = ex * std::sin(2 * z.imag());
      const double ry = 2.0 * ex * std::cos(2 * z.imag());
      return rx * rx + ry * ry;
    }));
    auto rpos = sample_real(g, [](Complex z) { return std::exp(std::norm(z)); });
    e_logx.push_back(max_err_vs(log_laplacian_crosscheck(rpos), [](Complex) { return 4.0; }));
  }
  for (auto* errs : {&e_dz, &e_dzb, &e_lap, &e_zz, &e_zbzb, &e_grad, &e_logx})
    CHECK(loglog_slope(spacings, *errs) >= 1.9);
}
