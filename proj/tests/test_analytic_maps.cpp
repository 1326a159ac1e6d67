#include <cmath>
#include <random>

#include "doctest.h"
#include "hmlab/analytic_map.hpp"
#include "hmlab/metric.hpp"
#include "hmlab/solver.hpp"
#include "hmlab/util.hpp"

using namespace hmlab;

namespace {

std::vector<Complex> random_points(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::vector<Complex> out;
  for (int k = 0; k < n; ++k) out.emplace_back(u(rng), u(rng));
  return out;
}

// Central finite differences of an evaluator, for derivative cross-checks.
Complex fd_dz(const AnalyticMap::Fn& f, Complex z, double e) {
  const Complex fx = (f(z + Complex(e, 0)) - f(z - Complex(e, 0))) / (2 * e);
  const Complex fy = (f(z + Complex(0, e)) - f(z - Complex(0, e))) / (2 * e);
  return 0.5 * (fx - Complex(0, 1) * fy);
}
Complex fd_dzbar(const AnalyticMap::Fn& f, Complex z, double e) {
  const Complex fx = (f(z + Complex(e, 0)) - f(z - Complex(e, 0))) / (2 * e);
  const Complex fy = (f(z + Complex(0, e)) - f(z - Complex(0, e))) / (2 * e);
  return 0.5 * (fx + Complex(0, 1) * fy);
}

}  // namespace

TEST_CASE("euclidean_harmonic examples") {
  // g = z, k = 0.3z: h = z + 0.3 conj(z).
  AnalyticMap m = euclidean_harmonic({Complex(0, 0), Complex(1, 0)}, {Complex(0, 0), Complex(0.3, 0)});
  const Complex z(0.7, -0.4);
  CHECK(m.h(z) == z + 0.3 * std::conj(z));
  CHECK(m.hz(z) == Complex(1, 0));
  CHECK(m.hzb(z) == Complex(0.3, 0));
  CHECK(m.hzz(z) == Complex(0, 0));
  CHECK(m.hzzb(z) == Complex(0, 0));
  CHECK(m.hzbzb(z) == Complex(0, 0));

  // g = z^2, k = 0.3 z^2.
  AnalyticMap q = euclidean_harmonic({{}, {}, Complex(1, 0)}, {{}, {}, Complex(0.3, 0)});
  CHECK(q.h(z) == z * z + 0.3 * std::conj(z * z));
  CHECK(q.hz(z) == 2.0 * z);
  CHECK(q.hzb(z) == 0.6 * std::conj(z));
  CHECK(q.hzz(z) == Complex(2, 0));
  CHECK(q.hzbzb(z) == Complex(0.6, 0));
  CHECK(q.family() == MapFamily::euclidean_harmonic);

  // g = z, k = 0: identity; Euclidean Jacobian 1.
  AnalyticMap id = euclidean_harmonic({Complex(0, 0), Complex(1, 0)}, {});
  CHECK(id.h(z) == z);
  CHECK(std::norm(id.hz(z)) - std::norm(id.hzb(z)) == 1.0);
  CHECK(id.family() == MapFamily::holomorphic_poly);

  CHECK_THROWS_AS(euclidean_harmonic({}, {}), Error);
}

TEST_CASE("holomorphic_map examples") {
  AnalyticMap half = holomorphic_map({Complex(0, 0), Complex(0.5, 0)});
  ConformalMetric hy = ConformalMetric::hyperbolic();
  for (Complex z : random_points(20, 9)) {
    if (std::abs(z) < 1.9) CHECK(hy.in_domain(half.h(z)));
    CHECK(half.hzb(z) == Complex(0, 0));
  }
  AnalyticMap sq = holomorphic_map({{}, {}, Complex(1, 0)});
  CHECK(sq.h(Complex(2, 1)) == Complex(3, 4));
  CHECK(sq.family() == MapFamily::holomorphic_poly);

  // Translation: J = rho(h)^2 under any target metric.
  AnalyticMap tr = holomorphic_map({Complex(0.1, 0), Complex(1, 0)});
  ConformalMetric sp = ConformalMetric::spherical();
  for (Complex z : random_points(10, 10)) {
    const double rho = sp.rho(tr.h(z));
    const double J = rho * rho * (std::norm(tr.hz(z)) - std::norm(tr.hzb(z)));
    CHECK(J == doctest::Approx(rho * rho).epsilon(1e-14));
  }
}

TEST_CASE("precompose_holomorphic") {
  // identity composed with z^2 equals holomorphic z^2.
  AnalyticMap id = holomorphic_map({Complex(0, 0), Complex(1, 0)});
  AnalyticMap c1 = precompose_holomorphic(id, {{}, {}, Complex(1, 0)});
  AnalyticMap direct = holomorphic_map({{}, {}, Complex(1, 0)});
  for (Complex z : random_points(10, 11)) {
    CHECK(c1.h(z) == direct.h(z));
    CHECK(c1.hz(z) == direct.hz(z));
    CHECK(c1.hzz(z) == direct.hzz(z));
  }

  // (z + 0.3 conj z) . z^2 = z^2 + 0.3 conj(z)^2, exactly the ehpoly map.
  AnalyticMap aff = euclidean_harmonic({Complex(0, 0), Complex(1, 0)}, {Complex(0, 0), Complex(0.3, 0)});
  AnalyticMap comp = precompose_holomorphic(aff, {{}, {}, Complex(1, 0)});
  AnalyticMap expect = euclidean_harmonic({{}, {}, Complex(1, 0)}, {{}, {}, Complex(0.3, 0)});
  CHECK(comp.g_coeffs() == expect.g_coeffs());
  CHECK(comp.k_coeffs() == expect.k_coeffs());

  // Precomposition with z is the identity operation.
  AnalyticMap same = precompose_holomorphic(aff, {Complex(0, 0), Complex(1, 0)});
  for (Complex z : random_points(10, 12)) CHECK(same.h(z) == aff.h(z));
}

TEST_CASE("derivative evaluators match finite differences") {
  AnalyticMap m = euclidean_harmonic({Complex(0.2, 0.1), Complex(1, 0), Complex(0.5, -0.3)},
                                     {Complex(0, 0), Complex(0.25, 0.4), Complex(-0.1, 0.2)});
  const double e = 1e-6;
  for (Complex z : random_points(20, 13)) {
    auto h = [&m](Complex w) { return m.h(w); };
    CHECK(std::abs(fd_dz(h, z, e) - m.hz(z)) < 1e-9);
    CHECK(std::abs(fd_dzbar(h, z, e) - m.hzb(z)) < 1e-9);
    auto hzfn = [&m](Complex w) { return m.hz(w); };
    CHECK(std::abs(fd_dz(hzfn, z, e) - m.hzz(z)) < 1e-9);
    CHECK(std::abs(fd_dzbar(hzfn, z, e) - m.hzzb(z)) < 1e-9);
    auto hzbfn = [&m](Complex w) { return m.hzb(w); };
    CHECK(std::abs(fd_dzbar(hzbfn, z, e) - m.hzbzb(z)) < 1e-9);
  }
}

TEST_CASE("chain-rule consistency for custom-map precomposition") {
  AnalyticMap base = AnalyticMap::custom(
      [](Complex z) { return std::exp(z) + 0.2 * std::conj(z * z); },
      [](Complex z) { return std::exp(z); },
      [](Complex z) { return 0.4 * std::conj(z); },
      [](Complex z) { return std::exp(z); },
      [](Complex) { return Complex(0, 0); },
      [](Complex) { return Complex(0.4, 0); });
  Poly phi = {Complex(0.1, 0), Complex(0.5, 0.2), Complex(0, 0.3)};
  AnalyticMap comp = precompose_holomorphic(base, phi);
  const double e = 1e-6;
  for (Complex z : random_points(10, 14)) {
    auto h = [&comp](Complex w) { return comp.h(w); };
    CHECK(std::abs(fd_dz(h, z, e) - comp.hz(z)) < 2e-8);
    CHECK(std::abs(fd_dzbar(h, z, e) - comp.hzb(z)) < 2e-8);
    auto hzfn = [&comp](Complex w) { return comp.hz(w); };
    CHECK(std::abs(fd_dz(hzfn, z, e) - comp.hzz(z)) < 2e-8);
    CHECK(std::abs(fd_dzbar(hzfn, z, e) - comp.hzzb(z)) < 2e-8);
  }
}

TEST_CASE("PDE membership: flat-target residual vanishes on samples") {
  Grid g(0.25, 0.25, 17, 17, 1.0 / 16.0);
  ConformalMetric eu = ConformalMetric::euclidean();
  // Euclidean-harmonic family: exact zero residual (stencils exact on affine).
  AnalyticMap aff = parse_map_spec("affine:c=0.3,0");
  RealField r1 = pde_residual(sample(aff, g), eu);
  CHECK(max_abs(r1) < 1e-12);
  // Quadratic family: the h_zzbar stencil is exact too.
  AnalyticMap q = parse_map_spec("ehpoly:g=0,0,1;k=0,0,0.3");
  CHECK(max_abs(pde_residual(sample(q, g), eu)) < 1e-12);
  // Holomorphic into spherical: both factors vanish.
  ConformalMetric sp = ConformalMetric::spherical();
  AnalyticMap half = parse_map_spec("holo:0,0,0.5,0");
  CHECK(max_abs(pde_residual(sample(half, g), sp)) < 1e-12);
}

TEST_CASE("sense preservation of shipped fixtures") {
  AnalyticMap aff = parse_map_spec("affine:c=0.3,0");
  AnalyticMap q = parse_map_spec("ehpoly:g=0,0,1;k=0,0,0.3");
  for (Complex z : random_points(50, 15)) {
    CHECK(std::norm(aff.hz(z)) - std::norm(aff.hzb(z)) > 0.0);
    if (std::abs(z) > 0.3)
      CHECK(std::norm(q.hz(z)) - std::norm(q.hzb(z)) > 0.0);
  }
}

TEST_CASE("sampling places map values on nodes") {
  Grid g(-0.5, -0.5, 5, 5, 0.25);
  AnalyticMap id = holomorphic_map({Complex(0, 0), Complex(1, 0)});
  ComplexField f = sample(id, g);
  CHECK(f.valid_count() == g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) CHECK(f.at(i, j) == g.node(i, j));

  MapSamples s = sample_with_derivatives(parse_map_spec("affine:c=0.2,0.1"), g);
  CHECK(s.hz.at(2, 2) == Complex(1, 0));
  CHECK(s.hzb.at(2, 2) == Complex(0.2, 0.1));
}

TEST_CASE("map spec parsing") {
  // affine c as re,im.
  AnalyticMap a = parse_map_spec("affine:c=0.3,0");
  CHECK(a.h(Complex(1, 1)) == Complex(1, 1) + 0.3 * Complex(1, -1));
  // holo with re,im pairs: z/2.
  AnalyticMap h = parse_map_spec("holo:0,0,0.5,0");
  CHECK(h.h(Complex(1, 1)) == Complex(0.5, 0.5));
  // Constant 2i map (one pair).
  AnalyticMap c = parse_map_spec("holo:0,2");
  CHECK(c.h(Complex(0.3, 0.4)) == Complex(0, 2));
  // Odd-length lists are real-coefficient shorthand: g=0,0,1 is z^2.
  AnalyticMap q = parse_map_spec("ehpoly:g=0,0,1;k=0,0,0.3");
  CHECK(q.h(Complex(2, 0)) == Complex(4.0 + 0.3 * 4.0, 0));
  CHECK(q.hz(Complex(1, 0)) == Complex(2, 0));
  CHECK(q.hzb(Complex(1, 0)) == Complex(0.6, 0));

  CHECK_THROWS_AS(parse_map_spec("affine:c=1"), SpecError);
  CHECK_THROWS_AS(parse_map_spec("affine:0.3,0"), SpecError);
  CHECK_THROWS_AS(parse_map_spec("ehpoly:g=1"), SpecError);
  CHECK_THROWS_AS(parse_map_spec("holo:"), SpecError);
  CHECK_THROWS_AS(parse_map_spec("holo:abc"), SpecError);
  CHECK_THROWS_AS(parse_map_spec("spline:1,2"), SpecError);
}
