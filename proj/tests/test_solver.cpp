#include <cmath>
#include <cstring>

#include "doctest.h"
#include "hmlab/analytic_map.hpp"
#include "hmlab/metric.hpp"
#include "hmlab/solver.hpp"

using namespace hmlab;

namespace {

double max_err_vs_map(const ComplexField& h, const AnalyticMap& m) {
  double worst = 0.0;
  const Grid& g = h.grid();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      worst = std::max(worst, std::abs(h.at(i, j) - m.h(g.node(i, j))));
  return worst;
}

}  // namespace

TEST_CASE("harmonic_extension: affine data is reproduced exactly") {
  Grid g(-0.5, -0.5, 33, 33, 1.0 / 32.0);
  AnalyticMap id = holomorphic_map({Complex(0, 0), Complex(1, 0)});
  ComplexField h = harmonic_extension(boundary_from_map(id, g));
  CHECK(max_err_vs_map(h, id) < 1e-10);
}

TEST_CASE("harmonic_extension: z^2 boundary recovered to solver tolerance") {
  Grid g(-0.5, -0.5, 33, 33, 1.0 / 32.0);
  AnalyticMap sq = holomorphic_map({{}, {}, Complex(1, 0)});
  ComplexField h = harmonic_extension(boundary_from_map(sq, g));
  // Re z^2 and Im z^2 are harmonic, and the 5-point stencil is exact on
  // quadratics, so the discrete solution is the sampled map.
  CHECK(max_err_vs_map(h, sq) < 1e-9);
}

TEST_CASE("harmonic_extension: |z|^2 boundary does not produce |z|^2") {
  Grid g(-0.5, -0.5, 33, 33, 1.0 / 32.0);
  AnalyticMap absq = AnalyticMap::custom(
      [](Complex z) { return Complex(std::norm(z), 0.0); },
      [](Complex z) { return std::conj(z); }, [](Complex z) { return z; },
      [](Complex) { return Complex(0, 0); }, [](Complex) { return Complex(1, 0); },
      [](Complex) { return Complex(0, 0); }, "absq");
  ComplexField h = harmonic_extension(boundary_from_map(absq, g));
  // The extension is discrete-harmonic, |z|^2 is not (Lap = 4).
  CHECK(max_err_vs_map(h, absq) > 0.05);
  RealField lap_err(g, 0.0);
  const double inv_s2 = 1.0 / (g.s * g.s);
  double max_lap = 0.0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      const Complex sum =
          h.at(i + 1, j) + h.at(i - 1, j) + h.at(i, j + 1) + h.at(i, j - 1) - 4.0 * h.at(i, j);
      max_lap = std::max(max_lap, std::abs(sum) * inv_s2);
    }
  CHECK(max_lap < 1e-9);  // it solved Lap h = 0, not Lap h = 4
}

TEST_CASE("boundary trace validation") {
  Grid g(0, 0, 9, 9, 0.125);
  ComplexField b(g, Complex{}, false);
  CHECK_THROWS_AS(harmonic_extension(b), Error);
}

TEST_CASE("solve_harmonic: euclidean affine boundary is exact") {
  Grid g(0, 0, 33, 33, 1.0 / 32.0);
  AnalyticMap aff = parse_map_spec("affine:c=0.3,0");
  HarmonicSolution sol = solve_harmonic(boundary_from_map(aff, g), ConformalMetric::euclidean());
  CHECK(sol.converged);
  CHECK(sol.status == SolveStatus::converged);
  CHECK(max_err_vs_map(sol.h, aff) <= 1e-10);
  CHECK(sol.energy == doctest::Approx(1.09).epsilon(1e-9));
}

TEST_CASE("solve_harmonic: holomorphic boundary into spherical target") {
  Grid g(-0.5, -0.5, 65, 65, 1.0 / 64.0);
  AnalyticMap half = parse_map_spec("holo:0,0,0.5,0");
  SolverConfig cfg;
  cfg.tol = 1e-10;
  HarmonicSolution sol = solve_harmonic(boundary_from_map(half, g), ConformalMetric::spherical(), cfg);
  CHECK(sol.converged);
  CHECK(sol.residual_linf <= 1e-10);
  CHECK(max_err_vs_map(sol.h, half) < 1e-9);
}

TEST_CASE("solve_harmonic: hyperbolic guard rejects out-of-disk boundary") {
  Grid g(-0.5, -0.5, 17, 17, 1.0 / 16.0);
  AnalyticMap big = parse_map_spec("holo:0,2");  // constant 2i
  CHECK_THROWS_AS(solve_harmonic(boundary_from_map(big, g), ConformalMetric::hyperbolic()),
                  DomainGuardError);
}

TEST_CASE("solve_harmonic: boundary fidelity and determinism") {
  Grid g(-0.5, -0.5, 33, 33, 1.0 / 32.0);
  AnalyticMap bm = parse_map_spec("ehpoly:g=0,0,0.5,0;k=0,0,0.1,0");
  ComplexField boundary = boundary_from_map(bm, g);
  SolverConfig cfg;
  cfg.tol = 1e-9;
  ConformalMetric sp = ConformalMetric::spherical();
  HarmonicSolution a = solve_harmonic(boundary, sp, cfg);
  HarmonicSolution b = solve_harmonic(boundary, sp, cfg);
  REQUIRE(a.converged);
  CHECK(a.iterations == b.iterations);
  CHECK(std::memcmp(a.h.values().data(), b.h.values().data(),
                    a.h.values().size() * sizeof(Complex)) == 0);
  // Dirichlet nodes are bit-exact.
  for (int i = 0; i < g.nx; ++i) {
    CHECK(a.h.at(i, 0) == boundary.at(i, 0));
    CHECK(a.h.at(i, g.ny - 1) == boundary.at(i, g.ny - 1));
  }
  for (int j = 0; j < g.ny; ++j) {
    CHECK(a.h.at(0, j) == boundary.at(0, j));
    CHECK(a.h.at(g.nx - 1, j) == boundary.at(g.nx - 1, j));
  }
  // Residual certificate: reported value equals an independent recompute.
  RealField res = pde_residual(a.h, sp);
  CHECK(max_abs(res) == doctest::Approx(a.residual_linf).epsilon(1e-12));
  // Jacobi sweeps solve the same problem, deterministically.
  SolverConfig jcfg = cfg;
  jcfg.sweep = Sweep::jacobi;
  HarmonicSolution c = solve_harmonic(boundary, sp, jcfg);
  CHECK(c.converged);
  CHECK(max_abs_diff(a.h, c.h) < 1e-7);
}

TEST_CASE("solve_harmonic: max_iters is an outcome with the best iterate attached") {
  Grid g(-0.5, -0.5, 33, 33, 1.0 / 32.0);
  AnalyticMap bm = parse_map_spec("ehpoly:g=0,0,0.5,0;k=0,0,0.1,0");
  SolverConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iters = 5;
  HarmonicSolution sol = solve_harmonic(boundary_from_map(bm, g), ConformalMetric::spherical(), cfg);
  CHECK(!sol.converged);
  CHECK(sol.status == SolveStatus::max_iters);
  CHECK(sol.iterations == 5);
  CHECK(sol.h.valid_count() == g.size());
  CHECK(std::isfinite(sol.residual_linf));
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.omega = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.omega = 0.8;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.tol = 1e-8;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(parse_sweep("jacobi") == Sweep::jacobi);
  CHECK_THROWS_AS(parse_sweep("chaotic"), SpecError);
}

TEST_CASE("energy examples") {
  Grid g(0, 0, 65, 65, 1.0 / 64.0);  // unit square
  ConformalMetric eu = ConformalMetric::euclidean();
  ConformalMetric sp = ConformalMetric::spherical();
  AnalyticMap aff = parse_map_spec("affine:c=0.3,0");
  ComplexField h = sample(aff, g);
  const double e1 = energy(h, eu);
  CHECK(std::abs(e1 - 1.09) < 1e-6);
  // Conformal invariance in the domain metric: the sigma factors cancel.
  const double e2 = energy(h, eu, sp);
  CHECK(std::abs(e2 - e1) <= 1e-12 * e1);
  // Constant map has zero energy.
  ComplexField c(g, Complex(0.25, 0.5));
  CHECK(energy(c, eu) == 0.0);
}

TEST_CASE("grid refinement convergence of the curved solve") {
  // Holomorphic fixture: the discrete solution collapses onto z/2, so the
  // error is at the linear-solve floor at every spacing.
  ConformalMetric sp = ConformalMetric::spherical();
  AnalyticMap half = parse_map_spec("holo:0,0,0.5,0");
  std::vector<double> spacings = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::vector<double> errs;
  for (double s : spacings) {
    const int n = static_cast<int>(std::lround(1.0 / s)) + 1;
    Grid g(-0.5, -0.5, n, n, s);
    SolverConfig cfg;
    cfg.tol = 1e-11;
    HarmonicSolution sol = solve_harmonic(boundary_from_map(half, g), sp, cfg);
    REQUIRE(sol.converged);
    errs.push_back(max_err_vs_map(sol.h, half));
  }
  CHECK(refinement_pass(spacings, errs));
}

TEST_CASE("critical_point_probe") {
  Grid g(0, 0, 33, 33, 1.0 / 32.0);
  HarmonicSolution sol =
      solve_harmonic(boundary_from_map(parse_map_spec("affine:c=0.3,0"), g),
                     ConformalMetric::euclidean());
  REQUIRE(sol.converged);
  ProbeReport rep = critical_point_probe(sol, 6, 0.05);
  CHECK(rep.bumps.size() == 6);
  for (const auto& b : rep.bumps) {
    CHECK(b.dE > 0.0);
    CHECK(b.exponent > 1.9);
    CHECK(b.exponent < 2.1);
  }
  CHECK(rep.min_dE >= 0.0);
  // Zero amplitude: dE = 0 identically.
  ProbeReport zero = critical_point_probe(sol, 2, 0.0);
  for (const auto& b : zero.bumps) CHECK(b.dE == 0.0);
  // Probing an unconverged solution is a misuse.
  HarmonicSolution broken = sol;
  broken.converged = false;
  CHECK_THROWS_AS(critical_point_probe(broken, 2, 0.05), Error);
}
