#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmlab/analytic_map.hpp"
#include "hmlab/field.hpp"
#include "hmlab/metric.hpp"
#include "hmlab/util.hpp"

namespace hmlab {

enum class Sweep { jacobi, gauss_seidel_rowmajor };

struct SolverConfig {
  double tol = 1e-8;      // L-inf target for the discrete equation residual
  int max_iters = 200000;  // outer iterations (one damped sweep each)
  double omega = 0.8;      // damping, in (0, 1]
  Sweep sweep = Sweep::gauss_seidel_rowmajor;

  void validate() const;
};

Sweep parse_sweep(const std::string& name);
std::string sweep_name(Sweep s);

enum class SolveStatus { converged, diverged, max_iters };
std::string status_name(SolveStatus s);

struct HarmonicSolution {
  ComplexField h;
  ConformalMetric metric;
  double residual_linf = 0.0;
  int iterations = 0;
  double energy = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iters;
};

/// Dirichlet trace of a map on the four grid edges (interior nodes masked).
ComplexField boundary_from_map(const AnalyticMap& m, const Grid& grid);

struct LinearSolveOptions {
  double tol = 1e-10;  // L-inf of the scaled 5-point Laplacian
  int max_sweeps = 0;  // 0 = automatic cap
};

/// Discrete harmonic (Laplace) extension of the boundary trace, by SOR with
/// the optimal over-relaxation factor. Throws SolverError when the internal
/// iteration cap is hit before the tolerance.
ComplexField harmonic_extension(const ComplexField& boundary, LinearSolveOptions opts = {});

/// Pointwise |h_zzbar + (log rho^2)_w(h) * h_z * h_zbar| on the interior.
RealField pde_residual(const ComplexField& h, const ConformalMetric& metric);

/// Relax the harmonic-map equation with lagged nonlinearity: one damped
/// sweep of Lap(h) = -4 (log rho^2)_w(h_prev) h_z h_zbar per outer
/// iteration, starting from the harmonic extension. Non-convergence is an
/// outcome (status + best iterate), not an exception; domain-guard
/// violations of the boundary data throw before iterating.
HarmonicSolution solve_harmonic(const ComplexField& boundary, const ConformalMetric& metric,
                                const SolverConfig& cfg = {});

/// Energy integral by trapezoidal quadrature of
/// (rho(h)/sigma)^2 (|h_z|^2 + |h_zbar|^2) * sigma^2 over the grid
/// rectangle; the sigma factors are kept and must cancel. Requires a fully
/// valid field (edge derivatives use one-sided second-order stencils).
double energy(const ComplexField& h, const ConformalMetric& target,
              const ConformalMetric& domain);
double energy(const ComplexField& h, const ConformalMetric& target);

struct ProbeBump {
  int p = 0, q = 0;        // bump mode numbers
  double dE = 0.0;         // E[h + a*bump] - E[h]
  double dE_half = 0.0;    // same at a/2
  double exponent = 0.0;   // log2(dE / dE_half)
};

struct ProbeReport {
  double base_energy = 0.0;
  double amplitude = 0.0;
  double min_dE = 0.0;
  std::vector<ProbeBump> bumps;
};

/// Perturb a converged solution with boundary-supported smooth bumps and
/// report the energy increase and its amplitude scaling (the first
/// variation of a critical point vanishes, so dE ~ amplitude^2).
ProbeReport critical_point_probe(const HarmonicSolution& sol, int n_perturbations,
                                 double amplitude, std::uint64_t seed = kDefaultSeed);

}  // namespace hmlab
