#include "hmlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hmlab/calculus.hpp"

namespace hmlab {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_full_boundary(const ComplexField& b) {
  const Grid& g = b.grid();
  auto ok = [&](int i, int j) {
    if (!b.valid(i, j)) return false;
    const Complex v = b.at(i, j);
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  };
  for (int i = 0; i < g.nx; ++i)
    if (!ok(i, 0) || !ok(i, g.ny - 1))
      throw Error("boundary trace must be valid and finite on all four edges");
  for (int j = 0; j < g.ny; ++j)
    if (!ok(0, j) || !ok(g.nx - 1, j))
      throw Error("boundary trace must be valid and finite on all four edges");
}

// Transfinite (Coons) interpolation of the boundary trace; exact for affine
// data, a good start otherwise.
ComplexField coons_init(const ComplexField& b) {
  const Grid& g = b.grid();
  ComplexField h(g);
  const int nx = g.nx, ny = g.ny;
  const Complex c00 = b.at(0, 0), c10 = b.at(nx - 1, 0), c01 = b.at(0, ny - 1),
                c11 = b.at(nx - 1, ny - 1);
  for (int j = 0; j < ny; ++j) {
    const double v = static_cast<double>(j) / (ny - 1);
    for (int i = 0; i < nx; ++i) {
      const double u = static_cast<double>(i) / (nx - 1);
      const Complex left = b.at(0, j), right = b.at(nx - 1, j);
      const Complex bottom = b.at(i, 0), top = b.at(i, ny - 1);
      h.at(i, j) = (1 - u) * left + u * right + (1 - v) * bottom + v * top -
                   ((1 - u) * (1 - v) * c00 + u * (1 - v) * c10 + (1 - u) * v * c01 +
                    u * v * c11);
    }
  }
  // Edges carry the trace bit-exactly.
  for (int i = 0; i < nx; ++i) {
    h.at(i, 0) = b.at(i, 0);
    h.at(i, ny - 1) = b.at(i, ny - 1);
  }
  for (int j = 0; j < ny; ++j) {
    h.at(0, j) = b.at(0, j);
    h.at(nx - 1, j) = b.at(nx - 1, j);
  }
  return h;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw Error("SolverConfig: tol must be positive");
  if (max_iters < 1) throw Error("SolverConfig: max_iters must be >= 1");
  if (!(omega > 0.0) || omega > 1.0) throw Error("SolverConfig: omega must lie in (0, 1]");
}

Sweep parse_sweep(const std::string& name) {
  if (name == "jacobi") return Sweep::jacobi;
  if (name == "gauss_seidel_rowmajor" || name == "gs") return Sweep::gauss_seidel_rowmajor;
  throw SpecError("unknown sweep '" + name + "'");
}

std::string sweep_name(Sweep s) {
  return s == Sweep::jacobi ? "jacobi" : "gauss_seidel_rowmajor";
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::diverged: return "diverged";
    default: return "max_iters";
  }
}

ComplexField boundary_from_map(const AnalyticMap& m, const Grid& grid) {
  ComplexField b(grid, Complex{}, false);
  for (int i = 0; i < grid.nx; ++i) {
    b.at(i, 0) = m.h(grid.node(i, 0));
    b.set_valid(i, 0, true);
    b.at(i, grid.ny - 1) = m.h(grid.node(i, grid.ny - 1));
    b.set_valid(i, grid.ny - 1, true);
  }
  for (int j = 0; j < grid.ny; ++j) {
    b.at(0, j) = m.h(grid.node(0, j));
    b.set_valid(0, j, true);
    b.at(grid.nx - 1, j) = m.h(grid.node(grid.nx - 1, j));
    b.set_valid(grid.nx - 1, j, true);
  }
  return b;
}

ComplexField harmonic_extension(const ComplexField& boundary, LinearSolveOptions opts) {
  require_full_boundary(boundary);
  const Grid& g = boundary.grid();
  ComplexField h = coons_init(boundary);
  const int nx = g.nx, ny = g.ny;
  const double s2 = g.s * g.s;
  const int m = std::max(nx, ny) - 1;
  const double omega = 2.0 / (1.0 + std::sin(M_PI / m));
  const int cap = opts.max_sweeps > 0 ? opts.max_sweeps : 60 * m + 20000;

  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int sweep = 0; sweep < cap; ++sweep) {
    double max_r = 0.0;
    for (int j = 1; j < ny - 1; ++j) {
      for (int i = 1; i < nx - 1; ++i) {
        const Complex sum = h.at(i + 1, j) + h.at(i - 1, j) + h.at(i, j + 1) + h.at(i, j - 1);
        const Complex r = sum - 4.0 * h.at(i, j);
        max_r = std::max(max_r, std::abs(r));
        h.at(i, j) += (omega * 0.25) * r;
      }
    }
    const double scaled = max_r / s2;
    if (scaled <= opts.tol) {
      // Clean residual pass over the final iterate.
      double final_r = 0.0;
      for (int j = 1; j < ny - 1; ++j)
        for (int i = 1; i < nx - 1; ++i) {
          const Complex sum = h.at(i + 1, j) + h.at(i - 1, j) + h.at(i, j + 1) + h.at(i, j - 1);
          final_r = std::max(final_r, std::abs(sum - 4.0 * h.at(i, j)));
        }
      if (final_r / s2 <= opts.tol) return h;
    }
    if (scaled < best * (1.0 - 1e-4)) {
      best = scaled;
      stalled = 0;
    } else if (++stalled > 500) {
      break;  // rounding floor reached
    }
  }
  // One last check against the requested tolerance before giving up.
  double final_r = 0.0;
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      const Complex sum = h.at(i + 1, j) + h.at(i - 1, j) + h.at(i, j + 1) + h.at(i, j - 1);
      final_r = std::max(final_r, std::abs(sum - 4.0 * h.at(i, j)));
    }
  if (final_r / s2 <= opts.tol) return h;
  throw SolverError("initialization failed: Laplace relaxation did not reach tol");
}

RealField pde_residual(const ComplexField& h, const ConformalMetric& metric) {
  ComplexField lap = laplacian(h);
  ComplexField hz = wirtinger_dz(h);
  ComplexField hzb = wirtinger_dzbar(h);
  RealField out(h.grid(), 0.0, false);
  for (int j = 0; j < h.ny(); ++j) {
    for (int i = 0; i < h.nx(); ++i) {
      if (!lap.valid(i, j)) continue;
      const Complex w = h.at(i, j);
      if (!metric.in_domain(w))
        throw DomainGuardError("pde_residual: map value leaves the metric domain at node (" +
                               std::to_string(i) + ", " + std::to_string(j) + ")");
      const Complex t = 0.25 * lap.at(i, j) + metric.log_rho2_w(w) * hz.at(i, j) * hzb.at(i, j);
      out.at(i, j) = std::abs(t);
      out.set_valid(i, j, true);
    }
  }
  out.require_valid("pde_residual");
  return out;
}

HarmonicSolution solve_harmonic(const ComplexField& boundary, const ConformalMetric& metric,
                                const SolverConfig& cfg) {
  cfg.validate();
  require_full_boundary(boundary);
  const Grid& g = boundary.grid();

  if (!metric.guard_everywhere()) {
    for (int i = 0; i < g.nx; ++i)
      for (int j : {0, g.ny - 1})
        if (!metric.in_domain(boundary.at(i, j)))
          throw DomainGuardError("solve_harmonic: boundary value leaves the metric domain");
    for (int j = 0; j < g.ny; ++j)
      for (int i : {0, g.nx - 1})
        if (!metric.in_domain(boundary.at(i, j)))
          throw DomainGuardError("solve_harmonic: boundary value leaves the metric domain");
  }

  HarmonicSolution sol{ComplexField(g), metric, 0.0, 0, 0.0, false, SolveStatus::max_iters};
  sol.h = harmonic_extension(boundary);

  const int nx = g.nx, ny = g.ny;
  const double s2 = g.s * g.s;
  const double inv2s = 1.0 / (2.0 * g.s);

  auto full_residual = [&](const ComplexField& h, double& out) {
    // pde_residual without the intermediate fields, tolerant of guard exits.
    double r = 0.0;
    for (int j = 1; j < ny - 1; ++j) {
      for (int i = 1; i < nx - 1; ++i) {
        const Complex w = h.at(i, j);
        if (!metric.guard_everywhere() && !metric.in_domain(w)) return false;
        const Complex sum = h.at(i + 1, j) + h.at(i - 1, j) + h.at(i, j + 1) + h.at(i, j - 1);
        const Complex hzz_bar = (sum - 4.0 * h.at(i, j)) / (4.0 * s2);
        const Complex fx = (h.at(i + 1, j) - h.at(i - 1, j)) * inv2s;
        const Complex fy = (h.at(i, j + 1) - h.at(i, j - 1)) * inv2s;
        const Complex hz = 0.5 * (fx - kI * fy);
        const Complex hzb = 0.5 * (fx + kI * fy);
        r = std::max(r, std::abs(hzz_bar + metric.log_rho2_w(w) * hz * hzb));
      }
    }
    out = r;
    return true;
  };

  auto finish = [&](ComplexField h, SolveStatus status, int iters) {
    HarmonicSolution result{std::move(h), metric, 0.0, iters, 0.0, false, status};
    double r = std::numeric_limits<double>::infinity();
    if (full_residual(result.h, r)) result.residual_linf = r;
    else result.residual_linf = std::numeric_limits<double>::infinity();
    if (status == SolveStatus::converged && result.residual_linf <= cfg.tol)
      result.converged = true;
    else if (status == SolveStatus::converged)
      result.status = SolveStatus::max_iters;  // monitor lied; do not certify
    try {
      result.energy = energy(result.h, metric);
    } catch (const DomainGuardError&) {
      result.energy = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
  };

  // Converged at initialization (exact for flat targets and conformal data).
  {
    double r = 0.0;
    if (!full_residual(sol.h, r)) return finish(std::move(sol.h), SolveStatus::diverged, 0);
    if (r <= cfg.tol) return finish(std::move(sol.h), SolveStatus::converged, 0);
  }

  std::vector<Complex> rhs(g.size(), Complex{});
  ComplexField next = sol.h;  // Jacobi target buffer
  ComplexField best = sol.h;
  double best_monitor = std::numeric_limits<double>::infinity();
  double prev_monitor = std::numeric_limits<double>::infinity();
  int rising = 0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    ComplexField& h = sol.h;
    // Lagged right-hand side: Lap(h_new) = -4 (log rho^2)_w(h) h_z h_zbar.
    for (int j = 1; j < ny - 1; ++j) {
      for (int i = 1; i < nx - 1; ++i) {
        const Complex w = h.at(i, j);
        if (!metric.guard_everywhere() && !metric.in_domain(w))
          return finish(std::move(best), SolveStatus::diverged, it);
        const Complex fx = (h.at(i + 1, j) - h.at(i - 1, j)) * inv2s;
        const Complex fy = (h.at(i, j + 1) - h.at(i, j - 1)) * inv2s;
        const Complex hz = 0.5 * (fx - kI * fy);
        const Complex hzb = 0.5 * (fx + kI * fy);
        rhs[g.index(i, j)] = -4.0 * metric.log_rho2_w(w) * hz * hzb;
      }
    }

    double monitor = 0.0;
    if (cfg.sweep == Sweep::gauss_seidel_rowmajor) {
      for (int j = 1; j < ny - 1; ++j) {
        for (int i = 1; i < nx - 1; ++i) {
          const Complex sum = h.at(i + 1, j) + h.at(i - 1, j) + h.at(i, j + 1) + h.at(i, j - 1);
          const Complex target = 0.25 * (sum - s2 * rhs[g.index(i, j)]);
          monitor = std::max(monitor, std::abs(target - h.at(i, j)) / s2);
          h.at(i, j) += cfg.omega * (target - h.at(i, j));
        }
      }
    } else {
      for (int j = 1; j < ny - 1; ++j) {
        for (int i = 1; i < nx - 1; ++i) {
          const Complex sum = h.at(i + 1, j) + h.at(i - 1, j) + h.at(i, j + 1) + h.at(i, j - 1);
          const Complex target = 0.25 * (sum - s2 * rhs[g.index(i, j)]);
          monitor = std::max(monitor, std::abs(target - h.at(i, j)) / s2);
          next.at(i, j) = h.at(i, j) + cfg.omega * (target - h.at(i, j));
        }
      }
      for (int j = 1; j < ny - 1; ++j)
        for (int i = 1; i < nx - 1; ++i) h.at(i, j) = next.at(i, j);
    }

    if (monitor < best_monitor) {
      if (monitor < 0.5 * best_monitor) best = h;  // snapshot sparsely
      best_monitor = monitor;
    }
    if (monitor > prev_monitor) {
      if (++rising >= 50) return finish(std::move(best), SolveStatus::diverged, it);
    } else {
      rising = 0;
    }
    prev_monitor = monitor;

    if (monitor <= cfg.tol) {
      double r = 0.0;
      if (!full_residual(h, r)) return finish(std::move(best), SolveStatus::diverged, it);
      if (r <= cfg.tol) return finish(std::move(h), SolveStatus::converged, it);
    }
  }
  return finish(std::move(sol.h), SolveStatus::max_iters, cfg.max_iters);
}

double energy(const ComplexField& h, const ConformalMetric& target,
              const ConformalMetric& domain) {
  if (h.valid_count() != h.grid().size())
    throw Error("energy: field must be fully valid (boundary stencils need every node)");
  const Grid& g = h.grid();
  const int nx = g.nx, ny = g.ny;
  const double inv2s = 1.0 / (2.0 * g.s);

  auto dx = [&](int i, int j) -> Complex {
    if (i == 0) return (-3.0 * h.at(0, j) + 4.0 * h.at(1, j) - h.at(2, j)) * inv2s;
    if (i == nx - 1)
      return (3.0 * h.at(nx - 1, j) - 4.0 * h.at(nx - 2, j) + h.at(nx - 3, j)) * inv2s;
    return (h.at(i + 1, j) - h.at(i - 1, j)) * inv2s;
  };
  auto dy = [&](int i, int j) -> Complex {
    if (j == 0) return (-3.0 * h.at(i, 0) + 4.0 * h.at(i, 1) - h.at(i, 2)) * inv2s;
    if (j == ny - 1)
      return (3.0 * h.at(i, ny - 1) - 4.0 * h.at(i, ny - 2) + h.at(i, ny - 3)) * inv2s;
    return (h.at(i, j + 1) - h.at(i, j - 1)) * inv2s;
  };

  double total = 0.0;
  for (int j = 0; j < ny; ++j) {
    const double wy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
    for (int i = 0; i < nx; ++i) {
      const double wx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
      const Complex fx = dx(i, j), fy = dy(i, j);
      const Complex hz = 0.5 * (fx - kI * fy);
      const Complex hzb = 0.5 * (fx + kI * fy);
      const double sigma = domain.rho(g.node(i, j));
      const double a = target.rho(h.at(i, j)) / sigma;
      // sigma-normalized derivatives against the sigma volume element; the
      // sigma factors cancel and the computed value must not depend on them.
      const double integrand = a * a * (std::norm(hz) + std::norm(hzb)) * (sigma * sigma);
      total += wx * wy * integrand;
    }
  }
  return total * g.s * g.s;
}

double energy(const ComplexField& h, const ConformalMetric& target) {
  return energy(h, target, ConformalMetric::euclidean());
}

ProbeReport critical_point_probe(const HarmonicSolution& sol, int n_perturbations,
                                 double amplitude, std::uint64_t seed) {
  if (!sol.converged) throw Error("critical_point_probe: solution did not converge");
  if (n_perturbations < 1) throw Error("critical_point_probe: need at least one bump");
  const Grid& g = sol.h.grid();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> mode(1, 3);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

  ProbeReport report;
  report.amplitude = amplitude;
  report.base_energy = energy(sol.h, sol.metric);
  report.min_dE = std::numeric_limits<double>::infinity();

  auto perturbed_energy = [&](int p, int q, Complex c, double a) {
    ComplexField ph = sol.h;
    for (int j = 1; j < g.ny - 1; ++j) {
      const double sv = std::sin(q * M_PI * static_cast<double>(j) / (g.ny - 1));
      for (int i = 1; i < g.nx - 1; ++i) {
        const double su = std::sin(p * M_PI * static_cast<double>(i) / (g.nx - 1));
        ph.at(i, j) += a * c * (su * sv);
      }
    }
    return energy(ph, sol.metric);
  };

  for (int k = 0; k < n_perturbations; ++k) {
    ProbeBump bump;
    bump.p = mode(rng);
    bump.q = mode(rng);
    const double t = angle(rng);
    const Complex c(std::cos(t), std::sin(t));
    if (amplitude == 0.0) {
      bump.dE = bump.dE_half = 0.0;
      bump.exponent = 0.0;
      report.min_dE = std::min(report.min_dE, 0.0);
      report.bumps.push_back(bump);
      continue;
    }
    bump.dE = perturbed_energy(bump.p, bump.q, c, amplitude) - report.base_energy;
    bump.dE_half = perturbed_energy(bump.p, bump.q, c, amplitude / 2) - report.base_energy;
    bump.exponent = (bump.dE > 0 && bump.dE_half > 0) ? std::log2(bump.dE / bump.dE_half)
                                                      : std::numeric_limits<double>::quiet_NaN();
    report.min_dE = std::min({report.min_dE, bump.dE, bump.dE_half});
    report.bumps.push_back(bump);
  }
  return report;
}

}  // namespace hmlab
