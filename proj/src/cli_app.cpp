#include "hmlab/cli_app.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hmlab/analysis.hpp"
#include "hmlab/analytic_map.hpp"
#include "hmlab/field_io.hpp"
#include "hmlab/metric.hpp"
#include "hmlab/solver.hpp"
#include "hmlab/util.hpp"

namespace hmlab::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitSpecError = 3;

const std::vector<std::string> kAllChecks = {"bochner", "sigma-bochner", "main",   "presub",
                                             "quadform", "superharm",    "minprin", "hopf",
                                             "radial",   "bridge"};

struct GridFlags {
  int nx = 65, ny = 65;
  double x0 = -0.5, y0 = -0.5, s = 1.0 / 64.0;
  Grid make() const { return Grid(x0, y0, nx, ny, s); }
};

struct SolveFlags {
  std::string metric = "euclidean";
  std::string boundary;
  GridFlags grid;
  double tol = 1e-8;
  int max_iters = 200000;
  double omega = 0.8;
  std::string sweep = "gauss_seidel_rowmajor";
  std::string out = ".";
};

struct VerifyFlags {
  std::string metric = "euclidean";
  std::string domain_metric = "euclidean";
  std::string map;
  std::string solution;
  std::string field;
  GridFlags grid;
  std::vector<std::string> checks;
  bool csv = false;
  double tolerance = -1.0;
  double extra_tol = 0.0;
  double slack = -1.0;
  double floor_rel = 1e-8;
  int subrects = 5;
  std::uint64_t seed = kDefaultSeed;
  std::string out = ".";
};

struct RefineFlags {
  std::string metric = "euclidean";
  std::string domain_metric = "euclidean";
  std::string map;
  std::string boundary;
  double x0 = -0.5, y0 = -0.5, extent = 1.0;
  std::vector<double> spacings;
  std::vector<std::string> checks;
  double solver_tol = 1e-10;
  std::uint64_t seed = kDefaultSeed;
  std::string out = ".";
};

struct MetricCheckFlags {
  std::string metric;
  int samples = 100;
  std::uint64_t seed = kDefaultSeed;
  double tol = 1e-6;
  std::string out = ".";
};

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string grid_json(const Grid& g) {
  std::ostringstream ss;
  ss << "{\"nx\":" << g.nx << ",\"ny\":" << g.ny << ",\"x0\":" << fmt17(g.x0)
     << ",\"y0\":" << fmt17(g.y0) << ",\"s\":" << fmt17(g.s) << "}";
  return ss.str();
}

void write_reports_json(const std::string& path, const std::vector<CheckResult>& results) {
  std::ostringstream ss;
  ss << "[\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    ss << "  " << results[k].report.to_json();
    if (k + 1 < results.size()) ss << ',';
    ss << '\n';
  }
  ss << "]\n";
  write_file_atomic(path, ss.str());
}

std::vector<std::string> expand_checks(std::vector<std::string> checks) {
  if (checks.empty()) throw SpecError("--checks must name at least one check");
  if (checks.size() == 1 && checks[0] == "all") return kAllChecks;
  for (const auto& c : checks) {
    bool known = false;
    for (const auto& k : kAllChecks) known = known || (k == c);
    if (!known) throw SpecError("unknown check '" + c + "' (see --help for the list)");
  }
  return checks;
}

CheckResult failed_result(const std::string& name, double spacing, const std::string& why) {
  CheckResult r;
  r.report.name = name;
  r.report.spacing = spacing;
  r.report.passed = false;
  r.report.empty = true;
  std::cerr << "check '" << name << "' failed to evaluate: " << why << "\n";
  return r;
}

/// Run the named checks over a bundle; evaluation errors (e.g. a
/// non-sense-preserving input) become failed reports, not crashes.
std::vector<CheckResult> run_checks(const JacobianBundle& bundle, const ConformalMetric& domain,
                                    const std::vector<std::string>& checks,
                                    const CheckOptions& opts, int subrects, std::uint64_t seed) {
  std::vector<CheckResult> out;
  const double s = bundle.spacing();
  for (const auto& name : checks) {
    try {
      if (name == "bochner") {
        auto [a, b] = bochner_residuals(bundle, opts);
        out.push_back(std::move(a));
        out.push_back(std::move(b));
      } else if (name == "sigma-bochner") {
        auto [a, b] = sigma_bochner_residuals(bundle, domain, opts);
        out.push_back(std::move(a));
        out.push_back(std::move(b));
      } else if (name == "main") {
        out.push_back(main_identity_residual(bundle, opts));
      } else if (name == "presub") {
        out.push_back(presubtraction_identity_residual(bundle, opts));
      } else if (name == "quadform") {
        out.push_back(quadratic_form(bundle, opts).second);
      } else if (name == "superharm") {
        out.push_back(superharmonicity_check(bundle, opts));
      } else if (name == "minprin") {
        auto rects = seeded_subrects(bundle.J, subrects, seed);
        int idx = 0;
        for (const auto& rect : rects) {
          CheckResult r = minimum_principle_check(bundle.J, rect, opts);
          r.report.name = "minprin_" + std::to_string(idx++);
          out.push_back(std::move(r));
        }
      } else if (name == "hopf") {
        out.push_back(hopf_check(bundle, opts));
      } else if (name == "radial") {
        out.push_back(radial_identity_residual(bundle, opts));
      } else if (name == "bridge") {
        out.push_back(log_bridge_check(bundle, opts));
      }
    } catch (const Error& e) {
      out.push_back(failed_result(name, s, e.what()));
    }
  }
  return out;
}

int run_solve(const SolveFlags& f) {
  ConformalMetric metric = parse_metric_spec(f.metric);
  AnalyticMap bmap = parse_map_spec(f.boundary);
  Grid grid = f.grid.make();
  SolverConfig cfg;
  cfg.tol = f.tol;
  cfg.max_iters = f.max_iters;
  cfg.omega = f.omega;
  cfg.sweep = parse_sweep(f.sweep);
  cfg.validate();

  ComplexField boundary = boundary_from_map(bmap, grid);
  std::optional<HarmonicSolution> solved;
  try {
    solved.emplace(solve_harmonic(boundary, metric, cfg));
  } catch (const DomainGuardError& e) {
    std::cerr << "--boundary: " << e.what() << "\n";
    return kExitSpecError;
  }
  const HarmonicSolution& sol = *solved;

  fs::create_directories(f.out);
  save_hmfield((fs::path(f.out) / "solution.hmfield").string(), sol.h);
  std::ostringstream ss;
  ss << "{\"residual_linf\":" << fmt17(sol.residual_linf) << ",\"iterations\":" << sol.iterations
     << ",\"energy\":" << fmt17(sol.energy) << ",\"converged\":"
     << (sol.converged ? "true" : "false") << ",\"status\":\"" << status_name(sol.status)
     << "\",\"metric\":\"" << json_escape(f.metric) << "\",\"grid\":" << grid_json(grid) << "}\n";
  write_file_atomic((fs::path(f.out) / "solution.json").string(), ss.str());

  std::cout << "solve " << status_name(sol.status) << ": residual_linf=" << fmt17(sol.residual_linf)
            << " iterations=" << sol.iterations << " energy=" << fmt17(sol.energy) << "\n";
  return sol.converged ? kExitPass : kExitDiverged;
}

int run_verify(const VerifyFlags& f) {
  const int sources = (!f.map.empty()) + (!f.solution.empty()) + (!f.field.empty());
  if (sources != 1)
    throw SpecError("verify needs exactly one of --map, --solution, --field");
  ConformalMetric metric = parse_metric_spec(f.metric);
  ConformalMetric domain = parse_metric_spec(f.domain_metric);
  std::vector<std::string> checks = expand_checks(f.checks);

  CheckOptions opts;
  opts.tolerance = f.tolerance;
  opts.extra_tol = f.extra_tol;
  opts.slack = f.slack;

  std::optional<JacobianBundle> bundle;
  if (!f.map.empty()) {
    AnalyticMap m = parse_map_spec(f.map);
    bundle.emplace(jacobian_bundle(m, f.grid.make(), metric, f.floor_rel));
  } else {
    const std::string& path = !f.solution.empty() ? f.solution : f.field;
    AnyField loaded = load_hmfield(path);
    ComplexField h = std::visit(
        [](auto&& fld) -> ComplexField {
          using T = std::decay_t<decltype(fld)>;
          if constexpr (std::is_same_v<T, ComplexField>) {
            return fld;
          } else {
            ComplexField out(fld.grid(), Complex{}, false);
            out.mask() = fld.mask();
            for (std::size_t k = 0; k < fld.values().size(); ++k)
              out.values()[k] = Complex(fld.values()[k], 0.0);
            return out;
          }
        },
        loaded);
    bundle.emplace(jacobian_bundle(h, metric, f.floor_rel));
  }

  std::vector<CheckResult> results = run_checks(*bundle, domain, checks, opts, f.subrects, f.seed);

  fs::create_directories(f.out);
  write_reports_json((fs::path(f.out) / "reports.json").string(), results);
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.report.passed;
    std::cout << (r.report.passed ? "PASS " : "FAIL ") << r.report.name
              << " linf=" << fmt17(r.report.linf) << " tol=" << fmt17(r.report.tolerance_used)
              << " evaluated=" << r.report.evaluated_nodes
              << " excluded=" << r.report.excluded_nodes << "\n";
    if (f.csv && !r.fields.base_mask.empty())
      write_file_atomic((fs::path(f.out) / ("report_" + r.report.name + ".csv")).string(),
                        check_csv(r));
  }
  return all_pass ? kExitPass : kExitCheckFailed;
}

int run_refine(const RefineFlags& f) {
  if (f.spacings.size() < 3) throw SpecError("--spacings needs at least three halving values");
  for (std::size_t k = 1; k < f.spacings.size(); ++k)
    if (std::abs(f.spacings[k] - 0.5 * f.spacings[k - 1]) > 1e-9 * f.spacings[k - 1])
      throw SpecError("--spacings must halve at each step");
  if ((f.map.empty()) == (f.boundary.empty()))
    throw SpecError("refine needs exactly one of --map or --boundary");
  ConformalMetric metric = parse_metric_spec(f.metric);
  ConformalMetric domain = parse_metric_spec(f.domain_metric);
  std::vector<std::string> checks = expand_checks(f.checks);

  std::map<std::string, std::vector<double>> linfs;
  std::vector<std::string> row_order;
  std::ostringstream table;
  table << "check,spacing,linf,l2,evaluated_nodes,excluded_nodes\n";

  for (double s : f.spacings) {
    const double n_real = f.extent / s;
    const int n = static_cast<int>(std::lround(n_real));
    if (std::abs(n_real - n) > 1e-9)
      throw SpecError("--extent must be an integer multiple of every spacing");
    Grid grid(f.x0, f.y0, n + 1, n + 1, s);

    CheckOptions opts;
    std::optional<JacobianBundle> bundle;
    if (!f.map.empty()) {
      AnalyticMap m = parse_map_spec(f.map);
      bundle.emplace(jacobian_bundle(m, grid, metric));
    } else {
      AnalyticMap m = parse_map_spec(f.boundary);
      SolverConfig cfg;
      cfg.tol = std::min(f.solver_tol, 0.05 * s * s);
      HarmonicSolution sol = solve_harmonic(boundary_from_map(m, grid), metric, cfg);
      if (!sol.converged) {
        std::cerr << "refine: solver " << status_name(sol.status) << " at spacing " << fmt17(s)
                  << "\n";
        return kExitDiverged;
      }
      opts.extra_tol = cfg.tol;
      bundle.emplace(jacobian_bundle(sol.h, metric));
    }

    std::vector<CheckResult> results = run_checks(*bundle, domain, checks, opts, 5, f.seed);
    for (const auto& r : results) {
      if (linfs.find(r.report.name) == linfs.end()) row_order.push_back(r.report.name);
      linfs[r.report.name].push_back(r.report.linf);
      table << r.report.name << ',' << fmt17(s) << ',' << fmt17(r.report.linf) << ','
            << fmt17(r.report.l2) << ',' << r.report.evaluated_nodes << ','
            << r.report.excluded_nodes << '\n';
    }
  }

  bool all_pass = true;
  std::ostringstream slopes;
  slopes << "check,slope,coarsest_linf,passed\n";
  for (const auto& name : row_order) {
    const auto& errs = linfs[name];
    if (errs.size() != f.spacings.size()) {
      all_pass = false;
      slopes << name << ",nan,nan,0\n";
      continue;
    }
    const double slope = loglog_slope(f.spacings, errs);
    const bool pass = refinement_pass(f.spacings, errs);
    all_pass = all_pass && pass;
    slopes << name << ',' << fmt17(slope) << ',' << fmt17(errs.front()) << ',' << (pass ? 1 : 0)
           << '\n';
    std::cout << (pass ? "PASS " : "FAIL ") << name << " slope=" << fmt17(slope)
              << " coarsest_linf=" << fmt17(errs.front()) << "\n";
  }

  fs::create_directories(f.out);
  write_file_atomic((fs::path(f.out) / "refine_table.csv").string(), table.str());
  write_file_atomic((fs::path(f.out) / "refine_slopes.csv").string(), slopes.str());
  return all_pass ? kExitPass : kExitCheckFailed;
}

int run_metric_check(const MetricCheckFlags& f) {
  ConformalMetric metric = parse_metric_spec(f.metric);
  std::vector<Complex> samples = seeded_samples(metric, f.samples, f.seed);
  MetricConsistency c = verify_metric_consistency(metric, samples);
  const bool pass = c.max_err() <= f.tol;
  const double k_first = metric.curvature(samples.front());

  std::ostringstream ss;
  ss << "{\"metric\":\"" << json_escape(f.metric) << "\",\"samples\":" << f.samples
     << ",\"curvature_err\":" << fmt17(c.curvature_err) << ",\"logderiv_err\":"
     << fmt17(c.logderiv_err) << ",\"tolerance\":" << fmt17(f.tol)
     << ",\"passed\":" << (pass ? "true" : "false") << "}\n";
  fs::create_directories(f.out);
  write_file_atomic((fs::path(f.out) / "metric_check.json").string(), ss.str());

  std::cout << (pass ? "PASS" : "FAIL") << " metric-check " << f.metric << ": K("
            << fmt17(samples.front().real()) << "," << fmt17(samples.front().imag())
            << ") = " << fmt17(k_first) << ", max curvature err " << fmt17(c.curvature_err)
            << ", max logderiv err " << fmt17(c.logderiv_err) << " over " << f.samples
            << " samples\n";
  return pass ? kExitPass : kExitCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"hmlab: harmonic maps between conformal metrics, with identity verification"};
  app.require_subcommand(1);

  SolveFlags sf;
  VerifyFlags vf;
  RefineFlags rf;
  MetricCheckFlags mf;

  auto add_grid_flags = [](CLI::App* cmd, GridFlags& g) {
    cmd->add_option("--nx", g.nx, "grid nodes in x");
    cmd->add_option("--ny", g.ny, "grid nodes in y");
    cmd->add_option("--x0", g.x0, "left coordinate");
    cmd->add_option("--y0", g.y0, "bottom coordinate");
    cmd->add_option("--s", g.s, "uniform spacing");
  };

  auto* solve = app.add_subcommand("solve", "Dirichlet solve of the harmonic-map equation");
  solve->add_option("--metric", sf.metric, "target metric spec")->required();
  solve->add_option("--boundary", sf.boundary, "boundary map spec")->required();
  add_grid_flags(solve, sf.grid);
  solve->add_option("--tol", sf.tol, "residual L-inf target");
  solve->add_option("--max-iters", sf.max_iters, "outer iteration cap");
  solve->add_option("--omega", sf.omega, "damping in (0, 1]");
  solve->add_option("--sweep", sf.sweep, "jacobi | gauss_seidel_rowmajor");
  solve->add_option("--out", sf.out, "output directory");

  auto* verify = app.add_subcommand("verify", "evaluate identity checks on a map or field");
  verify->add_option("--metric", vf.metric, "target metric spec");
  verify->add_option("--domain-metric", vf.domain_metric, "domain metric (sigma-bochner)");
  verify->add_option("--map", vf.map, "analytic map spec");
  verify->add_option("--solution", vf.solution, "HMFIELD solution file");
  verify->add_option("--field", vf.field, "HMFIELD raw field file");
  add_grid_flags(verify, vf.grid);
  verify->add_option("--checks", vf.checks, "comma list or 'all'")->delimiter(',')->required();
  verify->add_flag("--csv", vf.csv, "write per-node CSV per check");
  verify->add_option("--tol", vf.tolerance, "override residual tolerance");
  verify->add_option("--extra-tol", vf.extra_tol, "additive slack (e.g. solver tol)");
  verify->add_option("--slack", vf.slack, "sign-check slack override");
  verify->add_option("--floor", vf.floor_rel, "degeneracy floor (relative)");
  verify->add_option("--subrects", vf.subrects, "minimum-principle sub-rectangles");
  verify->add_option("--seed", vf.seed, "seed for sub-rectangle placement");
  verify->add_option("--out", vf.out, "output directory");

  auto* refine = app.add_subcommand("refine", "grid-refinement study of the checks");
  refine->add_option("--metric", rf.metric, "target metric spec");
  refine->add_option("--domain-metric", rf.domain_metric, "domain metric spec");
  refine->add_option("--map", rf.map, "analytic map spec");
  refine->add_option("--boundary", rf.boundary, "boundary map spec (solver route)");
  refine->add_option("--x0", rf.x0, "left coordinate");
  refine->add_option("--y0", rf.y0, "bottom coordinate");
  refine->add_option("--extent", rf.extent, "side length of the square region");
  refine->add_option("--spacings", rf.spacings, "halving spacing list")->delimiter(',')->required();
  refine->add_option("--checks", rf.checks, "comma list or 'all'")->delimiter(',')->required();
  refine->add_option("--tol", rf.solver_tol, "solver tolerance cap (staged below s^2)");
  refine->add_option("--seed", rf.seed, "seed");
  refine->add_option("--out", rf.out, "output directory");

  auto* mcheck = app.add_subcommand("metric-check", "metric self-consistency by Richardson FD");
  mcheck->add_option("--metric", mf.metric, "metric spec")->required();
  mcheck->add_option("--samples", mf.samples, "number of seeded samples");
  mcheck->add_option("--seed", mf.seed, "sample seed");
  mcheck->add_option("--tol", mf.tol, "max allowed inconsistency");
  mcheck->add_option("--out", mf.out, "output directory");

  int rc = kExitPass;
  solve->callback([&] { rc = run_solve(sf); });
  verify->callback([&] { rc = run_verify(vf); });
  refine->callback([&] { rc = run_refine(rf); });
  mcheck->callback([&] { rc = run_metric_check(mf); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitSpecError;
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitSpecError;
  } catch (const FieldFormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitSpecError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpecError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpecError;
  }
  return rc;
}

}  // namespace hmlab::cli
