#include "hmlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hmlab/util.hpp"

namespace hmlab {

namespace {

// Default residual-tolerance constants, calibrated by the shipped
// refinement studies: tolerance = C * s^2 (+ extra, e.g. solver tol).
namespace autotol {
constexpr double bochner = 50.0;
constexpr double sigma = 50.0;
constexpr double main_id = 50.0;
constexpr double presub = 50.0;
constexpr double bridge = 50.0;
constexpr double hopf = 50.0;
constexpr double radial = 200.0;
constexpr double quadform_rel = 1e-12;
constexpr double sign_slack = 1.0;  // * s, for the superharmonicity checks
}  // namespace autotol

double auto_tol(const CheckOptions& opts, double s, double c) {
  if (opts.tolerance >= 0.0) return opts.tolerance + opts.extra_tol;
  return c * s * s + opts.extra_tol;
}

double auto_slack(const CheckOptions& opts, double s) {
  return opts.slack >= 0.0 ? opts.slack : autotol::sign_slack * s;
}

long count_mask(const Mask& m) {
  long n = 0;
  for (auto v : m) n += v;
  return n;
}

IdentityReport make_report(const std::string& name, const RealField& residual,
                           const Mask& base_mask, double tol) {
  IdentityReport r;
  r.name = name;
  r.spacing = residual.grid().s;
  r.tolerance_used = tol;
  double sum2 = 0.0;
  for (std::size_t k = 0; k < residual.values().size(); ++k) {
    if (!residual.mask()[k]) continue;
    ++r.evaluated_nodes;
    const double v = residual.values()[k];
    r.linf = std::max(r.linf, v);
    sum2 += v * v;
  }
  r.excluded_nodes = count_mask(base_mask) - r.evaluated_nodes;
  r.l2 = r.evaluated_nodes > 0 ? std::sqrt(sum2 / r.evaluated_nodes) : 0.0;
  r.empty = (r.evaluated_nodes == 0);
  r.passed = !r.empty && r.linf <= tol;
  return r;
}

struct BracketValue {
  bool evaluable = false;
  double square = 0.0;      // |aB - a^-1 A|^2
  double three_term = 0.0;  // a^2|B|^2 + a^-2|A|^2 - 2Re(A conj B)
  double decomposed = 0.0;  // (a|B| - a^-1|A|)^2 + 2(|A||B| - Re(A conj B))
  double scale = 0.0;       // a^2|B|^2 + a^-2|A|^2, for relative comparisons
};

// Evaluate the three algebraically equal bracket forms with a = |h_z|/|h_zbar|.
// Exactly-zero factors short-circuit (a holomorphic family has B == 0 and
// |h_zbar| == 0 along the whole grid; its bracket is identically zero).
BracketValue bracket_at(Complex A, Complex B, double az2, double bz2) {
  BracketValue out;
  const bool b_zero = (B == Complex{});
  const bool a_zero = (A == Complex{});
  if ((!b_zero && bz2 == 0.0) || (!a_zero && az2 == 0.0)) return out;  // not evaluable
  out.evaluable = true;
  const double t1 = b_zero ? 0.0 : (az2 / bz2) * std::norm(B);
  const double t2 = a_zero ? 0.0 : (bz2 / az2) * std::norm(A);
  const Complex cross = A * std::conj(B);
  out.three_term = t1 + t2 - 2.0 * cross.real();
  const Complex u = b_zero ? Complex{} : B * std::sqrt(az2 / bz2);
  const Complex v = a_zero ? Complex{} : A * std::sqrt(bz2 / az2);
  out.square = std::norm(u - v);
  const double tb = b_zero ? 0.0 : std::abs(B) * std::sqrt(az2 / bz2);
  const double ta = a_zero ? 0.0 : std::abs(A) * std::sqrt(bz2 / az2);
  const double d = tb - ta;
  out.decomposed = d * d + 2.0 * (std::abs(cross) - cross.real());
  out.scale = t1 + t2;
  return out;
}

Mask intersect(const Mask& a, const Mask& b) {
  Mask out(a.size(), 0);
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (a[k] && b[k]) ? 1 : 0;
  return out;
}

[[noreturn]] void throw_not_sense_preserving(const Grid& g, const std::vector<std::size_t>& bad) {
  std::ostringstream ss;
  ss << "not sense-preserving on evaluated set; J <= 0 at";
  int shown = 0;
  for (std::size_t k : bad) {
    if (shown++ == 5) {
      ss << " ...";
      break;
    }
    const int j = static_cast<int>(k) / g.nx;
    const int i = static_cast<int>(k) % g.nx;
    ss << " (" << i << "," << j << ")";
  }
  ss << " [" << bad.size() << " nodes]";
  throw NotSensePreservingError(ss.str());
}

}  // namespace

std::string IdentityReport::to_json() const {
  std::ostringstream ss;
  ss << "{\"name\":\"" << name << "\",\"linf\":" << fmt17(linf) << ",\"l2\":" << fmt17(l2)
     << ",\"evaluated_nodes\":" << evaluated_nodes << ",\"excluded_nodes\":" << excluded_nodes
     << ",\"spacing\":" << fmt17(spacing) << ",\"passed\":" << (passed ? "true" : "false")
     << ",\"tolerance_used\":" << fmt17(tolerance_used) << ",\"empty\":" << (empty ? "true" : "false")
     << "}";
  return ss.str();
}

std::string check_csv(const CheckResult& r) {
  const Grid& g = r.fields.residual.grid();
  std::ostringstream ss;
  ss << "i,j,x,y,lhs,rhs,residual,excluded\n";
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!r.fields.base_mask.empty() && !r.fields.base_mask[k]) continue;
      const bool eval = r.fields.residual.mask()[k] != 0;
      ss << i << ',' << j << ',' << fmt17(g.x(i)) << ',' << fmt17(g.y(j)) << ','
         << fmt17(eval ? r.fields.lhs.values()[k] : 0.0) << ','
         << fmt17(eval ? r.fields.rhs.values()[k] : 0.0) << ','
         << fmt17(eval ? r.fields.residual.values()[k] : 0.0) << ',' << (eval ? 0 : 1) << '\n';
    }
  }
  return ss.str();
}

JacobianBundle jacobian_bundle(const ComplexField& h, const ConformalMetric& metric,
                               double floor_rel) {
  h.require_valid("jacobian_bundle");
  for (int j = 0; j < h.ny(); ++j)
    for (int i = 0; i < h.nx(); ++i)
      if (h.valid(i, j) && !metric.in_domain(h.at(i, j)))
        throw DomainGuardError("jacobian_bundle: map value outside metric domain at node (" +
                               std::to_string(i) + ", " + std::to_string(j) + ")");

  JacobianBundle b{metric,
                   h,
                   wirtinger_dz(h),
                   wirtinger_dzbar(h),
                   ComplexField(h.grid()),
                   ComplexField(h.grid()),
                   RealField(h.grid()),
                   RealField(h.grid()),
                   RealField(h.grid()),
                   RealField(h.grid()),
                   RealField(h.grid()),
                   RealField(h.grid()),
                   ComplexField(h.grid()),
                   ComplexField(h.grid()),
                   Mask(h.grid().size(), 0),
                   floor_rel,
                   0.0,
                   0.0,
                   false};

  SecondDerivatives sd = second_derivatives(h);
  b.A = combine<Complex>(combine<Complex>(sd.zz, b.hz, [](Complex zz, Complex hz) {
                           return zz * std::conj(hz);
                         }),
                         combine<Complex>(b.hz, sd.zzbar, [](Complex hz, Complex zzb) {
                           return hz * std::conj(zzb);
                         }),
                         [](Complex p, Complex q) { return p + q; });
  b.B = combine<Complex>(combine<Complex>(sd.zzbar, b.hzb, [](Complex zzb, Complex hzb) {
                           return zzb * std::conj(hzb);
                         }),
                         combine<Complex>(b.hzb, sd.zbarzbar, [](Complex hzb, Complex zbzb) {
                           return hzb * std::conj(zbzb);
                         }),
                         [](Complex p, Complex q) { return p + q; });

  b.rho_h = transform<double>(h, [&metric](Complex w) { return metric.rho(w); });
  b.k2_h = transform<double>(h, [&metric](Complex w) { return metric.curvature(w); });
  b.J0 = combine<double>(b.hz, b.hzb,
                         [](Complex a, Complex c) { return std::norm(a) - std::norm(c); });
  b.D0 = combine<double>(b.hz, b.hzb,
                         [](Complex a, Complex c) { return std::norm(a) + std::norm(c); });
  b.J = combine<double>(b.rho_h, b.J0, [](double r, double j0) { return r * r * j0; });
  b.D = combine<double>(b.rho_h, b.D0, [](double r, double d0) { return r * r * d0; });
  b.dh = combine<Complex>(b.rho_h, b.hz, [](double r, Complex v) { return r * v; });
  b.dbh = combine<Complex>(b.rho_h, b.hzb, [](double r, Complex v) { return r * v; });

  // Relative degeneracy floors, strict comparison: an identically-zero
  // derivative field (exact holomorphic route) marks nothing degenerate and
  // is handled by the exact-zero bracket rule instead.
  double mz = 0.0, mzb = 0.0;
  for (std::size_t k = 0; k < b.hz.values().size(); ++k) {
    if (!b.hz.mask()[k]) continue;
    mz = std::max(mz, std::abs(b.hz.values()[k]));
    mzb = std::max(mzb, std::abs(b.hzb.values()[k]));
  }
  b.floor_z = floor_rel * mz;
  b.floor_zb = floor_rel * mzb;
  for (std::size_t k = 0; k < b.hz.values().size(); ++k) {
    if (!b.hz.mask()[k]) continue;
    if (std::abs(b.hz.values()[k]) < b.floor_z || std::abs(b.hzb.values()[k]) < b.floor_zb)
      b.degenerate[k] = 1;
  }
  return b;
}

JacobianBundle jacobian_bundle(const AnalyticMap& m, const Grid& grid,
                               const ConformalMetric& metric, double floor_rel) {
  MapSamples s = sample_with_derivatives(m, grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      if (!metric.in_domain(s.h.at(i, j)))
        throw DomainGuardError("jacobian_bundle: map value outside metric domain at node (" +
                               std::to_string(i) + ", " + std::to_string(j) + ")");

  JacobianBundle b{metric,
                   s.h,
                   s.hz,
                   s.hzb,
                   ComplexField(grid),
                   ComplexField(grid),
                   RealField(grid),
                   RealField(grid),
                   RealField(grid),
                   RealField(grid),
                   RealField(grid),
                   RealField(grid),
                   ComplexField(grid),
                   ComplexField(grid),
                   Mask(grid.size(), 0),
                   floor_rel,
                   0.0,
                   0.0,
                   true};

  // Exact second-derivative assembly: A = h_zz conj(h_z) + h_z conj(h_zzbar),
  // B = h_zzbar conj(h_zbar) + h_zbar conj(h_zbzb).
  b.A = combine<Complex>(combine<Complex>(s.hzz, s.hz, [](Complex zz, Complex hz) {
                           return zz * std::conj(hz);
                         }),
                         combine<Complex>(s.hz, s.hzzb, [](Complex hz, Complex zzb) {
                           return hz * std::conj(zzb);
                         }),
                         [](Complex p, Complex q) { return p + q; });
  b.B = combine<Complex>(combine<Complex>(s.hzzb, s.hzb, [](Complex zzb, Complex hzb) {
                           return zzb * std::conj(hzb);
                         }),
                         combine<Complex>(s.hzb, s.hzbzb, [](Complex hzb, Complex zbzb) {
                           return hzb * std::conj(zbzb);
                         }),
                         [](Complex p, Complex q) { return p + q; });

  b.rho_h = transform<double>(s.h, [&metric](Complex w) { return metric.rho(w); });
  b.k2_h = transform<double>(s.h, [&metric](Complex w) { return metric.curvature(w); });
  b.J0 = combine<double>(b.hz, b.hzb,
                         [](Complex a, Complex c) { return std::norm(a) - std::norm(c); });
  b.D0 = combine<double>(b.hz, b.hzb,
                         [](Complex a, Complex c) { return std::norm(a) + std::norm(c); });
  b.J = combine<double>(b.rho_h, b.J0, [](double r, double j0) { return r * r * j0; });
  b.D = combine<double>(b.rho_h, b.D0, [](double r, double d0) { return r * r * d0; });
  b.dh = combine<Complex>(b.rho_h, b.hz, [](double r, Complex v) { return r * v; });
  b.dbh = combine<Complex>(b.rho_h, b.hzb, [](double r, Complex v) { return r * v; });

  double mz = 0.0, mzb = 0.0;
  for (std::size_t k = 0; k < b.hz.values().size(); ++k) {
    mz = std::max(mz, std::abs(b.hz.values()[k]));
    mzb = std::max(mzb, std::abs(b.hzb.values()[k]));
  }
  b.floor_z = floor_rel * mz;
  b.floor_zb = floor_rel * mzb;
  for (std::size_t k = 0; k < b.hz.values().size(); ++k)
    if (std::abs(b.hz.values()[k]) < b.floor_z || std::abs(b.hzb.values()[k]) < b.floor_zb)
      b.degenerate[k] = 1;
  return b;
}

std::pair<ComplexField, ComplexField> ab_direct(const JacobianBundle& b) {
  RealField az2 = transform<double>(b.hz, [](Complex v) { return std::norm(v); });
  RealField bz2 = transform<double>(b.hzb, [](Complex v) { return std::norm(v); });
  return {wirtinger_dz(az2), wirtinger_dz(bz2)};
}

SigmaBundle sigma_bundle(const JacobianBundle& b, const ConformalMetric& domain) {
  const Grid& g = b.grid();
  RealField sigma(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) sigma.at(i, j) = domain.rho(g.node(i, j));
  SigmaBundle s{combine<Complex>(b.dh, sigma, [](Complex v, double sg) { return v / sg; }),
                combine<Complex>(b.dbh, sigma, [](Complex v, double sg) { return v / sg; }),
                combine<double>(b.J, sigma, [](double jv, double sg) { return jv / (sg * sg); })};
  return s;
}

RealField sigma_laplacian(const RealField& f, const ConformalMetric& domain) {
  RealField lap = laplacian(f);
  const Grid& g = f.grid();
  RealField out(g, 0.0, false);
  out.mask() = lap.mask();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (out.valid(i, j)) {
        const double sg = domain.rho(g.node(i, j));
        out.at(i, j) = lap.at(i, j) / (sg * sg);
      }
  return out;
}

namespace {

// Shared Bochner machinery: Lap(log |X|^2) [/ sigma^2] vs K1 -+ K2 J[sigma].
CheckResult bochner_one(const JacobianBundle& b, const ComplexField& X, bool is_dbh,
                        const RealField* sigma, const RealField* k1, const std::string& name,
                        const CheckOptions& opts, double tol_c) {
  const Grid& g = b.grid();
  RealField modsq = transform<double>(X, [](Complex v) { return std::norm(v); });
  // Degeneracy floor on the matching first derivative, plus an absolute
  // zero guard before the log.
  const double floor = is_dbh ? b.floor_zb : b.floor_z;
  const ComplexField& deriv = is_dbh ? b.hzb : b.hz;
  RealField logf(g, 0.0, false);
  for (std::size_t k = 0; k < modsq.values().size(); ++k) {
    if (!modsq.mask()[k]) continue;
    const double mag = std::abs(deriv.values()[k]);
    if (mag < floor || modsq.values()[k] <= 0.0) continue;
    logf.values()[k] = std::log(modsq.values()[k]);
    logf.mask()[k] = 1;
  }

  Mask base = erode_mask(g, intersect(modsq.mask(), b.J.mask()), 1);
  const double tol = auto_tol(opts, g.s, tol_c);

  CheckResult out;
  out.fields.lhs = RealField(g, 0.0, false);
  out.fields.rhs = RealField(g, 0.0, false);
  out.fields.residual = RealField(g, 0.0, false);
  out.fields.base_mask = base;

  if (logf.valid_count() == 0) {
    out.report = make_report(name, out.fields.residual, base, tol);
    return out;
  }

  RealField lap = laplacian(logf);
  if (sigma) {
    lap = combine<double>(lap, *sigma, [](double v, double sg) { return v / (sg * sg); });
  }
  const double sign = is_dbh ? +1.0 : -1.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!lap.mask()[k] || !b.J.mask()[k]) continue;
      double jv = b.J.values()[k];
      if (sigma) {
        const double sg = sigma->values()[k];
        jv /= sg * sg;
      }
      double rhs = sign * (b.k2_h.values()[k] * jv);
      if (k1) rhs = k1->values()[k] + rhs;
      const double lhs = lap.values()[k];
      out.fields.lhs.values()[k] = lhs;
      out.fields.rhs.values()[k] = rhs;
      out.fields.residual.values()[k] = std::abs(lhs - rhs);
      out.fields.lhs.mask()[k] = out.fields.rhs.mask()[k] = out.fields.residual.mask()[k] = 1;
    }
  }
  out.report = make_report(name, out.fields.residual, base, tol);
  return out;
}

}  // namespace

std::pair<CheckResult, CheckResult> bochner_residuals(const JacobianBundle& b,
                                                      const CheckOptions& opts) {
  CheckResult dh = bochner_one(b, b.dh, false, nullptr, nullptr, "bochner_dh", opts,
                               autotol::bochner);
  CheckResult dbh = bochner_one(b, b.dbh, true, nullptr, nullptr, "bochner_dbh", opts,
                                autotol::bochner);
  return {std::move(dh), std::move(dbh)};
}

std::pair<CheckResult, CheckResult> sigma_bochner_residuals(const JacobianBundle& b,
                                                            const ConformalMetric& domain,
                                                            const CheckOptions& opts) {
  const Grid& g = b.grid();
  RealField sigma(g);
  RealField k1(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const Complex z = g.node(i, j);
      sigma.at(i, j) = domain.rho(z);
      k1.at(i, j) = domain.curvature(z);
    }
  }
  SigmaBundle sb = sigma_bundle(b, domain);
  CheckResult dh = bochner_one(b, sb.dsh, false, &sigma, &k1, "sigma_bochner_dh", opts,
                               autotol::sigma);
  CheckResult dbh = bochner_one(b, sb.dbsh, true, &sigma, &k1, "sigma_bochner_dbh", opts,
                                autotol::sigma);
  return {std::move(dh), std::move(dbh)};
}

namespace {

struct MainAssembly {
  RealField lhs;        // (|grad J|^2 - J Lap J) / J^2   (or un-divided)
  RealField rhs;
  RealField residual;
  Mask base;
  double bracket_rel_err = 0.0;
  std::vector<std::size_t> negative_J;  // non-degenerate nodes with J <= 0
};

MainAssembly assemble_main(const JacobianBundle& b, bool divide_by_J2, bool require_positive_J) {
  const Grid& g = b.grid();
  RealField gradJ2 = grad_norm_sq(b.J);
  RealField lapJ = laplacian(b.J);

  MainAssembly out{RealField(g, 0.0, false), RealField(g, 0.0, false), RealField(g, 0.0, false),
                   Mask(), 0.0, {}};
  out.base = intersect(intersect(gradJ2.mask(), b.A.mask()), b.B.mask());

  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!out.base[k]) continue;
      if (b.degenerate[k]) continue;
      const double az2 = std::norm(b.hz.values()[k]);
      const double bz2 = std::norm(b.hzb.values()[k]);
      const BracketValue br = bracket_at(b.A.values()[k], b.B.values()[k], az2, bz2);
      if (!br.evaluable) continue;
      const double jv = b.J.values()[k];
      if (require_positive_J && jv <= 0.0) {
        out.negative_J.push_back(k);
        continue;
      }
      const double rho = b.rho_h.values()[k];
      const double rho4 = rho * rho * rho * rho;
      double lhs = gradJ2.values()[k] - jv * lapJ.values()[k];
      double rhs;
      if (divide_by_J2) {
        lhs /= jv * jv;
        rhs = b.k2_h.values()[k] * b.D.values()[k] + (4.0 * rho4 / (jv * jv)) * br.square;
      } else {
        rhs = b.k2_h.values()[k] * jv * jv * b.D.values()[k] + 4.0 * rho4 * br.square;
      }
      const double denom = br.scale > 0.0 ? br.scale : 1.0;
      out.bracket_rel_err =
          std::max(out.bracket_rel_err, std::abs(br.three_term - br.square) / denom);
      out.lhs.values()[k] = lhs;
      out.rhs.values()[k] = rhs;
      out.residual.values()[k] = std::abs(lhs - rhs);
      out.lhs.mask()[k] = out.rhs.mask()[k] = out.residual.mask()[k] = 1;
    }
  }
  return out;
}

}  // namespace

CheckResult main_identity_residual(const JacobianBundle& b, const CheckOptions& opts) {
  MainAssembly a = assemble_main(b, /*divide_by_J2=*/true, /*require_positive_J=*/true);
  if (!a.negative_J.empty()) throw_not_sense_preserving(b.grid(), a.negative_J);
  CheckResult out;
  out.fields = {std::move(a.lhs), std::move(a.rhs), std::move(a.residual), std::move(a.base)};
  out.extras["bracket_rel_err_max"] = a.bracket_rel_err;
  out.report = make_report("main", out.fields.residual, out.fields.base_mask,
                           auto_tol(opts, b.spacing(), autotol::main_id));
  return out;
}

CheckResult presubtraction_identity_residual(const JacobianBundle& b, const CheckOptions& opts) {
  MainAssembly a = assemble_main(b, /*divide_by_J2=*/false, /*require_positive_J=*/false);
  CheckResult out;
  out.fields = {std::move(a.lhs), std::move(a.rhs), std::move(a.residual), std::move(a.base)};
  out.extras["bracket_rel_err_max"] = a.bracket_rel_err;
  out.report = make_report("presub", out.fields.residual, out.fields.base_mask,
                           auto_tol(opts, b.spacing(), autotol::presub));
  return out;
}

CheckResult log_bridge_check(const JacobianBundle& b, const CheckOptions& opts) {
  const Grid& g = b.grid();
  RealField gradJ2 = grad_norm_sq(b.J);
  RealField lapJ = laplacian(b.J);
  RealField logJ(g, 0.0, false);
  for (std::size_t k = 0; k < b.J.values().size(); ++k)
    if (b.J.mask()[k] && b.J.values()[k] > 0.0) {
      logJ.values()[k] = std::log(b.J.values()[k]);
      logJ.mask()[k] = 1;
    }
  CheckResult out;
  out.fields.lhs = RealField(g, 0.0, false);
  out.fields.rhs = RealField(g, 0.0, false);
  out.fields.residual = RealField(g, 0.0, false);
  out.fields.base_mask = erode_mask(g, b.J.mask(), 1);
  if (logJ.valid_count() == 0) {
    out.report = make_report("bridge", out.fields.residual, out.fields.base_mask,
                             auto_tol(opts, g.s, autotol::bridge));
    return out;
  }
  RealField lapLogJ = laplacian(logJ);
  for (std::size_t k = 0; k < lapLogJ.values().size(); ++k) {
    if (!lapLogJ.mask()[k] || !gradJ2.mask()[k]) continue;
    const double jv = b.J.values()[k];
    if (jv <= 0.0) continue;
    const double bridge = (gradJ2.values()[k] - jv * lapJ.values()[k]) / (jv * jv);
    const double direct = -lapLogJ.values()[k];
    out.fields.lhs.values()[k] = bridge;
    out.fields.rhs.values()[k] = direct;
    out.fields.residual.values()[k] = std::abs(bridge - direct);
    out.fields.lhs.mask()[k] = out.fields.rhs.mask()[k] = out.fields.residual.mask()[k] = 1;
  }
  out.report = make_report("bridge", out.fields.residual, out.fields.base_mask,
                           auto_tol(opts, g.s, autotol::bridge));
  return out;
}

std::pair<RealField, CheckResult> quadratic_form(const JacobianBundle& b,
                                                 const CheckOptions& opts) {
  const Grid& g = b.grid();
  RealField Q(g, 0.0, false);
  CheckResult out;
  out.fields.lhs = RealField(g, 0.0, false);   // decomposed form
  out.fields.rhs = RealField(g, 0.0, false);   // single-square form
  out.fields.residual = RealField(g, 0.0, false);  // relative disagreement
  out.fields.base_mask = intersect(b.A.mask(), b.B.mask());
  double min_q = 0.0;
  for (std::size_t k = 0; k < Q.values().size(); ++k) {
    if (!out.fields.base_mask[k]) continue;
    if (b.degenerate[k]) continue;
    const double az2 = std::norm(b.hz.values()[k]);
    const double bz2 = std::norm(b.hzb.values()[k]);
    const BracketValue br = bracket_at(b.A.values()[k], b.B.values()[k], az2, bz2);
    if (!br.evaluable) continue;
    Q.values()[k] = br.decomposed;
    Q.mask()[k] = 1;
    min_q = std::min(min_q, br.decomposed);
    const double denom = br.scale > 0.0 ? br.scale : 1.0;
    out.fields.lhs.values()[k] = br.decomposed;
    out.fields.rhs.values()[k] = br.square;
    out.fields.residual.values()[k] = std::abs(br.decomposed - br.square) / denom;
    out.fields.lhs.mask()[k] = out.fields.rhs.mask()[k] = out.fields.residual.mask()[k] = 1;
  }
  const double tol = opts.tolerance >= 0.0 ? opts.tolerance : autotol::quadform_rel;
  out.report = make_report("quadform", out.fields.residual, out.fields.base_mask, tol);
  out.extras["min_Q"] = min_q;
  if (min_q < 0.0) out.report.passed = false;
  return {std::move(Q), std::move(out)};
}

CheckResult superharmonicity_check(const JacobianBundle& b, const CheckOptions& opts) {
  const Grid& g = b.grid();
  // Hypothesis: target curvature non-negative over the image.
  for (std::size_t k = 0; k < b.k2_h.values().size(); ++k)
    if (b.k2_h.mask()[k] && b.k2_h.values()[k] < 0.0)
      throw HypothesisError(
          "superharmonicity_check: target curvature is negative at an image point");

  RealField logJ(g, 0.0, false);
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < b.J.values().size(); ++k) {
    if (!b.J.mask()[k] || b.degenerate[k]) continue;
    if (b.J.values()[k] <= 0.0) {
      bad.push_back(k);
      continue;
    }
    logJ.values()[k] = std::log(b.J.values()[k]);
    logJ.mask()[k] = 1;
  }
  if (!bad.empty()) throw_not_sense_preserving(g, bad);

  const double slack = auto_slack(opts, g.s);
  CheckResult out;
  out.fields.lhs = RealField(g, 0.0, false);
  out.fields.rhs = RealField(g, 0.0, false);
  out.fields.residual = RealField(g, 0.0, false);
  out.fields.base_mask = erode_mask(g, b.J.mask(), 1);

  RealField lap = laplacian(logJ);
  double max_signed = -std::numeric_limits<double>::infinity();
  double viol2 = 0.0;
  long evaluated = 0;
  for (std::size_t k = 0; k < lap.values().size(); ++k) {
    if (!lap.mask()[k]) continue;
    ++evaluated;
    const double v = lap.values()[k];
    max_signed = std::max(max_signed, v);
    const double viol = std::max(v, 0.0);
    viol2 += viol * viol;
    out.fields.lhs.values()[k] = v;
    out.fields.residual.values()[k] = viol;
    out.fields.lhs.mask()[k] = out.fields.rhs.mask()[k] = out.fields.residual.mask()[k] = 1;
  }
  IdentityReport r;
  r.name = "superharm";
  r.spacing = g.s;
  r.tolerance_used = slack;
  r.evaluated_nodes = evaluated;
  r.excluded_nodes = count_mask(out.fields.base_mask) - evaluated;
  r.empty = (evaluated == 0);
  r.linf = r.empty ? 0.0 : max_signed;  // signed max of Lap log J
  r.l2 = evaluated ? std::sqrt(viol2 / evaluated) : 0.0;
  r.passed = !r.empty && r.linf <= slack;
  out.report = r;
  return out;
}

CheckResult minimum_principle_check(const RealField& J, const IndexRect& rect,
                                    const CheckOptions& opts) {
  const Grid& g = J.grid();
  if (rect.i0 < 0 || rect.j0 < 0 || rect.i1 >= g.nx || rect.j1 >= g.ny || rect.i0 + 2 > rect.i1 ||
      rect.j0 + 2 > rect.j1)
    throw Error("minimum_principle_check: sub-rectangle is degenerate or out of bounds");
  for (int j = rect.j0; j <= rect.j1; ++j)
    for (int i = rect.i0; i <= rect.i1; ++i)
      if (!J.valid(i, j))
        throw Error("minimum_principle_check: sub-rectangle exceeds the valid region");

  double min_bd = std::numeric_limits<double>::infinity();
  double min_int = std::numeric_limits<double>::infinity();
  int bi = rect.i0, bj = rect.j0, ii = rect.i0 + 1, ij = rect.j0 + 1;
  for (int j = rect.j0; j <= rect.j1; ++j) {
    for (int i = rect.i0; i <= rect.i1; ++i) {
      const bool on_bd = (i == rect.i0 || i == rect.i1 || j == rect.j0 || j == rect.j1);
      const double v = J.at(i, j);
      if (on_bd && v < min_bd) {
        min_bd = v;
        bi = i;
        bj = j;
      }
      if (!on_bd && v < min_int) {
        min_int = v;
        ii = i;
        ij = j;
      }
    }
  }

  const double slack = auto_slack(opts, g.s);
  CheckResult out;
  out.fields.lhs = RealField(g, 0.0, false);
  out.fields.rhs = RealField(g, 0.0, false);
  out.fields.residual = RealField(g, 0.0, false);
  out.fields.base_mask.assign(g.size(), 0);
  long evaluated = 0;
  for (int j = rect.j0; j <= rect.j1; ++j)
    for (int i = rect.i0; i <= rect.i1; ++i) {
      const std::size_t k = g.index(i, j);
      out.fields.base_mask[k] = 1;
      out.fields.lhs.values()[k] = J.at(i, j);
      out.fields.rhs.values()[k] = min_bd;
      out.fields.residual.values()[k] = std::max(min_bd - J.at(i, j), 0.0);
      out.fields.lhs.mask()[k] = out.fields.rhs.mask()[k] = out.fields.residual.mask()[k] = 1;
      ++evaluated;
    }

  IdentityReport r;
  r.name = "minprin";
  r.spacing = g.s;
  r.tolerance_used = slack;
  r.evaluated_nodes = evaluated;
  r.excluded_nodes = 0;
  r.linf = min_bd - min_int;  // > slack means an interior dip below the edge
  r.l2 = 0.0;
  r.passed = r.linf <= slack;
  out.report = r;
  out.extras["interior_min"] = min_int;
  out.extras["boundary_min"] = min_bd;
  out.extras["interior_argmin_i"] = ii;
  out.extras["interior_argmin_j"] = ij;
  out.extras["boundary_argmin_i"] = bi;
  out.extras["boundary_argmin_j"] = bj;
  return out;
}

std::vector<IndexRect> seeded_subrects(const RealField& f, int n, std::uint64_t seed,
                                       int min_size) {
  // Bounding box of the valid region.
  const Grid& g = f.grid();
  int i0 = g.nx, j0 = g.ny, i1 = -1, j1 = -1;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (f.valid(i, j)) {
        i0 = std::min(i0, i);
        j0 = std::min(j0, j);
        i1 = std::max(i1, i);
        j1 = std::max(j1, j);
      }
  if (i1 - i0 + 1 < min_size || j1 - j0 + 1 < min_size)
    throw Error("seeded_subrects: valid region too small");
  std::mt19937_64 rng(seed);
  std::vector<IndexRect> out;
  int guardrail = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++guardrail > 100000) throw Error("seeded_subrects: cannot place sub-rectangles");
    std::uniform_int_distribution<int> wi(min_size, i1 - i0 + 1);
    std::uniform_int_distribution<int> wj(min_size, j1 - j0 + 1);
    const int w = wi(rng), h = wj(rng);
    std::uniform_int_distribution<int> pi(i0, i1 - w + 1);
    std::uniform_int_distribution<int> pj(j0, j1 - h + 1);
    IndexRect r{pi(rng), pj(rng), 0, 0};
    r.i1 = r.i0 + w - 1;
    r.j1 = r.j0 + h - 1;
    bool ok = true;
    for (int j = r.j0; j <= r.j1 && ok; ++j)
      for (int i = r.i0; i <= r.i1 && ok; ++i) ok = f.valid(i, j);
    if (ok) out.push_back(r);
  }
  return out;
}

CheckResult hopf_check(const JacobianBundle& b, const CheckOptions& opts) {
  const Grid& g = b.grid();
  ComplexField psi =
      combine<Complex>(combine<Complex>(b.rho_h, b.hz, [](double r, Complex v) { return r * r * v; }),
                       b.hzb, [](Complex p, Complex q) { return p * std::conj(q); });
  ComplexField dpsi = wirtinger_dzbar(psi);
  const double max_psi = max_abs(psi);
  // Natural magnitude of a non-conformal Psi, for the identically-zero test.
  double scale = 0.0;
  for (std::size_t k = 0; k < b.D.values().size(); ++k)
    if (b.D.mask()[k]) scale = std::max(scale, 0.5 * b.D.values()[k]);
  const bool absolute = (max_psi <= 1e-12 * scale) || scale == 0.0;

  CheckResult out;
  out.fields.lhs = RealField(g, 0.0, false);
  out.fields.rhs = RealField(g, 0.0, false);
  out.fields.residual = RealField(g, 0.0, false);
  out.fields.base_mask = dpsi.mask();
  for (std::size_t k = 0; k < dpsi.values().size(); ++k) {
    if (!dpsi.mask()[k]) continue;
    const double v = std::abs(dpsi.values()[k]);
    out.fields.lhs.values()[k] = v;
    out.fields.residual.values()[k] = absolute ? v : v / max_psi;
    out.fields.lhs.mask()[k] = out.fields.rhs.mask()[k] = out.fields.residual.mask()[k] = 1;
  }
  out.report = make_report("hopf", out.fields.residual, out.fields.base_mask,
                           auto_tol(opts, g.s, autotol::hopf));
  out.extras["max_psi"] = max_psi;
  out.extras["normalized"] = absolute ? 0.0 : 1.0;
  return out;
}

CheckResult hopf_check(const ComplexField& h, const ConformalMetric& metric,
                       const CheckOptions& opts) {
  return hopf_check(jacobian_bundle(h, metric), opts);
}

CheckResult hopf_check(const AnalyticMap& m, const Grid& grid, const ConformalMetric& metric,
                       const CheckOptions& opts) {
  return hopf_check(jacobian_bundle(m, grid, metric), opts);
}

CheckResult radial_identity_residual(const JacobianBundle& b, const CheckOptions& opts) {
  const auto& profile = b.metric.profile();
  if (!profile)
    throw Error("radial_identity_residual: metric was not built from a radial profile");
  const Grid& g = b.grid();

  // r = |h|, masked away from the origin before any stencil touches it
  // (the identity divides by r, so exact zeros are always excluded).
  RealField r_raw = transform<double>(b.h, [](Complex w) { return std::abs(w); });
  const double r_floor = opts.r_floor_rel * max_abs(r_raw);
  RealField r = r_raw;
  for (std::size_t k = 0; k < r.values().size(); ++k)
    if (r.mask()[k] && (r.values()[k] < r_floor || r.values()[k] <= 0.0)) r.mask()[k] = 0;

  CheckResult out;
  out.fields.lhs = RealField(g, 0.0, false);
  out.fields.rhs = RealField(g, 0.0, false);
  out.fields.residual = RealField(g, 0.0, false);
  out.fields.base_mask = intersect(erode_mask(g, intersect(b.J0.mask(), r_raw.mask()), 1),
                                   intersect(b.A.mask(), b.B.mask()));

  RealField gradr2(g, 0.0, false), lapr(g, 0.0, false);
  RealField gradJ02(g, 0.0, false), lapJ0(g, 0.0, false);
  try {
    gradr2 = grad_norm_sq(r);
    lapr = laplacian(r);
    gradJ02 = grad_norm_sq(b.J0);
    lapJ0 = laplacian(b.J0);
  } catch (const EmptyInteriorError&) {
    out.report = make_report("radial", out.fields.residual, out.fields.base_mask,
                             auto_tol(opts, g.s, autotol::radial));
    return out;  // everything masked near h = 0: flagged empty
  }

  std::vector<std::size_t> bad;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!out.fields.base_mask[k]) continue;
      if (b.degenerate[k]) continue;
      if (!gradr2.mask()[k] || !lapr.mask()[k] || !gradJ02.mask()[k] || !lapJ0.mask()[k]) continue;
      const double az2 = std::norm(b.hz.values()[k]);
      const double bz2 = std::norm(b.hzb.values()[k]);
      const BracketValue br = bracket_at(b.A.values()[k], b.B.values()[k], az2, bz2);
      if (!br.evaluable) continue;
      const double j0 = b.J0.values()[k];
      if (j0 <= 0.0) {
        bad.push_back(k);
        continue;
      }
      const double rv = r.values()[k];
      const double rho = profile->rho(rv);
      const double d1 = profile->drho(rv);
      const double k2 = b.k2_h.values()[k];
      const double jv = b.J.values()[k];
      const double rho4 = rho * rho * rho * rho;

      const double lhs = (gradJ02.values()[k] - j0 * lapJ0.values()[k]) / (j0 * j0);
      const double term1 = k2 * rho * rho * (b.D0.values()[k] - gradr2.values()[k]);
      const double term2 = (2.0 * d1 / (rho * rv)) * (rv * lapr.values()[k] - gradr2.values()[k]);
      const double term3 = (4.0 * rho4 / (jv * jv)) * br.square;
      const double rhs = term1 + term2 + term3;

      out.fields.lhs.values()[k] = lhs;
      out.fields.rhs.values()[k] = rhs;
      out.fields.residual.values()[k] = std::abs(lhs - rhs);
      out.fields.lhs.mask()[k] = out.fields.rhs.mask()[k] = out.fields.residual.mask()[k] = 1;
    }
  }
  if (!bad.empty()) throw_not_sense_preserving(g, bad);
  out.report = make_report("radial", out.fields.residual, out.fields.base_mask,
                           auto_tol(opts, g.s, autotol::radial));
  return out;
}

}  // namespace hmlab
