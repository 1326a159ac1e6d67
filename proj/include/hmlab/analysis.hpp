#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hmlab/analytic_map.hpp"
#include "hmlab/calculus.hpp"
#include "hmlab/field.hpp"
#include "hmlab/metric.hpp"

namespace hmlab {

/// Residual-norm summary of one verified identity.
struct IdentityReport {
  std::string name;
  double linf = 0.0;
  double l2 = 0.0;
  long evaluated_nodes = 0;
  long excluded_nodes = 0;
  double spacing = 0.0;
  bool passed = false;
  double tolerance_used = 0.0;
  bool empty = false;  // flagged when every node was excluded

  std::string to_json() const;
};

/// Residual plus the two sides it came from, for per-node CSV dumps. The
/// residual mask marks evaluated nodes; base_mask marks the interior the
/// report counted against.
struct CheckFields {
  RealField lhs;
  RealField rhs;
  RealField residual;
  Mask base_mask;
};

struct CheckResult {
  IdentityReport report;
  CheckFields fields;
  std::map<std::string, double> extras;
};

/// `i,j,x,y,lhs,rhs,residual,excluded` rows over the base interior.
std::string check_csv(const CheckResult& r);

/// Derived first-order fields of a map into a conformal metric, Theorem-level
/// A/B quantities, and the degeneracy bookkeeping shared by every check.
struct JacobianBundle {
  ConformalMetric metric;
  ComplexField h;
  ComplexField hz, hzb;       // first Wirtinger derivatives
  ComplexField dh, dbh;       // rho(h) h_z, rho(h) h_zbar
  RealField J0, D0;           // |h_z|^2 -+ |h_zbar|^2
  RealField J, D;             // rho^2-weighted versions
  RealField rho_h, k2_h;      // metric density / curvature at h(z)
  ComplexField A, B;          // d/dz |h_z|^2 and d/dz |h_zbar|^2 (assembled)
  Mask degenerate;            // nodes below the derivative floors
  double floor_rel = 1e-8;
  double floor_z = 0.0, floor_zb = 0.0;  // absolute floors actually used
  bool exact_route = false;

  const Grid& grid() const { return h.grid(); }
  double spacing() const { return h.grid().s; }
};

/// Grid route: all derivatives by stencils (masks shrink accordingly).
JacobianBundle jacobian_bundle(const ComplexField& h, const ConformalMetric& metric,
                               double floor_rel = 1e-8);

/// Exact route: closed-form derivatives sampled on the grid (full masks).
JacobianBundle jacobian_bundle(const AnalyticMap& m, const Grid& grid,
                               const ConformalMetric& metric, double floor_rel = 1e-8);

/// Stencil differentiation of the modulus-squared fields, for cross-checking
/// the assembled A and B.
std::pair<ComplexField, ComplexField> ab_direct(const JacobianBundle& b);

/// sigma-normalized derivative fields.
struct SigmaBundle {
  ComplexField dsh, dbsh;  // (rho(h)/sigma) h_z, (rho(h)/sigma) h_zbar
  RealField Jsigma;        // J / sigma^2
};
SigmaBundle sigma_bundle(const JacobianBundle& b, const ConformalMetric& domain);

/// Laplacian scaled by the domain density: Lap(f) / sigma(z)^2.
RealField sigma_laplacian(const RealField& f, const ConformalMetric& domain);

struct CheckOptions {
  double tolerance = -1.0;   // < 0: automatic C * s^2 (+ extra_tol)
  double extra_tol = 0.0;    // e.g. solver tolerance for solved inputs
  double slack = -1.0;       // < 0: automatic C * s (sign checks)
  double r_floor_rel = 1e-8; // radial identity: mask r < floor * max(r)
};

/// Flat-domain Bochner pair: Lap log|dh|^2 = -K2 J and the dbh twin with +.
std::pair<CheckResult, CheckResult> bochner_residuals(const JacobianBundle& b,
                                                      const CheckOptions& opts = {});

/// sigma-form Bochner pair with domain curvature K1 on the right-hand side.
std::pair<CheckResult, CheckResult> sigma_bochner_residuals(const JacobianBundle& b,
                                                            const ConformalMetric& domain,
                                                            const CheckOptions& opts = {});

/// -Lap log J = K2 D + (4 rho^4 / J^2) * (a^2|B|^2 + a^-2|A|^2 - 2Re(A conj B))
/// with a = |h_z| / |h_zbar|. The left side is assembled through the
/// gradient form (|grad J|^2 - J Lap J)/J^2, which the log-Laplacian
/// identity equates to -Lap log J; extras carry the worst three-term vs
/// single-square bracket disagreement. Throws NotSensePreservingError when
/// J <= 0 on a non-degenerate evaluated node.
CheckResult main_identity_residual(const JacobianBundle& b, const CheckOptions& opts = {});

/// |grad J|^2 - J Lap J = K2 J^2 D + 4 rho^4 (a^2|B|^2 + a^-2|A|^2 - 2Re(A conj B));
/// no sign constraint on J.
CheckResult presubtraction_identity_residual(const JacobianBundle& b,
                                             const CheckOptions& opts = {});

/// (|grad J|^2 - J Lap J)/J^2 versus the direct stencil -Lap(log J):
/// the log-Laplacian bridge between the two identity forms.
CheckResult log_bridge_check(const JacobianBundle& b, const CheckOptions& opts = {});

/// Q = (a|B| - a^-1|A|)^2 + 2(|A||B| - Re(A conj B)), reported against the
/// single-square form |aB - a^-1 A|^2; Q >= 0 holds nodewise by
/// construction.
std::pair<RealField, CheckResult> quadratic_form(const JacobianBundle& b,
                                                 const CheckOptions& opts = {});

/// Lap log J <= slack at every evaluated node (target curvature must be
/// >= 0 at all image points, else HypothesisError).
CheckResult superharmonicity_check(const JacobianBundle& b, const CheckOptions& opts = {});

/// Inclusive index rectangle.
struct IndexRect {
  int i0 = 0, j0 = 0, i1 = 0, j1 = 0;
};

/// min over the strict interior of the sub-rectangle >= boundary min - slack.
/// extras: interior/boundary minima and their node indices.
CheckResult minimum_principle_check(const RealField& J, const IndexRect& rect,
                                    const CheckOptions& opts = {});

/// Deterministic sub-rectangles inside the valid region of a field.
std::vector<IndexRect> seeded_subrects(const RealField& f, int n, std::uint64_t seed,
                                       int min_size = 8);

/// |dzbar Psi| for the Hopf differential Psi = rho^2(h) h_z conj(h_zbar),
/// normalized by max |Psi| (absolute when Psi vanishes identically).
CheckResult hopf_check(const JacobianBundle& b, const CheckOptions& opts = {});
CheckResult hopf_check(const ComplexField& h, const ConformalMetric& metric,
                       const CheckOptions& opts = {});
CheckResult hopf_check(const AnalyticMap& m, const Grid& grid, const ConformalMetric& metric,
                       const CheckOptions& opts = {});

/// Rotationally symmetric form of the main identity, in terms of r = |h|,
/// the profile derivatives and the Euclidean Jacobian. Requires a metric
/// built from a RadialProfile.
CheckResult radial_identity_residual(const JacobianBundle& b, const CheckOptions& opts = {});

}  // namespace hmlab
