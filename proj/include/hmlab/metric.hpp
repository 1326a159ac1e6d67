#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmlab/field.hpp"
#include "hmlab/util.hpp"

namespace hmlab {

enum class MetricKind { euclidean, spherical, hyperbolic, radial, tabulated };

/// Rotationally symmetric density rho(r) with its first two derivatives,
/// defined for r in [r_min, r_max].
struct RadialProfile {
  std::string name;
  double r_min = 0.0;
  double r_max = 0.0;
  std::function<double(double)> rho;
  std::function<double(double)> drho;
  std::function<double(double)> ddrho;
};

/// Named builtin profiles: "spherical", "hyperbolic", "cylinder", "constant".
RadialProfile builtin_profile(const std::string& name);

/// Conformal metric density rho(w)|dw| on a planar region, with closed-form
/// Wirtinger log-derivative and Gaussian curvature K = -2*Lap(log rho)/rho^2.
/// Evaluating outside the region where the density is defined throws
/// DomainGuardError.
class ConformalMetric {
 public:
  MetricKind kind() const { return kind_; }
  const std::string& spec() const { return spec_; }

  double rho(Complex w) const;
  Complex log_rho2_w(Complex w) const;
  double curvature(Complex w) const;

  bool in_domain(Complex w) const { return guard_(w); }
  bool guard_everywhere() const { return guard_everywhere_; }

  /// Suggested sampling annulus for seeded consistency checks.
  double sample_rmin() const { return sample_rmin_; }
  double sample_rmax() const { return sample_rmax_; }

  /// Non-null when the metric was built from a radial profile.
  const std::shared_ptr<const RadialProfile>& profile() const { return profile_; }

  /// Same shape scaled by c > 0: rho -> c*rho, K -> K/c^2, log-derivative
  /// unchanged.
  ConformalMetric scaled(double c) const;

  static ConformalMetric euclidean();
  static ConformalMetric spherical();
  static ConformalMetric hyperbolic();
  static ConformalMetric radial(RadialProfile profile);
  static ConformalMetric tabulated(const RealField& rho_samples, std::string spec = "tabulated");

 private:
  ConformalMetric() = default;
  void check_guard(Complex w) const;

  MetricKind kind_ = MetricKind::euclidean;
  std::string spec_;
  bool guard_everywhere_ = false;
  double sample_rmin_ = 0.0;
  double sample_rmax_ = 2.0;
  std::function<double(Complex)> rho_;
  std::function<Complex(Complex)> log_rho2_w_;
  std::function<double(Complex)> curvature_;
  std::function<bool(Complex)> guard_;
  std::shared_ptr<const RadialProfile> profile_;
};

/// Parse a CLI metric spec: euclidean | spherical | hyperbolic |
/// radial:<profile-name> | tabulated:<hmfield-path>.
ConformalMetric parse_metric_spec(const std::string& spec);

struct MetricConsistency {
  double curvature_err = 0.0;   // max |K(w) - K_fd(w)|
  double logderiv_err = 0.0;    // max |(log rho^2)_w - fd|
  double max_err() const { return curvature_err > logderiv_err ? curvature_err : logderiv_err; }
};

/// Richardson-extrapolated finite-difference cross-check of the metric's
/// closed-form curvature and log-derivative at the given sample points.
MetricConsistency verify_metric_consistency(const ConformalMetric& m,
                                            std::span<const Complex> samples);

/// Deterministic in-domain sample points (with clearance for the FD steps).
std::vector<Complex> seeded_samples(const ConformalMetric& m, int n,
                                    std::uint64_t seed = kDefaultSeed);

}  // namespace hmlab
