#include "hmlab/metric.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "hmlab/calculus.hpp"
#include "hmlab/field_io.hpp"

namespace hmlab {

namespace {

constexpr double kRadialEps = 1e-12;  // below this r the r->0 limits kick in
constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_unit(double t) { return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t); }

}  // namespace

void ConformalMetric::check_guard(Complex w) const {
  if (!guard_(w))
    throw DomainGuardError("metric '" + spec_ + "' evaluated outside its domain at w = (" +
                           fmt17(w.real()) + ", " + fmt17(w.imag()) + ")");
}

double ConformalMetric::rho(Complex w) const {
  check_guard(w);
  return rho_(w);
}

Complex ConformalMetric::log_rho2_w(Complex w) const {
  check_guard(w);
  return log_rho2_w_(w);
}

double ConformalMetric::curvature(Complex w) const {
  check_guard(w);
  return curvature_(w);
}

ConformalMetric ConformalMetric::euclidean() {
  ConformalMetric m;
  m.kind_ = MetricKind::euclidean;
  m.spec_ = "euclidean";
  m.guard_everywhere_ = true;
  m.sample_rmax_ = 2.0;
  m.rho_ = [](Complex) { return 1.0; };
  m.log_rho2_w_ = [](Complex) { return Complex{}; };
  m.curvature_ = [](Complex) { return 0.0; };
  m.guard_ = [](Complex) { return true; };
  return m;
}

ConformalMetric ConformalMetric::spherical() {
  ConformalMetric m;
  m.kind_ = MetricKind::spherical;
  m.spec_ = "spherical";
  m.guard_everywhere_ = true;
  m.sample_rmax_ = 2.0;
  m.rho_ = [](Complex w) { return 2.0 / (1.0 + std::norm(w)); };
  m.log_rho2_w_ = [](Complex w) { return -2.0 * std::conj(w) / (1.0 + std::norm(w)); };
  m.curvature_ = [](Complex) { return 2.0; };
  m.guard_ = [](Complex) { return true; };
  return m;
}

ConformalMetric ConformalMetric::hyperbolic() {
  ConformalMetric m;
  m.kind_ = MetricKind::hyperbolic;
  m.spec_ = "hyperbolic";
  m.guard_everywhere_ = false;
  m.sample_rmax_ = 0.9;
  m.rho_ = [](Complex w) { return 2.0 / (1.0 - std::norm(w)); };
  m.log_rho2_w_ = [](Complex w) { return 2.0 * std::conj(w) / (1.0 - std::norm(w)); };
  m.curvature_ = [](Complex) { return -2.0; };
  m.guard_ = [](Complex w) { return std::norm(w) < 1.0; };
  return m;
}

ConformalMetric ConformalMetric::radial(RadialProfile profile) {
  if (!profile.rho || !profile.drho || !profile.ddrho)
    throw Error("radial metric: profile must provide rho, drho, ddrho");
  auto p = std::make_shared<const RadialProfile>(std::move(profile));
  ConformalMetric m;
  m.kind_ = MetricKind::radial;
  m.spec_ = "radial:" + p->name;
  m.profile_ = p;
  m.guard_everywhere_ = (p->r_min <= 0.0 && p->r_max == kInf);
  m.sample_rmin_ = p->r_min > 0.0 ? 1.25 * p->r_min : 0.0;
  m.sample_rmax_ = std::min(2.0, p->r_max == kInf ? 2.0 : 0.8 * p->r_max);
  m.guard_ = [p](Complex w) {
    const double r = std::abs(w);
    return r >= p->r_min && r <= p->r_max;
  };
  m.rho_ = [p](Complex w) { return p->rho(std::abs(w)); };
  m.log_rho2_w_ = [p, spec = m.spec_](Complex w) -> Complex {
    const double r = std::abs(w);
    if (r < kRadialEps) {
      const double rh = p->rho(r);
      const double d1 = p->drho(r);
      if (!std::isfinite(rh) || !std::isfinite(d1) || std::abs(d1) > 1e-8 * std::abs(rh))
        throw RadialSingularityError("metric '" + spec + "': radial singularity at r = 0");
      return (p->ddrho(r) / rh) * std::conj(w);
    }
    return (p->drho(r) / p->rho(r)) * (std::conj(w) / r);
  };
  m.curvature_ = [p, spec = m.spec_](Complex w) {
    const double r = std::abs(w);
    const double rh = p->rho(r);
    const double d1 = p->drho(r);
    const double d2 = p->ddrho(r);
    if (r < kRadialEps) {
      if (!std::isfinite(rh) || !std::isfinite(d1) || std::abs(d1) > 1e-8 * std::abs(rh))
        throw RadialSingularityError("metric '" + spec + "': radial singularity at r = 0");
      // rho'/r -> rho'' as r -> 0.
      return -2.0 * (rh * d2 - d1 * d1 + rh * d2) / (rh * rh * rh * rh);
    }
    return -2.0 * (rh * d2 - d1 * d1 + rh * d1 / r) / (rh * rh * rh * rh);
  };
  return m;
}

ConformalMetric ConformalMetric::tabulated(const RealField& rho_samples, std::string spec) {
  rho_samples.require_valid("tabulated metric");
  if (!rho_samples.finite_on_mask()) throw Error("tabulated metric: non-finite density sample");
  for (std::size_t k = 0; k < rho_samples.values().size(); ++k)
    if (rho_samples.mask()[k] && rho_samples.values()[k] <= 0.0)
      throw Error("tabulated metric: density must be positive at valid nodes");

  auto rho_field = std::make_shared<const RealField>(rho_samples);
  auto log_rho = std::make_shared<const RealField>(
      transform<double>(rho_samples, [](double v) { return std::log(v); }));
  // FD derivative fields; accuracy degrades to O(s^2) by construction.
  auto dlog2 = std::make_shared<const ComplexField>(
      transform<Complex>(wirtinger_dz(*log_rho), [](Complex v) { return 2.0 * v; }));
  auto lap_log = std::make_shared<const RealField>(laplacian(*log_rho));

  const Grid g = rho_samples.grid();
  auto locate = [g](Complex w) {
    const double u = (w.real() - g.x0) / g.s;
    const double v = (w.imag() - g.y0) / g.s;
    const int i = static_cast<int>(std::floor(u));
    const int j = static_cast<int>(std::floor(v));
    return std::tuple<int, int, double, double>(i, j, u - i, v - j);
  };

  auto cell_valid = [g](const Mask& mask, int i, int j) {
    if (i < 0 || j < 0 || i + 1 >= g.nx || j + 1 >= g.ny) return false;
    return mask[g.index(i, j)] && mask[g.index(i + 1, j)] && mask[g.index(i, j + 1)] &&
           mask[g.index(i + 1, j + 1)];
  };

  ConformalMetric m;
  m.kind_ = MetricKind::tabulated;
  m.spec_ = std::move(spec);
  m.guard_everywhere_ = false;
  // Derivative fields lose one ring, so guard against their bounding box.
  m.sample_rmax_ = 0.5 * std::min((g.nx - 5) * g.s, (g.ny - 5) * g.s);
  m.guard_ = [locate, cell_valid, mask = dlog2->mask()](Complex w) {
    auto [i, j, u, v] = locate(w);
    (void)u;
    (void)v;
    return cell_valid(mask, i, j);
  };
  auto bilinear_real = [locate](const RealField& f, Complex w) {
    auto [i, j, u, v] = locate(w);
    u = clamp_unit(u);
    v = clamp_unit(v);
    return (1 - u) * (1 - v) * f.at(i, j) + u * (1 - v) * f.at(i + 1, j) +
           (1 - u) * v * f.at(i, j + 1) + u * v * f.at(i + 1, j + 1);
  };
  auto bilinear_cplx = [locate](const ComplexField& f, Complex w) {
    auto [i, j, u, v] = locate(w);
    u = clamp_unit(u);
    v = clamp_unit(v);
    return (1 - u) * (1 - v) * f.at(i, j) + u * (1 - v) * f.at(i + 1, j) +
           (1 - u) * v * f.at(i, j + 1) + u * v * f.at(i + 1, j + 1);
  };
  m.rho_ = [rho_field, bilinear_real](Complex w) { return bilinear_real(*rho_field, w); };
  m.log_rho2_w_ = [dlog2, bilinear_cplx](Complex w) { return bilinear_cplx(*dlog2, w); };
  m.curvature_ = [rho_field, lap_log, bilinear_real](Complex w) {
    const double r = bilinear_real(*rho_field, w);
    return -2.0 * bilinear_real(*lap_log, w) / (r * r);
  };
  return m;
}

ConformalMetric ConformalMetric::scaled(double c) const {
  if (!(c > 0.0)) throw Error("ConformalMetric::scaled: factor must be positive");
  ConformalMetric m = *this;
  m.spec_ = spec_ + "*" + fmt17(c);
  m.rho_ = [base = rho_, c](Complex w) { return c * base(w); };
  m.curvature_ = [base = curvature_, c](Complex w) { return base(w) / (c * c); };
  return m;
}

RadialProfile builtin_profile(const std::string& name) {
  RadialProfile p;
  p.name = name;
  if (name == "spherical") {
    p.r_min = 0.0;
    p.r_max = kInf;
    p.rho = [](double r) { return 2.0 / (1.0 + r * r); };
    p.drho = [](double r) {
      const double q = 1.0 + r * r;
      return -4.0 * r / (q * q);
    };
    p.ddrho = [](double r) {
      const double q = 1.0 + r * r;
      return (-4.0 * q + 16.0 * r * r) / (q * q * q);
    };
  } else if (name == "hyperbolic") {
    p.r_min = 0.0;
    p.r_max = 1.0;
    p.rho = [](double r) { return 2.0 / (1.0 - r * r); };
    p.drho = [](double r) {
      const double q = 1.0 - r * r;
      return 4.0 * r / (q * q);
    };
    p.ddrho = [](double r) {
      const double q = 1.0 - r * r;
      return (4.0 * q + 16.0 * r * r) / (q * q * q);
    };
  } else if (name == "cylinder") {
    // Flat metric |dw|/|w| on an annulus; K = 0.
    p.r_min = 0.1;
    p.r_max = 10.0;
    p.rho = [](double r) { return 1.0 / r; };
    p.drho = [](double r) { return -1.0 / (r * r); };
    p.ddrho = [](double r) { return 2.0 / (r * r * r); };
  } else if (name == "constant") {
    p.r_min = 0.0;
    p.r_max = kInf;
    p.rho = [](double) { return 1.5; };
    p.drho = [](double) { return 0.0; };
    p.ddrho = [](double) { return 0.0; };
  } else {
    throw SpecError("unknown radial profile '" + name + "'");
  }
  return p;
}

ConformalMetric parse_metric_spec(const std::string& spec) {
  if (spec == "euclidean") return ConformalMetric::euclidean();
  if (spec == "spherical") return ConformalMetric::spherical();
  if (spec == "hyperbolic") return ConformalMetric::hyperbolic();
  if (spec.rfind("radial:", 0) == 0) {
    return ConformalMetric::radial(builtin_profile(spec.substr(7)));
  }
  if (spec.rfind("tabulated:", 0) == 0) {
    const std::string path = spec.substr(10);
    return ConformalMetric::tabulated(load_real_hmfield(path), spec);
  }
  throw SpecError("unknown metric spec '" + spec + "'");
}

MetricConsistency verify_metric_consistency(const ConformalMetric& m,
                                            std::span<const Complex> samples) {
  MetricConsistency out;
  for (Complex w : samples) {
    if (!m.in_domain(w))
      throw DomainGuardError("verify_metric_consistency: sample outside metric domain");
    const double e0 = 1e-3 * (1.0 + std::abs(w));
    auto g = [&](Complex z) { return std::log(m.rho(z)); };

    auto lap_at = [&](double e) {
      return (g(w + Complex(e, 0)) + g(w - Complex(e, 0)) + g(w + Complex(0, e)) +
              g(w - Complex(0, e)) - 4.0 * g(w)) /
             (e * e);
    };
    const double lap = (4.0 * lap_at(e0 / 2) - lap_at(e0)) / 3.0;
    const double rho = m.rho(w);
    const double k_fd = -2.0 * lap / (rho * rho);
    out.curvature_err = std::max(out.curvature_err, std::abs(m.curvature(w) - k_fd));

    auto dx_at = [&](double e) {
      return (2.0 * g(w + Complex(e, 0)) - 2.0 * g(w - Complex(e, 0))) / (2.0 * e);
    };
    auto dy_at = [&](double e) {
      return (2.0 * g(w + Complex(0, e)) - 2.0 * g(w - Complex(0, e))) / (2.0 * e);
    };
    const double dx = (4.0 * dx_at(e0 / 2) - dx_at(e0)) / 3.0;
    const double dy = (4.0 * dy_at(e0 / 2) - dy_at(e0)) / 3.0;
    const Complex fd = 0.5 * Complex(dx, -dy);
    out.logderiv_err = std::max(out.logderiv_err, std::abs(m.log_rho2_w(w) - fd));
  }
  return out;
}

std::vector<Complex> seeded_samples(const ConformalMetric& m, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rmax = m.sample_rmax();
  const double rmin = m.sample_rmin();
  std::vector<Complex> out;
  out.reserve(n);
  int guardrail = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++guardrail > 100000) throw Error("seeded_samples: cannot find in-domain samples");
    const double r = std::sqrt(unit(rng) * (rmax * rmax - rmin * rmin) + rmin * rmin);
    const double t = 2.0 * M_PI * unit(rng);
    const Complex w(r * std::cos(t), r * std::sin(t));
    // Clearance for the Richardson steps used by the FD cross-check.
    const double e = 1.1e-3 * (1.0 + std::abs(w));
    const bool clear = m.in_domain(w) && m.in_domain(w + Complex(e, 0)) &&
                       m.in_domain(w - Complex(e, 0)) && m.in_domain(w + Complex(0, e)) &&
                       m.in_domain(w - Complex(0, e));
    if (clear) out.push_back(w);
  }
  return out;
}

}  // namespace hmlab
