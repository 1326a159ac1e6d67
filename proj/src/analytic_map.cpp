#include "hmlab/analytic_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hmlab/util.hpp"

namespace hmlab {

Complex poly_eval(const Poly& p, Complex z) {
  Complex acc{};
  for (std::size_t k = p.size(); k-- > 0;) acc = acc * z + p[k];
  return acc;
}

Poly poly_derivative(const Poly& p) {
  if (p.size() <= 1) return {};
  Poly d(p.size() - 1);
  for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = static_cast<double>(k) * p[k];
  return d;
}

Poly poly_compose(const Poly& f, const Poly& g) {
  Poly acc;
  for (std::size_t k = f.size(); k-- > 0;) {
    // acc = acc * g + f[k]
    if (acc.empty()) {
      acc = {f[k]};
      continue;
    }
    Poly next(acc.size() + g.size() - 1, Complex{});
    for (std::size_t a = 0; a < acc.size(); ++a)
      for (std::size_t b = 0; b < g.size(); ++b) next[a + b] += acc[a] * g[b];
    if (next.empty()) next = {Complex{}};
    next[0] += f[k];
    acc = std::move(next);
  }
  return acc;
}

bool poly_is_zero(const Poly& p) {
  return std::all_of(p.begin(), p.end(), [](Complex c) { return c == Complex{}; });
}

const Poly& AnalyticMap::g_coeffs() const {
  if (!polys_) throw Error("AnalyticMap: not polynomial-backed");
  return polys_->first;
}

const Poly& AnalyticMap::k_coeffs() const {
  if (!polys_) throw Error("AnalyticMap: not polynomial-backed");
  return polys_->second;
}

AnalyticMap AnalyticMap::custom(Fn h, Fn hz, Fn hzb, Fn hzz, Fn hzzb, Fn hzbzb, std::string spec) {
  AnalyticMap m;
  m.family_ = MapFamily::custom;
  m.spec_ = std::move(spec);
  m.h_ = std::move(h);
  m.hz_ = std::move(hz);
  m.hzb_ = std::move(hzb);
  m.hzz_ = std::move(hzz);
  m.hzzb_ = std::move(hzzb);
  m.hzbzb_ = std::move(hzbzb);
  return m;
}

AnalyticMap euclidean_harmonic(Poly g, Poly k) {
  if (g.empty() && k.empty()) throw Error("euclidean_harmonic: empty coefficient lists");
  if (g.empty()) g = {Complex{}};
  if (k.empty()) k = {Complex{}};
  AnalyticMap m;
  m.family_ = poly_is_zero(k) ? MapFamily::holomorphic_poly : MapFamily::euclidean_harmonic;
  Poly g1 = poly_derivative(g), g2 = poly_derivative(g1);
  Poly k1 = poly_derivative(k), k2 = poly_derivative(k1);
  m.h_ = [g, k](Complex z) { return poly_eval(g, z) + std::conj(poly_eval(k, z)); };
  m.hz_ = [g1](Complex z) { return poly_eval(g1, z); };
  m.hzb_ = [k1](Complex z) { return std::conj(poly_eval(k1, z)); };
  m.hzz_ = [g2](Complex z) { return poly_eval(g2, z); };
  m.hzzb_ = [](Complex) { return Complex{}; };
  m.hzbzb_ = [k2](Complex z) { return std::conj(poly_eval(k2, z)); };
  {
    std::ostringstream ss;
    ss << "ehpoly:g=";
    for (std::size_t i = 0; i < g.size(); ++i)
      ss << (i ? "," : "") << fmt17(g[i].real()) << ',' << fmt17(g[i].imag());
    ss << ";k=";
    for (std::size_t i = 0; i < k.size(); ++i)
      ss << (i ? "," : "") << fmt17(k[i].real()) << ',' << fmt17(k[i].imag());
    m.spec_ = ss.str();
  }
  m.polys_ = std::make_pair(std::move(g), std::move(k));
  return m;
}

AnalyticMap holomorphic_map(Poly coeffs) {
  if (coeffs.empty()) throw Error("holomorphic_map: empty coefficient list");
  return euclidean_harmonic(std::move(coeffs), {});
}

AnalyticMap precompose_holomorphic(const AnalyticMap& m, const Poly& phi) {
  if (phi.empty()) throw Error("precompose_holomorphic: empty composition polynomial");
  if (m.is_polynomial()) {
    // h = g + conj(k)  =>  h(phi) = g(phi) + conj(k(phi)).
    return euclidean_harmonic(poly_compose(m.g_coeffs(), phi), poly_compose(m.k_coeffs(), phi));
  }
  Poly d1 = poly_derivative(phi), d2 = poly_derivative(d1);
  auto p = [phi](Complex z) { return poly_eval(phi, z); };
  auto dp = [d1](Complex z) { return poly_eval(d1, z); };
  auto ddp = [d2](Complex z) { return poly_eval(d2, z); };
  AnalyticMap out = AnalyticMap::custom(
      [m, p](Complex z) { return m.h(p(z)); },
      [m, p, dp](Complex z) { return m.hz(p(z)) * dp(z); },
      [m, p, dp](Complex z) { return m.hzb(p(z)) * std::conj(dp(z)); },
      [m, p, dp, ddp](Complex z) {
        const Complex d = dp(z);
        return m.hzz(p(z)) * d * d + m.hz(p(z)) * ddp(z);
      },
      [m, p, dp](Complex z) {
        const Complex d = dp(z);
        return m.hzzb(p(z)) * d * std::conj(d);
      },
      [m, p, dp, ddp](Complex z) {
        const Complex d = std::conj(dp(z));
        return m.hzbzb(p(z)) * d * d + m.hzb(p(z)) * std::conj(ddp(z));
      },
      m.spec() + ".phi");
  return out;
}

ComplexField sample(const AnalyticMap& m, const Grid& grid) {
  ComplexField out(grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out.at(i, j) = m.h(grid.node(i, j));
  return out;
}

MapSamples sample_with_derivatives(const AnalyticMap& m, const Grid& grid) {
  MapSamples s{ComplexField(grid), ComplexField(grid), ComplexField(grid),
               ComplexField(grid), ComplexField(grid), ComplexField(grid)};
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Complex z = grid.node(i, j);
      s.h.at(i, j) = m.h(z);
      s.hz.at(i, j) = m.hz(z);
      s.hzb.at(i, j) = m.hzb(z);
      s.hzz.at(i, j) = m.hzz(z);
      s.hzzb.at(i, j) = m.hzzb(z);
      s.hzbzb.at(i, j) = m.hzbzb(z);
    }
  }
  return s;
}

namespace {

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw SpecError(what + ": empty coefficient entry");
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw SpecError(what + ": bad number '" + tok + "'");
    }
    if (pos != tok.size()) throw SpecError(what + ": bad number '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw SpecError(what + ": empty coefficient list");
  return out;
}

// Even-length lists are re,im pairs; odd-length lists are real-coefficient
// shorthand.
Poly parse_coeffs(const std::string& text, const std::string& what) {
  std::vector<double> nums = parse_number_list(text, what);
  Poly p;
  if (nums.size() % 2 == 0) {
    for (std::size_t k = 0; k < nums.size(); k += 2) p.emplace_back(nums[k], nums[k + 1]);
  } else {
    for (double v : nums) p.emplace_back(v, 0.0);
  }
  return p;
}

}  // namespace

AnalyticMap parse_map_spec(const std::string& spec) {
  if (spec.rfind("affine:", 0) == 0) {
    const std::string body = spec.substr(7);
    if (body.rfind("c=", 0) != 0) throw SpecError("affine map spec must look like affine:c=re,im");
    std::vector<double> nums = parse_number_list(body.substr(2), "affine");
    if (nums.size() != 2) throw SpecError("affine:c= takes exactly re,im");
    const Complex c(nums[0], nums[1]);
    // h = z + c*conj(z) = g + conj(k) with k(z) = conj(c) z.
    return euclidean_harmonic({Complex{}, Complex{1.0, 0.0}}, {Complex{}, std::conj(c)});
  }
  if (spec.rfind("ehpoly:", 0) == 0) {
    const std::string body = spec.substr(7);
    const auto semi = body.find(';');
    if (semi == std::string::npos)
      throw SpecError("ehpoly map spec must look like ehpoly:g=...;k=...");
    const std::string gpart = body.substr(0, semi);
    const std::string kpart = body.substr(semi + 1);
    if (gpart.rfind("g=", 0) != 0 || kpart.rfind("k=", 0) != 0)
      throw SpecError("ehpoly map spec must look like ehpoly:g=...;k=...");
    return euclidean_harmonic(parse_coeffs(gpart.substr(2), "ehpoly g"),
                              parse_coeffs(kpart.substr(2), "ehpoly k"));
  }
  if (spec.rfind("holo:", 0) == 0) {
    return holomorphic_map(parse_coeffs(spec.substr(5), "holo"));
  }
  throw SpecError("unknown map spec '" + spec + "'");
}

}  // namespace hmlab
