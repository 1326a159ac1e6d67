#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmlab/field.hpp"

namespace hmlab {

/// Polynomial with complex coefficients, low degree first.
using Poly = std::vector<Complex>;

Complex poly_eval(const Poly& p, Complex z);
Poly poly_derivative(const Poly& p);
Poly poly_compose(const Poly& f, const Poly& g);  // f(g(z))
bool poly_is_zero(const Poly& p);

enum class MapFamily { holomorphic_poly, euclidean_harmonic, custom };

/// Closed-form test map with exact Wirtinger derivatives through second
/// order. Polynomial-backed maps are h(z) = g(z) + conj(k(z)); custom maps
/// provide the six evaluators directly.
class AnalyticMap {
 public:
  using Fn = std::function<Complex(Complex)>;

  Complex h(Complex z) const { return h_(z); }
  Complex hz(Complex z) const { return hz_(z); }
  Complex hzb(Complex z) const { return hzb_(z); }
  Complex hzz(Complex z) const { return hzz_(z); }
  Complex hzzb(Complex z) const { return hzzb_(z); }
  Complex hzbzb(Complex z) const { return hzbzb_(z); }

  MapFamily family() const { return family_; }
  bool is_polynomial() const { return polys_.has_value(); }
  const Poly& g_coeffs() const;
  const Poly& k_coeffs() const;
  const std::string& spec() const { return spec_; }

  static AnalyticMap custom(Fn h, Fn hz, Fn hzb, Fn hzz, Fn hzzb, Fn hzbzb,
                            std::string spec = "custom");

  friend AnalyticMap euclidean_harmonic(Poly g, Poly k);
  friend AnalyticMap precompose_holomorphic(const AnalyticMap& m, const Poly& phi);

 private:
  AnalyticMap() = default;

  MapFamily family_ = MapFamily::custom;
  std::string spec_;
  Fn h_, hz_, hzb_, hzz_, hzzb_, hzbzb_;
  std::optional<std::pair<Poly, Poly>> polys_;
};

/// h(z) = g(z) + conj(k(z)); solves the flat-target equation exactly
/// (h_zzbar is identically zero).
AnalyticMap euclidean_harmonic(Poly g, Poly k);

/// Holomorphic polynomial map; harmonic into every target metric.
AnalyticMap holomorphic_map(Poly coeffs);

/// h(phi(z)) for holomorphic polynomial phi, with chain-rule-exact
/// derivatives (coefficient-level composition for polynomial maps).
AnalyticMap precompose_holomorphic(const AnalyticMap& m, const Poly& phi);

/// Values of h on the grid nodes, fully valid mask.
ComplexField sample(const AnalyticMap& m, const Grid& grid);

struct MapSamples {
  ComplexField h, hz, hzb, hzz, hzzb, hzbzb;
};

/// h plus all exact derivative fields on the grid nodes.
MapSamples sample_with_derivatives(const AnalyticMap& m, const Grid& grid);

/// CLI map specs:
///   affine:c=<re>,<im>            z + c*conj(z)
///   ehpoly:g=<coeffs>;k=<coeffs>  g(z) + conj(k(z))
///   holo:<coeffs>                 holomorphic polynomial
/// Coefficient lists are comma-separated re,im pairs; an odd-length list is
/// accepted as real-coefficient shorthand.
AnalyticMap parse_map_spec(const std::string& spec);

}  // namespace hmlab
