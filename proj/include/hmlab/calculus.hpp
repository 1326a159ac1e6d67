#pragma once

#include "hmlab/field.hpp"

namespace hmlab {

// Finite-difference Wirtinger calculus on uniform grids. All stencils are
// second-order central differences, exact on polynomials of degree <= 2.
// Every operation erodes the input mask by its stencil radius (one ring for
// first derivatives and the 5-point Laplacian, two rings for the second
// derivative triple) and throws EmptyInteriorError when nothing survives.

/// d/dz = (d/dx - i d/dy) / 2.
ComplexField wirtinger_dz(const ComplexField& f);
ComplexField wirtinger_dz(const RealField& f);

/// d/dzbar = (d/dx + i d/dy) / 2.
ComplexField wirtinger_dzbar(const ComplexField& f);
ComplexField wirtinger_dzbar(const RealField& f);

/// 5-point Laplacian f_xx + f_yy.
ComplexField laplacian(const ComplexField& f);
RealField laplacian(const RealField& f);

/// |grad R|^2 computed through the Wirtinger route 4|R_z|^2, which equals
/// the direct R_x^2 + R_y^2 for the shared central stencils.
RealField grad_norm_sq(const RealField& R);

struct SecondDerivatives {
  ComplexField zz;        // d^2/dz^2
  ComplexField zzbar;     // d^2/(dz dzbar) = Laplacian / 4
  ComplexField zbarzbar;  // d^2/dzbar^2
};

/// All three second Wirtinger derivatives; masks shrink by two rings.
SecondDerivatives second_derivatives(const ComplexField& f);

/// Laplacian of log R evaluated through (R*Lap(R) - |grad R|^2) / R^2.
/// Nodes with R below positivity_floor_rel * max(R) are masked out; throws
/// FieldNotPositiveError when no node survives the floor.
RealField log_laplacian_crosscheck(const RealField& R, double positivity_floor_rel = 1e-12);

}  // namespace hmlab
