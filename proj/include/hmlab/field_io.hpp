#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "hmlab/field.hpp"

namespace hmlab {

// Plain-text HMFIELD format, version 1.
//
//   HMFIELD 1 <kind: C|R> <nx> <ny> <x0> <y0> <s>
//   <i> <j> <re> [<im>] <mask:0|1>        (nx*ny lines, row-major: j outer)
//
// Floats are written with 17 significant digits, so a save/load round trip
// is bit-exact.

void save_hmfield(std::ostream& out, const ComplexField& f);
void save_hmfield(std::ostream& out, const RealField& f);
void save_hmfield(const std::string& path, const ComplexField& f);
void save_hmfield(const std::string& path, const RealField& f);

using AnyField = std::variant<ComplexField, RealField>;

AnyField load_hmfield(std::istream& in);
AnyField load_hmfield(const std::string& path);

ComplexField load_complex_hmfield(const std::string& path);
RealField load_real_hmfield(const std::string& path);

}  // namespace hmlab
