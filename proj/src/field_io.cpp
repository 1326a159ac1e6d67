#include "hmlab/field_io.hpp"

#include <fstream>
#include <sstream>

#include "hmlab/util.hpp"

namespace hmlab {

namespace {

void write_header(std::ostream& out, char kind, const Grid& g) {
  out << "HMFIELD 1 " << kind << ' ' << g.nx << ' ' << g.ny << ' ' << fmt17(g.x0) << ' '
      << fmt17(g.y0) << ' ' << fmt17(g.s) << '\n';
}

template <typename T>
void save_impl(std::ostream& out, const Field<T>& f, char kind) {
  write_header(out, kind, f.grid());
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      out << i << ' ' << j << ' ';
      if constexpr (std::is_same_v<T, Complex>) {
        out << fmt17(f.at(i, j).real()) << ' ' << fmt17(f.at(i, j).imag());
      } else {
        out << fmt17(f.at(i, j));
      }
      out << ' ' << (f.valid(i, j) ? 1 : 0) << '\n';
    }
  }
  if (!out) throw FieldFormatError("HMFIELD write failed");
}

[[noreturn]] void bad(const std::string& why) { throw FieldFormatError("HMFIELD: " + why); }

}  // namespace

void save_hmfield(std::ostream& out, const ComplexField& f) { save_impl(out, f, 'C'); }
void save_hmfield(std::ostream& out, const RealField& f) { save_impl(out, f, 'R'); }

void save_hmfield(const std::string& path, const ComplexField& f) {
  std::ostringstream ss;
  save_hmfield(ss, f);
  write_file_atomic(path, ss.str());
}

void save_hmfield(const std::string& path, const RealField& f) {
  std::ostringstream ss;
  save_hmfield(ss, f);
  write_file_atomic(path, ss.str());
}

AnyField load_hmfield(std::istream& in) {
  std::string magic;
  int version = 0;
  std::string kind;
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0, s = 0;
  if (!(in >> magic >> version >> kind >> nx >> ny >> x0 >> y0 >> s)) bad("unreadable header");
  if (magic != "HMFIELD") bad("bad magic '" + magic + "'");
  if (version != 1) bad("unsupported version");
  if (kind != "C" && kind != "R") bad("kind must be C or R");
  Grid grid;
  try {
    grid = Grid(x0, y0, nx, ny, s);
  } catch (const Error& e) {
    bad(std::string("invalid grid: ") + e.what());
  }

  const bool complex_kind = (kind == "C");
  std::vector<Complex> cvals;
  std::vector<double> rvals;
  Mask mask(grid.size(), 0);
  if (complex_kind)
    cvals.assign(grid.size(), Complex{});
  else
    rvals.assign(grid.size(), 0.0);

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int ii = 0, jj = 0, mk = 0;
      double re = 0, im = 0;
      if (!(in >> ii >> jj >> re)) bad("truncated node list");
      if (complex_kind && !(in >> im)) bad("missing imaginary part");
      if (!(in >> mk)) bad("missing mask flag");
      if (ii != i || jj != j) bad("nodes out of row-major order");
      if (mk != 0 && mk != 1) bad("mask flag must be 0 or 1");
      const std::size_t k = grid.index(i, j);
      if (complex_kind)
        cvals[k] = Complex(re, im);
      else
        rvals[k] = re;
      mask[k] = static_cast<std::uint8_t>(mk);
    }
  }

  if (complex_kind) {
    ComplexField f(grid, std::move(cvals), std::move(mask));
    if (!f.finite_on_mask()) bad("non-finite value at a valid node");
    return f;
  }
  RealField f(grid, std::move(rvals), std::move(mask));
  if (!f.finite_on_mask()) bad("non-finite value at a valid node");
  return f;
}

AnyField load_hmfield(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FieldFormatError("HMFIELD: cannot open " + path);
  return load_hmfield(in);
}

ComplexField load_complex_hmfield(const std::string& path) {
  AnyField f = load_hmfield(path);
  if (auto* c = std::get_if<ComplexField>(&f)) return std::move(*c);
  throw FieldFormatError("HMFIELD: " + path + " holds a real field, expected complex");
}

RealField load_real_hmfield(const std::string& path) {
  AnyField f = load_hmfield(path);
  if (auto* r = std::get_if<RealField>(&f)) return std::move(*r);
  throw FieldFormatError("HMFIELD: " + path + " holds a complex field, expected real");
}

}  // namespace hmlab
