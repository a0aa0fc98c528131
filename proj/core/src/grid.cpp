#include "fblab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "fblab/error.hpp"

namespace fblab {

Grid Grid::make(int dim, double extent, int cells) {
  if (dim != 1 && dim != 2) fail(ErrorCode::PreconditionViolated, "grid dimension must be 1 or 2");
  if (cells < 8) fail(ErrorCode::PreconditionViolated, "grid needs at least 8 cells per axis");
  if (!(extent > 0.0) || !std::isfinite(extent))
    fail(ErrorCode::PreconditionViolated, "grid extent must be positive");
  return Grid{dim, extent, cells};
}

ScalarField::ScalarField(Grid grid, double fill, double support_threshold)
    : grid_(grid), values_(grid.size(), fill), threshold_(support_threshold) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values, double support_threshold)
    : grid_(grid), values_(std::move(values)), threshold_(support_threshold) {
  if (values_.size() != grid_.size())
    fail(ErrorCode::PreconditionViolated, "value count does not match grid");
}

ScalarField ScalarField::sample(const Grid& grid, const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) out(i, j) = f(grid.x(i), grid.y(j));
  out.use_relative_threshold();
  return out;
}

void ScalarField::use_relative_threshold(double rel) noexcept {
  threshold_ = rel * std::max(max(), 0.0);
}

double ScalarField::max() const noexcept {
  if (values_.empty()) return 0.0;
  return *std::max_element(values_.begin(), values_.end());
}

double ScalarField::min() const noexcept {
  if (values_.empty()) return 0.0;
  return *std::min_element(values_.begin(), values_.end());
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::interpolate(double x, double y) const noexcept {
  const double h = grid_.h();
  auto locate = [&](double p, int n, int& i0, double& s) {
    double u = (p + grid_.extent) / h;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(std::floor(u)), n - 2);
    s = u - i0;
  };
  int i0 = 0;
  double sx = 0.0;
  locate(x, grid_.nx(), i0, sx);
  if (grid_.dim == 1) return (1.0 - sx) * (*this)(i0) + sx * (*this)(i0 + 1);
  int j0 = 0;
  double sy = 0.0;
  locate(y, grid_.ny(), j0, sy);
  const double f00 = (*this)(i0, j0), f10 = (*this)(i0 + 1, j0);
  const double f01 = (*this)(i0, j0 + 1), f11 = (*this)(i0 + 1, j0 + 1);
  return (1.0 - sy) * ((1.0 - sx) * f00 + sx * f10) + sy * ((1.0 - sx) * f01 + sx * f11);
}

double SymMatrix2::largest_eigenvalue() const noexcept {
  if (dim == 1) return a11;
  const double mean = 0.5 * (a11 + a22);
  const double dev = std::hypot(0.5 * (a11 - a22), a12);
  return mean + dev;
}

double SymMatrix2::smallest_eigenvalue() const noexcept {
  if (dim == 1) return a11;
  const double mean = 0.5 * (a11 + a22);
  const double dev = std::hypot(0.5 * (a11 - a22), a12);
  return mean - dev;
}

std::vector<ScalarField> gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  const double h = g.h();
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(g.dim));
  for (int axis = 0; axis < g.dim; ++axis) {
    ScalarField d(g, 0.0, 0.0);
    const int n = axis == 0 ? g.nx() : g.ny();
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        const int k = axis == 0 ? i : j;
        auto at = [&](int kk) { return axis == 0 ? f(kk, j) : f(i, kk); };
        double v;
        if (k == 0)
          v = (at(1) - at(0)) / h;
        else if (k == n - 1)
          v = (at(n - 1) - at(n - 2)) / h;
        else
          v = (at(k + 1) - at(k - 1)) / (2.0 * h);
        d(i, j) = v;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  const Grid& g = f.grid();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  ScalarField out(g, 0.0, 0.0);
  if (g.dim == 1) {
    for (int i = 1; i < g.nx() - 1; ++i) out(i) = (f(i + 1) - 2.0 * f(i) + f(i - 1)) * inv_h2;
    return out;
  }
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i)
      out(i, j) = (f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * f(i, j)) * inv_h2;
  return out;
}

SymMatrix2 hessian_unchecked(const ScalarField& f, Index2 c) noexcept {
  const Grid& g = f.grid();
  const double h = g.h();
  const double inv_h2 = 1.0 / (h * h);
  const int i = c.i, j = c.j;
  SymMatrix2 m;
  m.dim = g.dim;
  m.a11 = (f(i + 1, j) - 2.0 * f(i, j) + f(i - 1, j)) * inv_h2;
  if (g.dim == 2) {
    m.a22 = (f(i, j + 1) - 2.0 * f(i, j) + f(i, j - 1)) * inv_h2;
    m.a12 = (f(i + 1, j + 1) - f(i + 1, j - 1) - f(i - 1, j + 1) + f(i - 1, j - 1)) * (0.25 * inv_h2);
  }
  return m;
}

SymMatrix2 hessian_at(const ScalarField& f, Index2 c) {
  const Grid& g = f.grid();
  const int jlo = g.dim == 2 ? c.j - 1 : 0, jhi = g.dim == 2 ? c.j + 1 : 0;
  if (c.i < 1 || c.i > g.nx() - 2 || (g.dim == 2 && (c.j < 1 || c.j > g.ny() - 2)))
    fail(ErrorCode::OutsideSupport, "hessian stencil leaves the grid");
  for (int j = jlo; j <= jhi; ++j)
    for (int i = c.i - 1; i <= c.i + 1; ++i)
      if (!f.in_support(i, j)) fail(ErrorCode::OutsideSupport, "hessian stencil touches cells outside the support");
  return hessian_unchecked(f, c);
}

Mask erode_mask(const Grid& g, const Mask& mask, int times) {
  Mask cur = mask;
  Mask next(cur.size(), 0);
  for (int t = 0; t < times; ++t) {
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        bool keep = cur[g.index(i, j)] != 0;
        if (keep) {
          if (i == 0 || i == g.nx() - 1) keep = false;
          if (g.dim == 2 && (j == 0 || j == g.ny() - 1)) keep = false;
        }
        if (keep) {
          const int jlo = g.dim == 2 ? j - 1 : 0, jhi = g.dim == 2 ? j + 1 : 0;
          for (int jj = jlo; jj <= jhi && keep; ++jj)
            for (int ii = i - 1; ii <= i + 1 && keep; ++ii) keep = cur[g.index(ii, jj)] != 0;
        }
        next[g.index(i, j)] = keep ? 1 : 0;
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

Mask support_mask(const ScalarField& f, int erode) {
  const Grid& g = f.grid();
  Mask m(g.size(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = f[k] > f.support_threshold() ? 1 : 0;
  return erode > 0 ? erode_mask(g, m, erode) : m;
}

std::size_t count(const Mask& mask) noexcept {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
}

double integral(const ScalarField& f) noexcept {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * std::pow(f.grid().h(), f.grid().dim);
}

void write_field_csv(std::ostream& os, const ScalarField& f) {
  const Grid& g = f.grid();
  os << std::setprecision(17);
  os << "# dim,cells,extent,h,threshold\n";
  os << "# " << g.dim << ',' << g.cells << ',' << g.extent << ',' << g.h() << ',' << f.support_threshold() << '\n';
  os << "i,j,x,y,value\n";
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      os << i << ',' << j << ',' << g.x(i) << ',' << g.y(j) << ',' << f(i, j) << '\n';
}

void write_field_csv(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_field_csv(os, f);
  if (!os) fail(ErrorCode::IoError, "write failed for " + path);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) fail(ErrorCode::IoError, "bad number '" + s + "' in field dump");
  return v;
}

}  // namespace

ScalarField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# dim", 0) != 0) fail(ErrorCode::IoError, "missing field dump header");
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) fail(ErrorCode::IoError, "missing field dump metadata");
  const auto meta = split(line.substr(2), ',');
  if (meta.size() != 5) fail(ErrorCode::IoError, "field dump metadata needs 5 entries");
  const Grid g = Grid::make(static_cast<int>(to_double(meta[0])), to_double(meta[2]),
                            static_cast<int>(to_double(meta[1])));
  ScalarField f(g, 0.0, to_double(meta[4]));
  std::getline(is, line);  // column names
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 5) fail(ErrorCode::IoError, "field dump row needs 5 columns");
    const int i = std::stoi(cols[0]), j = std::stoi(cols[1]);
    if (i < 0 || i >= g.nx() || j < 0 || j >= g.ny()) fail(ErrorCode::IoError, "field dump index out of range");
    f(i, j) = to_double(cols[4]);
    ++rows;
  }
  if (rows != g.size()) fail(ErrorCode::IoError, "field dump has wrong row count");
  return f;
}

ScalarField read_field_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::IoError, "cannot open " + path);
  return read_field_csv(is);
}

}  // namespace fblab
