#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fblab {

/// Uniform, origin-centred node grid in one or two dimensions.
///
/// Nodes sit at x_i = -extent + i*h for i = 0..cells, so an even cell count
/// puts a node exactly at the origin. The outermost node layer is the frame.
struct Grid {
  int dim = 2;
  double extent = 1.0;
  int cells = 64;

  /// Validates dim in {1,2}, cells >= 8 and extent > 0.
  static Grid make(int dim, double extent, int cells);

  [[nodiscard]] double h() const noexcept { return 2.0 * extent / cells; }
  [[nodiscard]] int nx() const noexcept { return cells + 1; }
  [[nodiscard]] int ny() const noexcept { return dim == 2 ? cells + 1 : 1; }
  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(nx()) * static_cast<std::size_t>(ny());
  }
  [[nodiscard]] std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx()) +
           static_cast<std::size_t>(i);
  }
  [[nodiscard]] double x(int i) const noexcept { return -extent + i * h(); }
  [[nodiscard]] double y(int j) const noexcept { return dim == 2 ? -extent + j * h() : 0.0; }
  [[nodiscard]] bool on_frame(int i, int j) const noexcept {
    if (i == 0 || i == nx() - 1) return true;
    return dim == 2 && (j == 0 || j == ny() - 1);
  }
  /// Index of the node nearest the origin (exact when cells is even).
  [[nodiscard]] int centre() const noexcept { return cells / 2; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct Index2 {
  int i = 0;
  int j = 0;
  friend bool operator==(const Index2&, const Index2&) = default;
};

using Mask = std::vector<std::uint8_t>;

/// Default support threshold relative to the field maximum.
inline constexpr double kRelativeSupportThreshold = 1e-8;

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Grid grid, double fill = 0.0, double support_threshold = 0.0);
  ScalarField(Grid grid, std::vector<double> values, double support_threshold);

  /// Samples f(x, y) at every node; threshold set relative to the maximum.
  static ScalarField sample(const Grid& grid, const std::function<double(double, double)>& f);

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] std::vector<double>& values() noexcept { return values_; }

  [[nodiscard]] double operator()(int i, int j = 0) const noexcept { return values_[grid_.index(i, j)]; }
  double& operator()(int i, int j = 0) noexcept { return values_[grid_.index(i, j)]; }
  [[nodiscard]] double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }

  [[nodiscard]] double support_threshold() const noexcept { return threshold_; }
  void set_support_threshold(double t) noexcept { threshold_ = t; }
  /// threshold = rel * max(values, 0).
  void use_relative_threshold(double rel = kRelativeSupportThreshold) noexcept;

  [[nodiscard]] bool in_support(int i, int j = 0) const noexcept { return (*this)(i, j) > threshold_; }
  [[nodiscard]] double max() const noexcept;
  [[nodiscard]] double min() const noexcept;
  [[nodiscard]] bool all_finite() const noexcept;
  /// Bilinear (linear in 1-D) interpolation; points outside the grid clamp to the frame.
  [[nodiscard]] double interpolate(double x, double y = 0.0) const noexcept;

 private:
  Grid grid_{};
  std::vector<double> values_;
  double threshold_ = 0.0;
};

/// Symmetric 2x2 matrix; for one-dimensional fields only a11 is meaningful.
struct SymMatrix2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;
  int dim = 2;

  [[nodiscard]] double largest_eigenvalue() const noexcept;
  [[nodiscard]] double smallest_eigenvalue() const noexcept;
};

/// Central differences inside, one-sided on the frame. One field per axis.
std::vector<ScalarField> gradient(const ScalarField& f);

/// Second-order 3-point (1-D) or 5-point (2-D) Laplacian; frame nodes set to 0.
ScalarField laplacian(const ScalarField& f);

/// Central second differences with the four-corner mixed stencil.
/// Throws OutsideSupport unless the 3x3 neighbourhood is inside the support.
SymMatrix2 hessian_at(const ScalarField& f, Index2 cell);

/// Same stencil, no support check; caller guarantees the node is interior.
SymMatrix2 hessian_unchecked(const ScalarField& f, Index2 cell) noexcept;

/// Nodes above the support threshold, eroded `erode` times with the 3x3
/// structuring element. Nodes off the grid count as outside.
Mask support_mask(const ScalarField& f, int erode = 0);

/// Erodes an arbitrary mask with the 3x3 structuring element.
Mask erode_mask(const Grid& grid, const Mask& mask, int times);

std::size_t count(const Mask& mask) noexcept;

/// Trapezoid-free cell sum: sum(values) * h^dim.
double integral(const ScalarField& f) noexcept;

/// Field dump: `# dim,cells,extent,h,threshold`, a metadata line, a column line, then one
/// `i,j,x,y,value` row per node, all reals printed with 17 significant digits.
void write_field_csv(std::ostream& os, const ScalarField& f);
void write_field_csv(const std::string& path, const ScalarField& f);
ScalarField read_field_csv(std::istream& is);
ScalarField read_field_csv(const std::string& path);

}  // namespace fblab
