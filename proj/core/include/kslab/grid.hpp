#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kslab {

enum class Shape { interval, rectangle, radial_disc };

std::string to_string(Shape shape);
Shape shape_from_string(const std::string& name);

/// Interval [0, L], rectangle [0, Lx] x [0, Ly], or the disc of radius R
/// (meshed radially).
class Domain {
 public:
  static Domain interval(double length);
  static Domain rectangle(double lx, double ly);
  static Domain disc(double radius);

  Shape shape() const { return shape_; }
  /// Length along a mesh axis: L, Lx/Ly, or R.
  double extent(int axis) const { return extent_[axis]; }
  /// |Omega|: L, Lx*Ly or pi*R^2.
  double measure() const;
  /// Number of mesh axes (the radial disc is meshed in r only).
  int mesh_axes() const { return shape_ == Shape::rectangle ? 2 : 1; }
  /// Physical dimension n of the domain.
  int spatial_dimension() const { return shape_ == Shape::interval ? 1 : 2; }

 private:
  Domain(Shape shape, double a, double b) : shape_(shape), extent_{a, b} {}

  Shape shape_;
  std::array<double, 2> extent_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform cell-centred mesh. Boundary faces carry zero flux, which is the
/// whole of the homogeneous Neumann treatment.
///
/// Face numbering: x-face (i, j) sits on the left edge of cell (i, j),
/// i = 0..nx, stored at j*(nx+1)+i; y-face (i, j) sits on the lower edge of
/// cell (i, j), j = 0..ny, stored at j*nx+i. On the radial grid x is r.
class Grid {
 public:
  Grid(const Domain& domain, int nx, int ny);

  const Domain& domain() const { return domain_; }
  Shape shape() const { return domain_.shape(); }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  int mesh_axes() const { return domain_.mesh_axes(); }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double min_h() const;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  Point center(std::size_t cell) const;

  /// Cell integration weights; they sum to |Omega|.
  std::span<const double> weights() const { return weights_; }
  double measure() const { return domain_.measure(); }

  std::size_t n_faces_x() const { return static_cast<std::size_t>(nx_ + 1) * ny_; }
  std::size_t n_faces_y() const {
    return mesh_axes() == 2 ? static_cast<std::size_t>(nx_) * (ny_ + 1) : 0;
  }
  /// Face area divided by centre spacing; zero on boundary faces.
  std::span<const double> transmissibility_x() const { return trans_x_; }
  std::span<const double> transmissibility_y() const { return trans_y_; }

 private:
  Domain domain_;
  int nx_;
  int ny_;
  double hx_;
  double hy_;
  std::vector<double> weights_;
  std::vector<double> trans_x_;
  std::vector<double> trans_y_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Rejects non-positive dimensions and fewer than 4 cells per axis.
GridPtr build_grid(const Domain& domain, int nx, int ny = 1);

/// Cell values on a grid. Values are always finite.
class Field {
 public:
  Field(GridPtr grid, std::vector<double> values);

  static Field constant(GridPtr grid, double value);
  /// Samples f at cell centres (x = r on the radial grid).
  static Field sample(GridPtr grid, const std::function<double(double, double)>& f);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const;
  double max() const;

  Field operator+(const Field& other) const;
  Field operator-(const Field& other) const;
  Field operator*(double scale) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline Field operator*(double scale, const Field& f) { return f * scale; }

/// Per-face values in the grid's face numbering.
struct FaceValues {
  std::vector<double> x;
  std::vector<double> y;
};

double integrate(const Grid& grid, std::span<const double> values);
/// Sum of w_i f_i.
double integrate(const Field& f);

void face_gradient(const Grid& grid, std::span<const double> values, FaceValues& out);
/// (f_right - f_left)/h on interior faces, zero on boundary faces.
FaceValues face_gradient(const Field& f);

/// Per-volume discrete Laplacian built from face gradients (zero-flux boundary).
void div_grad(const Grid& grid, std::span<const double> values, std::span<double> out);

/// CSV snapshot: `# shape,n_cells,h`, then `index,coord(s),value` per cell.
void write_snapshot(std::ostream& os, const Field& f);
void write_snapshot(const std::string& path, const Field& f);
/// Rebuilds the grid from the snapshot header.
Field read_snapshot(std::istream& is);

}  // namespace kslab
