#include "kslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kslab {

std::string to_string(Shape shape) {
  switch (shape) {
    case Shape::interval: return "interval";
    case Shape::rectangle: return "rectangle";
    case Shape::radial_disc: return "radial_disc";
  }
  return "unknown";
}

Shape shape_from_string(const std::string& name) {
  if (name == "interval") return Shape::interval;
  if (name == "rectangle") return Shape::rectangle;
  if (name == "radial_disc" || name == "disc") return Shape::radial_disc;
  throw std::invalid_argument("unknown domain shape '" + name + "'");
}

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string("domain ") + what + " must be positive and finite");
  }
}

}  // namespace

Domain Domain::interval(double length) {
  require_positive(length, "length");
  return Domain(Shape::interval, length, 1.0);
}

Domain Domain::rectangle(double lx, double ly) {
  require_positive(lx, "Lx");
  require_positive(ly, "Ly");
  return Domain(Shape::rectangle, lx, ly);
}

Domain Domain::disc(double radius) {
  require_positive(radius, "radius");
  return Domain(Shape::radial_disc, radius, 1.0);
}

double Domain::measure() const {
  switch (shape_) {
    case Shape::interval: return extent_[0];
    case Shape::rectangle: return extent_[0] * extent_[1];
    case Shape::radial_disc: return std::numbers::pi * extent_[0] * extent_[0];
  }
  return 0.0;
}

Grid::Grid(const Domain& domain, int nx, int ny)
    : domain_(domain), nx_(nx), ny_(domain.mesh_axes() == 2 ? ny : 1) {
  if (nx_ < 4 || (domain.mesh_axes() == 2 && ny_ < 4)) {
    throw std::invalid_argument("grid needs at least 4 cells per axis");
  }
  hx_ = domain.extent(0) / nx_;
  hy_ = domain.mesh_axes() == 2 ? domain.extent(1) / ny_ : 1.0;

  weights_.resize(size());
  trans_x_.assign(n_faces_x(), 0.0);
  trans_y_.assign(n_faces_y(), 0.0);

  switch (domain.shape()) {
    case Shape::interval:
      std::fill(weights_.begin(), weights_.end(), hx_);
      for (int i = 1; i < nx_; ++i) trans_x_[i] = 1.0 / hx_;
      break;
    case Shape::rectangle:
      std::fill(weights_.begin(), weights_.end(), hx_ * hy_);
      for (int j = 0; j < ny_; ++j) {
        for (int i = 1; i < nx_; ++i) trans_x_[static_cast<std::size_t>(j) * (nx_ + 1) + i] = hy_ / hx_;
      }
      for (int j = 1; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) trans_y_[static_cast<std::size_t>(j) * nx_ + i] = hx_ / hy_;
      }
      break;
    case Shape::radial_disc: {
      const double pi = std::numbers::pi;
      for (int i = 0; i < nx_; ++i) {
        const double r_in = i * hx_;
        const double r_out = (i + 1) * hx_;
        weights_[i] = pi * (r_out * r_out - r_in * r_in);
      }
      // The face at r = 0 has zero circumference, so regularity at the
      // origin needs no special treatment.
      for (int i = 1; i < nx_; ++i) trans_x_[i] = 2.0 * pi * (i * hx_) / hx_;
      break;
    }
  }
}

double Grid::min_h() const { return mesh_axes() == 2 ? std::min(hx_, hy_) : hx_; }

Point Grid::center(std::size_t cell) const {
  const int i = static_cast<int>(cell % nx_);
  const int j = static_cast<int>(cell / nx_);
  Point p{(i + 0.5) * hx_, 0.0};
  if (mesh_axes() == 2) p.y = (j + 0.5) * hy_;
  return p;
}

GridPtr build_grid(const Domain& domain, int nx, int ny) {
  return std::make_shared<const Grid>(domain, nx, ny);
}

Field::Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw std::invalid_argument("field needs a grid");
  if (values_.size() != grid_->size()) {
    throw std::invalid_argument("field value count does not match the grid cell count");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::domain_error("field contains a non-finite value");
  }
}

Field Field::constant(GridPtr grid, double value) {
  const std::size_t n = grid->size();
  return Field(std::move(grid), std::vector<double>(n, value));
}

Field Field::sample(GridPtr grid, const std::function<double(double, double)>& f) {
  std::vector<double> values(grid->size());
  for (std::size_t c = 0; c < values.size(); ++c) {
    const Point p = grid->center(c);
    values[c] = f(p.x, p.y);
  }
  return Field(std::move(grid), std::move(values));
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

Field Field::operator+(const Field& other) const {
  if (other.grid_ != grid_) throw std::invalid_argument("fields live on different grids");
  std::vector<double> out(values_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += other.values_[i];
  return Field(grid_, std::move(out));
}

Field Field::operator-(const Field& other) const {
  if (other.grid_ != grid_) throw std::invalid_argument("fields live on different grids");
  std::vector<double> out(values_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= other.values_[i];
  return Field(grid_, std::move(out));
}

Field Field::operator*(double scale) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= scale;
  return Field(grid_, std::move(out));
}

double integrate(const Grid& grid, std::span<const double> values) {
  const auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += w[i] * values[i];
  return sum;
}

double integrate(const Field& f) { return integrate(f.grid(), f.values()); }

void face_gradient(const Grid& grid, std::span<const double> values, FaceValues& out) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  out.x.assign(grid.n_faces_x(), 0.0);
  out.y.assign(grid.n_faces_y(), 0.0);
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const std::size_t frow = static_cast<std::size_t>(j) * (nx + 1);
    for (int i = 1; i < nx; ++i) {
      out.x[frow + i] = (values[row + i] - values[row + i - 1]) / grid.hx();
    }
  }
  if (grid.mesh_axes() == 2) {
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        out.y[static_cast<std::size_t>(j) * nx + i] =
            (values[grid.index(i, j)] - values[grid.index(i, j - 1)]) / grid.hy();
      }
    }
  }
}

FaceValues face_gradient(const Field& f) {
  FaceValues out;
  face_gradient(f.grid(), f.values(), out);
  return out;
}

void div_grad(const Grid& grid, std::span<const double> values, std::span<double> out) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  const auto tx = grid.transmissibility_x();
  const auto ty = grid.transmissibility_y();
  const auto w = grid.weights();
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const std::size_t frow = static_cast<std::size_t>(j) * (nx + 1);
    for (int i = 1; i < nx; ++i) {
      const double flux = tx[frow + i] * (values[row + i] - values[row + i - 1]);
      out[row + i - 1] += flux;
      out[row + i] -= flux;
    }
  }
  if (grid.mesh_axes() == 2) {
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t up = grid.index(i, j);
        const std::size_t down = grid.index(i, j - 1);
        const double flux = ty[static_cast<std::size_t>(j) * nx + i] * (values[up] - values[down]);
        out[down] += flux;
        out[up] -= flux;
      }
    }
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c] /= w[c];
}

}  // namespace kslab
