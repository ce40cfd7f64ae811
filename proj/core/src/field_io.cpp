#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kslab/grid.hpp"

namespace kslab {

void write_snapshot(std::ostream& os, const Field& f) {
  const Grid& g = f.grid();
  os << std::setprecision(17);
  if (g.mesh_axes() == 2) {
    os << "# " << to_string(g.shape()) << ',' << g.nx() << 'x' << g.ny() << ',' << g.hx() << 'x' << g.hy()
       << '\n';
  } else {
    os << "# " << to_string(g.shape()) << ',' << g.nx() << ',' << g.hx() << '\n';
  }
  for (std::size_t c = 0; c < f.size(); ++c) {
    const Point p = g.center(c);
    os << c << ',' << p.x << ',';
    if (g.mesh_axes() == 2) os << p.y << ',';
    os << f[c] << '\n';
  }
}

void write_snapshot(const std::string& path, const Field& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_snapshot(out, f);
}

namespace {

std::pair<double, double> split_pair(const std::string& s, bool two) {
  if (!two) return {std::stod(s), 1.0};
  const auto x = s.find('x');
  if (x == std::string::npos) throw std::runtime_error("snapshot header: expected AxB, got '" + s + "'");
  return {std::stod(s.substr(0, x)), std::stod(s.substr(x + 1))};
}

}  // namespace

Field read_snapshot(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# ", 0) != 0) {
    throw std::runtime_error("snapshot: missing '# shape,n_cells,h' header");
  }
  std::stringstream hs(header.substr(2));
  std::string shape_name, cells, spacing;
  std::getline(hs, shape_name, ',');
  std::getline(hs, cells, ',');
  std::getline(hs, spacing, ',');
  const Shape shape = shape_from_string(shape_name);
  const bool two = shape == Shape::rectangle;
  const auto [nx_d, ny_d] = split_pair(cells, two);
  const auto [hx, hy] = split_pair(spacing, two);
  const int nx = static_cast<int>(nx_d);
  const int ny = static_cast<int>(ny_d);

  GridPtr grid;
  switch (shape) {
    case Shape::interval: grid = build_grid(Domain::interval(nx * hx), nx); break;
    case Shape::rectangle: grid = build_grid(Domain::rectangle(nx * hx, ny * hy), nx, ny); break;
    case Shape::radial_disc: grid = build_grid(Domain::disc(nx * hx), nx); break;
  }

  std::vector<double> values(grid->size());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const auto last = line.rfind(',');
    const std::size_t index = std::stoul(line.substr(0, comma));
    if (index >= values.size()) throw std::runtime_error("snapshot: cell index out of range");
    values[index] = std::stod(line.substr(last + 1));
    ++rows;
  }
  if (rows != values.size()) throw std::runtime_error("snapshot: row count does not match the header");
  return Field(grid, std::move(values));
}

}  // namespace kslab
