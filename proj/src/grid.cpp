#include "mflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

#include "mflow/io.hpp"

namespace mflow {

Grid::Grid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> n)
    : lo_(std::move(lo)), hi_(std::move(hi)), n_(std::move(n)) {
  const std::size_t d = lo_.size();
  if (d < 1 || d > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
  if (hi_.size() != d || n_.size() != d) throw InvalidInput("grid lo/hi/n lengths differ");
  h_.resize(d);
  stride_.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    if (n_[k] < 3) throw InvalidInput("grid needs at least 3 nodes per axis");
    if (!(lo_[k] < hi_[k]) || !std::isfinite(lo_[k]) || !std::isfinite(hi_[k])) {
      throw InvalidInput("grid needs finite lo < hi on every axis");
    }
    h_[k] = (hi_[k] - lo_[k]) / static_cast<double>(n_[k] - 1);
    cell_volume_ *= h_[k];
  }
  size_ = 1;
  for (std::size_t k = d; k-- > 0;) {
    stride_[k] = size_;
    size_ *= n_[k];
  }
  weights_.resize(size_);
  for (std::size_t node = 0; node < size_; ++node) {
    auto idx = unravel(node);
    double w = 1.0;
    for (int axis = 0; axis < dim(); ++axis) w *= dual_width(axis, idx[axis]);
    weights_[node] = w;
  }
}

std::array<std::size_t, 3> Grid::unravel(std::size_t node) const {
  std::array<std::size_t, 3> idx{};
  for (int axis = 0; axis < dim(); ++axis) {
    idx[axis] = (node / stride_[axis]) % n_[axis];
  }
  return idx;
}

void Grid::node_coords(std::size_t node, std::span<double> out) const {
  auto idx = unravel(node);
  for (int axis = 0; axis < dim(); ++axis) out[axis] = coord(axis, idx[axis]);
}

std::vector<double> Grid::node_coords(std::size_t node) const {
  std::vector<double> x(static_cast<std::size_t>(dim()));
  node_coords(node, x);
  return x;
}

GridPtr build_grid(int dim, std::span<const double> lo, std::span<const double> hi,
                   std::span<const std::size_t> n) {
  auto d = static_cast<std::size_t>(dim);
  if (dim < 1 || dim > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
  if (lo.size() != d || hi.size() != d || n.size() != d) {
    throw InvalidInput("grid lo/hi/n must each have dim entries");
  }
  return std::make_shared<const Grid>(std::vector<double>(lo.begin(), lo.end()),
                                      std::vector<double>(hi.begin(), hi.end()),
                                      std::vector<std::size_t>(n.begin(), n.end()));
}

GridPtr build_cube_grid(int dim, double radius, std::size_t n) {
  if (dim < 1 || dim > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
  auto d = static_cast<std::size_t>(dim);
  return std::make_shared<const Grid>(std::vector<double>(d, -radius),
                                      std::vector<double>(d, radius),
                                      std::vector<std::size_t>(d, n));
}

ScalarField::ScalarField(GridPtr g, double fill) : grid(std::move(g)) {
  if (!grid) throw InvalidInput("field needs a grid");
  values.assign(grid->size(), fill);
}

ScalarField::ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw InvalidInput("field needs a grid");
  if (values.size() != grid->size()) throw InvalidInput("field length does not match grid");
}

bool ScalarField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!a.grid || !b.grid) throw InvalidInput("field without grid");
  if (a.grid != b.grid && !(*a.grid == *b.grid)) throw InvalidInput("fields live on different grids");
  if (a.size() != b.size()) throw InvalidInput("field lengths differ");
}

double integrate(const ScalarField& f) {
  if (!f.grid) throw InvalidInput("field without grid");
  auto w = f.grid->node_weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w[i] * f.values[i];
  return sum;
}

double integrate(const ScalarField& f, const ScalarField& weight) {
  require_same_grid(f, weight);
  auto w = f.grid->node_weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w[i] * weight.values[i] * f.values[i];
  return sum;
}

WeightedOperator::WeightedOperator(GridPtr grid, ScalarField gamma)
    : grid_(std::move(grid)), gamma_(std::move(gamma)) {
  const auto& g = *grid_;
  node_mass_.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) node_mass_[i] = gamma_[i] * g.node_weight(i);
  std::vector<double> root(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) root[i] = std::sqrt(gamma_[i]);
  edges_.reserve(g.size() * static_cast<std::size_t>(g.dim()));
  g.for_each_edge([&](std::size_t i, std::size_t j, int axis, double measure) {
    double h = g.h(axis);
    edges_.push_back({i, j, root[i] * root[j] * measure / (h * h)});
  });
}

void WeightedOperator::apply_laplacian(std::span<const double> w, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& e : edges_) {
    double flux = e.conductance * (w[e.j] - w[e.i]);
    out[e.i] -= flux;
    out[e.j] += flux;
  }
}

void WeightedOperator::apply(std::span<const double> w, std::span<double> out) const {
  apply_laplacian(w, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i] / node_mass_[i];
}

ScalarField WeightedOperator::apply(const ScalarField& w) const {
  if (w.size() != grid_->size()) throw InvalidInput("field does not match operator grid");
  ScalarField out(grid_);
  apply(w.values, out.values);
  return out;
}

std::vector<double> WeightedOperator::laplacian_diagonal() const {
  std::vector<double> diag(grid_->size(), 0.0);
  for (const auto& e : edges_) {
    diag[e.i] += e.conductance;
    diag[e.j] += e.conductance;
  }
  return diag;
}

double WeightedOperator::inner(std::span<const double> u, std::span<const double> v) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < node_mass_.size(); ++i) sum += node_mass_[i] * u[i] * v[i];
  return sum;
}

double WeightedOperator::dirichlet_form(std::span<const double> w,
                                        std::span<const double> v) const {
  double sum = 0.0;
  for (const auto& e : edges_) sum += e.conductance * (w[e.j] - w[e.i]) * (v[e.j] - v[e.i]);
  return sum;
}

WeightedOperator assemble_operator(const GridPtr& grid, const ScalarField& gamma) {
  if (!grid) throw InvalidInput("operator needs a grid");
  if (gamma.size() != grid->size()) throw InvalidInput("gamma does not match grid");
  for (double g : gamma.values) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw InvalidInput("gamma must be strictly positive and finite at every node");
    }
  }
  return WeightedOperator(grid, gamma);
}

void write_field_csv(const std::string& path, const ScalarField& field) {
  const auto& g = *field.grid;
  std::string out;
  for (int k = 0; k < g.dim(); ++k) out += "x_" + std::to_string(k + 1) + ",";
  out += "value\n";
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node_coords(i, x);
    for (double c : x) out += format_number(c) + ",";
    out += format_number(field[i]) + "\n";
  }
  write_file_atomic(path, out);
}

ScalarField read_field_csv(const std::string& path, const GridPtr& grid) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open field file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("field file '" + path + "' has no header");
  const auto d = static_cast<std::size_t>(grid->dim());
  if (split_csv_line(line).size() != d + 1) {
    throw InvalidInput("field file '" + path + "' must have x_1..x_d,value columns");
  }
  ScalarField field(grid);
  std::vector<double> x(d);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row >= grid->size()) throw InvalidInput("field file '" + path + "' has too many rows");
    auto cells = split_csv_line(line);
    std::string ctx = "field row " + std::to_string(row + 1);
    if (cells.size() != d + 1) throw InvalidInput(ctx + ": wrong column count");
    grid->node_coords(row, x);
    for (std::size_t k = 0; k < d; ++k) {
      double c = parse_csv_number(cells[k], ctx);
      if (std::abs(c - x[k]) > 1e-9 * std::max(1.0, std::abs(x[k]))) {
        throw InvalidInput(ctx + ": coordinates do not match the grid");
      }
    }
    field[row] = parse_csv_number(cells[d], ctx);
    ++row;
  }
  if (row != grid->size()) throw InvalidInput("field file '" + path + "' has too few rows");
  return field;
}

}  // namespace mflow
