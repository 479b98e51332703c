#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mflow/errors.hpp"

namespace mflow {

/// Uniform tensor grid on a box in R^d, d in {1, 2, 3}. Nodes are numbered
/// row-major in axis order (last axis fastest).
///
/// Quadrature uses the tensor trapezoidal rule: each node owns a dual cell
/// whose width along an axis is h at interior indices and h/2 at the two
/// ends. The same dual cells define the edge measures used by the diffusion
/// operator, so quadrature, operator and Fisher sums agree on the boundary.
class Grid {
 public:
  Grid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> n);

  int dim() const { return static_cast<int>(lo_.size()); }
  std::size_t size() const { return size_; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  double h(int axis) const { return h_[axis]; }
  std::size_t n(int axis) const { return n_[axis]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  double cell_volume() const { return cell_volume_; }

  /// lo + h * index, bit-reproducible.
  double coord(int axis, std::size_t index) const {
    return lo_[axis] + h_[axis] * static_cast<double>(index);
  }
  std::array<std::size_t, 3> unravel(std::size_t node) const;
  void node_coords(std::size_t node, std::span<double> out) const;
  std::vector<double> node_coords(std::size_t node) const;

  /// Trapezoidal weight (dual-cell volume) of a node.
  double node_weight(std::size_t node) const { return weights_[node]; }
  std::span<const double> node_weights() const { return weights_; }

  /// Calls f(i, j, axis, edge_measure) for every nearest-neighbour edge i -> j
  /// (j = i + stride(axis)). edge_measure is the product of h along `axis`
  /// and the dual widths across it; it equals cell_volume for interior edges.
  template <class F>
  void for_each_edge(F&& f) const;

  bool operator==(const Grid& other) const {
    return lo_ == other.lo_ && hi_ == other.hi_ && n_ == other.n_;
  }

 private:
  double dual_width(int axis, std::size_t index) const {
    return (index == 0 || index + 1 == n_[axis]) ? 0.5 * h_[axis] : h_[axis];
  }

  std::vector<double> lo_, hi_, h_;
  std::vector<std::size_t> n_, stride_;
  std::size_t size_ = 0;
  double cell_volume_ = 1.0;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Rejects dim outside {1,2,3}, n < 3 or lo >= hi on any axis.
GridPtr build_grid(int dim, std::span<const double> lo, std::span<const double> hi,
                   std::span<const std::size_t> n);

/// Same box [-radius, radius] and node count on every axis.
GridPtr build_cube_grid(int dim, double radius, std::size_t n);

/// One value per grid node.
struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0);
  ScalarField(GridPtr g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  bool all_finite() const;
};

/// Evaluates f(x) at every node.
template <class F>
ScalarField sample_field(const GridPtr& grid, F&& f) {
  ScalarField out(grid);
  std::vector<double> x(static_cast<std::size_t>(grid->dim()));
  for (std::size_t i = 0; i < grid->size(); ++i) {
    grid->node_coords(i, x);
    out.values[i] = f(std::span<const double>(x));
  }
  return out;
}

/// Trapezoidal quadrature of f over the box.
double integrate(const ScalarField& f);
/// Trapezoidal quadrature of f * weight. Fields must share a grid.
double integrate(const ScalarField& f, const ScalarField& weight);

void require_same_grid(const ScalarField& a, const ScalarField& b);

/// Discrete generator of the gamma-weighted diffusion, no-flux at the box
/// boundary:
///   (G w)_i = 1 / (gamma_i m_i) * sum_{j~i} c_ij (w_j - w_i),
///   c_ij = gamma_e * edge_measure / h^2,  gamma_e = sqrt(gamma_i gamma_j),
/// where m_i is the trapezoid weight. G is self-adjoint and nonpositive in
/// <u, v>_gamma = sum_i gamma_i m_i u_i v_i and annihilates constants.
class WeightedOperator {
 public:
  struct Edge {
    std::size_t i, j;
    double conductance;
  };

  WeightedOperator(GridPtr grid, ScalarField gamma);

  const GridPtr& grid() const { return grid_; }
  const ScalarField& gamma() const { return gamma_; }
  /// gamma_i * m_i, the weights of the gamma inner product.
  std::span<const double> node_mass() const { return node_mass_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// out = G w
  void apply(std::span<const double> w, std::span<double> out) const;
  ScalarField apply(const ScalarField& w) const;
  /// out = K w with K = -diag(node_mass) G, the symmetric graph Laplacian.
  void apply_laplacian(std::span<const double> w, std::span<double> out) const;
  /// Row sums of the conductances (diagonal of K).
  std::vector<double> laplacian_diagonal() const;

  double inner(std::span<const double> u, std::span<const double> v) const;
  /// sum_edges c_e (w_j - w_i)(v_j - v_i) = <-G w, v>_gamma
  double dirichlet_form(std::span<const double> w, std::span<const double> v) const;

 private:
  GridPtr grid_;
  ScalarField gamma_;
  std::vector<double> node_mass_;
  std::vector<Edge> edges_;
};

/// Rejects gamma that is not strictly positive and finite at every node.
WeightedOperator assemble_operator(const GridPtr& grid, const ScalarField& gamma);

/// Writes `x_1,...,x_d,value` rows, one per node, with a header.
void write_field_csv(const std::string& path, const ScalarField& field);
/// Reads a field written by write_field_csv; node coordinates must match the grid.
ScalarField read_field_csv(const std::string& path, const GridPtr& grid);

template <class F>
void Grid::for_each_edge(F&& f) const {
  const int d = dim();
  std::array<std::size_t, 3> idx{};
  for (std::size_t node = 0; node < size_; ++node) {
    idx = unravel(node);
    for (int axis = 0; axis < d; ++axis) {
      if (idx[axis] + 1 >= n_[axis]) continue;
      double measure = h_[axis];
      for (int other = 0; other < d; ++other) {
        if (other != axis) measure *= dual_width(other, idx[other]);
      }
      f(node, node + stride_[axis], axis, measure);
    }
  }
}

}  // namespace mflow
