#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mflow/errors.hpp"

namespace mflow {

enum class ActivationKind { arctan_sigmoid, tanh_sigmoid, tabulated };

/// Scalar activation sigma with its derivative.
class Activation {
 public:
  /// sigma(s) = (1 + arctan s) / 2
  static Activation arctan_sigmoid();
  /// sigma(s) = (1 + tanh s) / 2
  static Activation tanh_sigmoid();
  /// Cubic Hermite interpolation through (knot, value, slope) triples,
  /// extended linearly outside the knot range. Knots must be strictly
  /// increasing and at least two.
  static Activation tabulated(std::vector<double> knots, std::vector<double> values,
                              std::vector<double> slopes);

  ActivationKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double operator()(double s) const { return eval_(s); }
  double deriv(double s) const { return deriv_(s); }

 private:
  Activation(ActivationKind kind, std::string name, std::function<double(double)> eval,
             std::function<double(double)> deriv);

  ActivationKind kind_;
  std::string name_;
  std::function<double(double)> eval_;
  std::function<double(double)> deriv_;
};

enum class LossKind { saturating_squared, zero, custom };

/// Bounded loss l(a, b) on R x Y with the derivative in its first slot.
class Loss {
 public:
  /// l(a, b) = 1 - exp(-(a - b)^2 / 2), bounded by 1.
  static Loss saturating_squared();
  /// l = 0.
  static Loss zero();
  /// `bound` must be a global bound of `eval` on R x Y.
  static Loss custom(std::string name, std::function<double(double, double)> eval,
                     std::function<double(double, double)> partial1, double bound);

  LossKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double operator()(double a, double b) const { return eval_(a, b); }
  double partial1(double a, double b) const { return partial1_(a, b); }
  double bound() const { return bound_; }

 private:
  Loss(LossKind kind, std::string name, std::function<double(double, double)> eval,
       std::function<double(double, double)> partial1, double bound);

  LossKind kind_;
  std::string name_;
  std::function<double(double, double)> eval_;
  std::function<double(double, double)> partial1_;
  double bound_;
};

struct DataPoint {
  std::vector<double> z;
  double y = 0.0;
  double weight = 1.0;
};

/// Axis-aligned bounds declared for the feature box Z and the label interval Y.
struct DataBounds {
  std::vector<double> z_lo, z_hi;
  double y_lo = 0.0, y_hi = 0.0;
};

/// Weighted empirical measure on Z x Y. Weights need not sum to one.
class Dataset {
 public:
  /// Validates dimensions, weights, finiteness of the total mass, and that
  /// every atom lies inside `bounds`.
  Dataset(std::vector<DataPoint> points, DataBounds bounds);

  const std::vector<DataPoint>& points() const { return points_; }
  const DataBounds& bounds() const { return bounds_; }
  std::size_t feature_dim() const { return bounds_.z_lo.size(); }
  /// Parameter dimension d = feature_dim + 1.
  std::size_t param_dim() const { return feature_dim() + 1; }
  double total_mass() const { return total_mass_; }

 private:
  std::vector<DataPoint> points_;
  DataBounds bounds_;
  double total_mass_ = 0.0;
};

/// Reads `z_1,...,z_{d-1},y[,weight]` with a mandatory header. Missing
/// weights default to 1/n. Out-of-bounds rows raise InvalidInput naming
/// the (1-based, header excluded) row.
Dataset read_dataset_csv(const std::string& path, const DataBounds& bounds);

/// h_x(z) = x_0 * sigma(x' . z) with x = (x_0, x').
double eval_network(std::span<const double> x, std::span<const double> z,
                    const Activation& act);

/// Sum_i weight_i * l(h_x(z_i), y_i).
double generalization_error(std::span<const double> x, const Dataset& data, const Loss& loss,
                            const Activation& act);

/// Gradient of generalization_error in x by the chain rule; `grad` has size d.
void generalization_error_gradient(std::span<const double> x, const Dataset& data,
                                   const Loss& loss, const Activation& act,
                                   std::span<double> grad);

/// Largest relative mismatch between `deriv` and a centered difference of
/// the activation over `samples`.
double activation_derivative_error(const Activation& act, std::span<const double> samples);

/// Largest relative mismatch between `partial1` and a centered difference in
/// the first slot over the (a, b) sample pairs.
double loss_derivative_error(const Loss& loss, std::span<const double> a,
                             std::span<const double> b);

}  // namespace mflow
