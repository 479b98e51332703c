#include "mflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <utility>

#include "mflow/io.hpp"

namespace mflow {

namespace {

double parse_number(const std::string& cell, std::size_t row) {
  return parse_csv_number(cell, "dataset row " + std::to_string(row));
}

double relative_gap(double exact, double approx) {
  return std::abs(exact - approx) / std::max(std::abs(exact), 1.0);
}

}  // namespace

Activation::Activation(ActivationKind kind, std::string name,
                       std::function<double(double)> eval, std::function<double(double)> deriv)
    : kind_(kind), name_(std::move(name)), eval_(std::move(eval)), deriv_(std::move(deriv)) {}

Activation Activation::arctan_sigmoid() {
  return Activation(
      ActivationKind::arctan_sigmoid, "arctan",
      [](double s) { return 0.5 * (1.0 + std::atan(s)); },
      [](double s) { return 0.5 / (1.0 + s * s); });
}

Activation Activation::tanh_sigmoid() {
  return Activation(
      ActivationKind::tanh_sigmoid, "tanh",
      [](double s) { return 0.5 * (1.0 + std::tanh(s)); },
      [](double s) {
        double c = std::cosh(s);
        return 0.5 / (c * c);
      });
}

Activation Activation::tabulated(std::vector<double> knots, std::vector<double> values,
                                 std::vector<double> slopes) {
  if (knots.size() < 2 || values.size() != knots.size() || slopes.size() != knots.size()) {
    throw InvalidInput("tabulated activation needs >= 2 knots with matching values and slopes");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      throw InvalidInput("tabulated activation knots must be strictly increasing");
    }
  }
  struct Table {
    std::vector<double> x, f, df;
    // Segment index k with x[k] <= s < x[k+1], clamped to the table.
    std::size_t locate(double s) const {
      auto it = std::upper_bound(x.begin(), x.end(), s);
      auto k = static_cast<std::size_t>(it - x.begin());
      return std::clamp<std::size_t>(k, 1, x.size() - 1) - 1;
    }
  };
  auto table = std::make_shared<const Table>(
      Table{std::move(knots), std::move(values), std::move(slopes)});

  auto eval = [table](double s) {
    const auto& t = *table;
    if (s <= t.x.front()) return t.f.front() + t.df.front() * (s - t.x.front());
    if (s >= t.x.back()) return t.f.back() + t.df.back() * (s - t.x.back());
    std::size_t k = t.locate(s);
    double w = t.x[k + 1] - t.x[k];
    double u = (s - t.x[k]) / w;
    double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * t.f[k] + (u3 - 2 * u2 + u) * w * t.df[k] +
           (-2 * u3 + 3 * u2) * t.f[k + 1] + (u3 - u2) * w * t.df[k + 1];
  };
  auto deriv = [table](double s) {
    const auto& t = *table;
    if (s <= t.x.front()) return t.df.front();
    if (s >= t.x.back()) return t.df.back();
    std::size_t k = t.locate(s);
    double w = t.x[k + 1] - t.x[k];
    double u = (s - t.x[k]) / w;
    double u2 = u * u;
    return ((6 * u2 - 6 * u) * t.f[k] + (-6 * u2 + 6 * u) * t.f[k + 1]) / w +
           (3 * u2 - 4 * u + 1) * t.df[k] + (3 * u2 - 2 * u) * t.df[k + 1];
  };
  return Activation(ActivationKind::tabulated, "tabulated", eval, deriv);
}

Loss::Loss(LossKind kind, std::string name, std::function<double(double, double)> eval,
           std::function<double(double, double)> partial1, double bound)
    : kind_(kind),
      name_(std::move(name)),
      eval_(std::move(eval)),
      partial1_(std::move(partial1)),
      bound_(bound) {}

Loss Loss::saturating_squared() {
  return Loss(
      LossKind::saturating_squared, "saturating_squared",
      [](double a, double b) {
        double r = a - b;
        return -std::expm1(-0.5 * r * r);
      },
      [](double a, double b) {
        double r = a - b;
        return r * std::exp(-0.5 * r * r);
      },
      1.0);
}

Loss Loss::zero() {
  return Loss(
      LossKind::zero, "zero", [](double, double) { return 0.0; },
      [](double, double) { return 0.0; }, 0.0);
}

Loss Loss::custom(std::string name, std::function<double(double, double)> eval,
                  std::function<double(double, double)> partial1, double bound) {
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw InvalidInput("custom loss needs a finite nonnegative bound");
  }
  return Loss(LossKind::custom, std::move(name), std::move(eval), std::move(partial1), bound);
}

Dataset::Dataset(std::vector<DataPoint> points, DataBounds bounds)
    : points_(std::move(points)), bounds_(std::move(bounds)) {
  if (bounds_.z_lo.empty() || bounds_.z_lo.size() != bounds_.z_hi.size()) {
    throw InvalidInput("feature box must have matching, nonempty lo/hi");
  }
  for (std::size_t k = 0; k < bounds_.z_lo.size(); ++k) {
    if (!(bounds_.z_lo[k] <= bounds_.z_hi[k])) throw InvalidInput("feature box has lo > hi");
  }
  if (!(bounds_.y_lo <= bounds_.y_hi)) throw InvalidInput("label interval has lo > hi");
  if (points_.empty()) throw InvalidInput("dataset is empty");

  double mass = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    std::string where = "dataset row " + std::to_string(i + 1);
    if (p.z.size() != feature_dim()) throw InvalidInput(where + ": feature dimension mismatch");
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) {
      throw InvalidInput(where + ": weight must be finite and nonnegative");
    }
    for (std::size_t k = 0; k < p.z.size(); ++k) {
      if (!(p.z[k] >= bounds_.z_lo[k] && p.z[k] <= bounds_.z_hi[k])) {
        throw InvalidInput(where + ": z_" + std::to_string(k + 1) + " outside feature box");
      }
    }
    if (!(p.y >= bounds_.y_lo && p.y <= bounds_.y_hi)) {
      throw InvalidInput(where + ": y outside label interval");
    }
    mass += p.weight;
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw InvalidInput("dataset total mass must be positive and finite");
  }
  total_mass_ = mass;
}

Dataset read_dataset_csv(const std::string& path, const DataBounds& bounds) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset file '" + path + "' has no header");
  auto header = split_csv_line(line);
  const std::size_t nz = bounds.z_lo.size();
  bool has_weight = false;
  if (header.size() == nz + 2 && header.back() == "weight") {
    has_weight = true;
  } else if (header.size() != nz + 1) {
    throw InvalidInput("dataset header has " + std::to_string(header.size()) +
                       " columns, expected z_1..z_" + std::to_string(nz) + ",y[,weight]");
  }
  if (header[nz] != "y") throw InvalidInput("dataset header must name the label column 'y'");

  std::vector<DataPoint> points;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InvalidInput("dataset row " + std::to_string(row) + ": expected " +
                         std::to_string(header.size()) + " columns");
    }
    DataPoint p;
    p.z.resize(nz);
    for (std::size_t k = 0; k < nz; ++k) p.z[k] = parse_number(cells[k], row);
    p.y = parse_number(cells[nz], row);
    p.weight = has_weight ? parse_number(cells[nz + 1], row) : 0.0;
    points.push_back(std::move(p));
  }
  if (points.empty()) throw InvalidInput("dataset file '" + path + "' has no rows");
  if (!has_weight) {
    for (auto& p : points) p.weight = 1.0 / static_cast<double>(points.size());
  }
  return Dataset(std::move(points), bounds);
}

double eval_network(std::span<const double> x, std::span<const double> z,
                    const Activation& act) {
  if (x.size() < 2) throw InvalidInput("network parameter needs dimension >= 2");
  if (z.size() + 1 != x.size()) throw InvalidInput("feature dimension must be d - 1");
  double pre = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) pre += x[k + 1] * z[k];
  return x[0] * act(pre);
}

double generalization_error(std::span<const double> x, const Dataset& data, const Loss& loss,
                            const Activation& act) {
  double total = 0.0;
  for (const auto& p : data.points()) {
    total += p.weight * loss(eval_network(x, p.z, act), p.y);
  }
  return total;
}

void generalization_error_gradient(std::span<const double> x, const Dataset& data,
                                   const Loss& loss, const Activation& act,
                                   std::span<double> grad) {
  if (grad.size() != x.size()) throw InvalidInput("gradient buffer has wrong size");
  if (x.size() != data.param_dim()) throw InvalidInput("feature dimension must be d - 1");
  std::fill(grad.begin(), grad.end(), 0.0);
  for (const auto& p : data.points()) {
    double pre = 0.0;
    for (std::size_t k = 0; k < p.z.size(); ++k) pre += x[k + 1] * p.z[k];
    double s = act(pre);
    double dl = p.weight * loss.partial1(x[0] * s, p.y);
    grad[0] += dl * s;
    double inner = dl * x[0] * act.deriv(pre);
    for (std::size_t k = 0; k < p.z.size(); ++k) grad[k + 1] += inner * p.z[k];
  }
}

double activation_derivative_error(const Activation& act, std::span<const double> samples) {
  double worst = 0.0;
  for (double s : samples) {
    double h = 1e-5 * std::max(1.0, std::abs(s));
    double fd = (act(s + h) - act(s - h)) / (2 * h);
    worst = std::max(worst, relative_gap(act.deriv(s), fd));
  }
  return worst;
}

double loss_derivative_error(const Loss& loss, std::span<const double> a,
                             std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("loss sample spans differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double h = 1e-5 * std::max(1.0, std::abs(a[i]));
    double fd = (loss(a[i] + h, b[i]) - loss(a[i] - h, b[i])) / (2 * h);
    worst = std::max(worst, relative_gap(loss.partial1(a[i], b[i]), fd));
  }
  return worst;
}

}  // namespace mflow
