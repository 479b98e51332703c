#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mflow/errors.hpp"
#include "mflow/model.hpp"
#include "mflow/solver.hpp"

namespace mflow {

/// Malformed or inconsistent run configuration.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

enum class InitialKind { uniform, gaussian, file };

/// Everything one experiment needs. See README for the key reference.
struct RunConfig {
  /// Directory relative paths inside the config are resolved against.
  std::string base_dir = ".";

  std::string dataset_path = "none";
  DataBounds bounds;

  std::string activation = "arctan";
  std::string loss = "saturating_squared";

  double lambda = 1.0;
  double tau = 1.0;
  bool normalize_gamma = true;
  /// Use the certified envelope instead of the grid maximum for M in Lambda.
  bool use_envelope_M = false;

  std::string entropy_family = "shannon";
  double entropy_q = 2.0;
  /// Falls back to `tau` when unset.
  std::optional<double> entropy_tau;

  int grid_dim = 1;
  std::vector<double> grid_lo, grid_hi;
  std::vector<std::size_t> grid_n;
  /// Box half-width when lo/hi are not given; nullopt picks it from the
  /// Gaussian tail bound.
  std::optional<double> grid_radius;

  SolverConfig solver;

  InitialKind initial = InitialKind::gaussian;
  std::vector<double> initial_mean;
  std::optional<double> initial_stdev;
  std::string initial_path;

  std::uint64_t seed = 0;
  /// Write a density snapshot every this many records; 0 disables.
  std::size_t snapshot_every = 0;
  std::size_t verify_samples = 100;

  double effective_entropy_tau() const { return entropy_tau.value_or(tau); }
  std::string resolve(const std::string& path) const;
};

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;
using ConfigMap = std::map<std::string, ConfigValue>;

/// Flat `key = value` text with optional `[section]` headers that prefix
/// keys as `section.key`. Values: numbers, true/false, quoted or bare
/// strings, and `[a, b, ...]` number lists. `#` starts a comment.
ConfigMap parse_flat_config(const std::string& text);

/// Nested JSON objects flattened into dotted keys.
ConfigMap parse_json_config(const std::string& text);

/// Builds and validates a RunConfig. Unknown keys are rejected.
RunConfig config_from_map(const ConfigMap& map, const std::string& base_dir);

/// Reads a `.json` file as JSON and anything else as the flat format.
RunConfig load_config(const std::string& path);

/// Cross-field validation (dimensions, positivity, enumerations).
void validate(const RunConfig& cfg);

}  // namespace mflow
