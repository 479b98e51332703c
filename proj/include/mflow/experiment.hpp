#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflow/analysis.hpp"
#include "mflow/config.hpp"
#include "mflow/entropy.hpp"
#include "mflow/grid.hpp"
#include "mflow/model.hpp"
#include "mflow/potential.hpp"
#include "mflow/solver.hpp"

namespace mflow {

/// Everything derived from a RunConfig before time stepping starts.
struct Experiment {
  RunConfig config;
  /// Empty when the potential has no data term.
  std::optional<Dataset> data;
  Loss loss;
  Activation act;
  EntropyGenerator gen;
  std::shared_ptr<const GibbsField> gibbs;
  std::shared_ptr<const WeightedOperator> op;
  /// Initial density before unit-mass rescaling.
  ScalarField w0;
  /// M entering Lambda (grid maximum or envelope per config).
  double M_used = 0.0;
  double lambda_theory = 0.0;
  Minimizer minimizer;
};

/// Loads the dataset, builds grid, potential, operator, generator and w0.
Experiment prepare_experiment(const RunConfig& cfg);

struct RunOutcome {
  std::vector<EnergyRecord> records;
  std::optional<RateReport> rate;
  std::string rate_error;
  std::size_t steps = 0;
  FlowState final_state;
  double w0_max = 0.0;
  double max_mass_error = 0.0;
  double min_w = 0.0;
  double max_w = 0.0;
  bool positivity_warning = false;
  double wall_seconds = 0.0;
};

using SnapshotSink = std::function<void(double t, const ScalarField& w)>;

/// Evolves the flow and post-processes the energy records. `snapshot` is
/// called every config.snapshot_every records when both are set.
RunOutcome run_experiment(const Experiment& exp, const SnapshotSink& snapshot = {});

/// Deterministic run summary (no timing).
nlohmann::json summary_json(const Experiment& exp, const RunOutcome& out);

nlohmann::json rate_json(const RateReport& rep);

/// `t,energy,fisher,mass,w_min,w_max` with a header row.
std::string timeseries_csv(const std::vector<EnergyRecord>& records);
std::vector<EnergyRecord> read_timeseries_csv(const std::string& path);

struct VerifyEntry {
  std::string name;
  bool passed = false;
  /// Measured quantity and the threshold it is compared against.
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Runs every invariant check on the experiment. When `run` is null the flow
/// is evolved first.
std::vector<VerifyEntry> run_verification(const Experiment& exp, const RunOutcome* run = nullptr);

nlohmann::json verify_json(const std::vector<VerifyEntry>& entries);

}  // namespace mflow
