#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "mflow/config.hpp"
#include "mflow/experiment.hpp"

namespace mflow::testing {

inline std::string config_path(const std::string& name) {
  return (std::filesystem::path(MFLOW_CONFIG_DIR) / name).string();
}

/// Quadratic potential with a Gaussian translate as the initial density.
inline RunConfig ou_config(std::size_t n = 401, double dt = 1e-3, double t_final = 3.0) {
  RunConfig c;
  c.dataset_path = "none";
  c.loss = "zero";
  c.grid_dim = 1;
  c.grid_lo = {-6.0};
  c.grid_hi = {6.0};
  c.grid_n = {n};
  c.solver.dt = dt;
  c.solver.t_final = t_final;
  c.solver.record_every = 10;
  c.initial = InitialKind::gaussian;
  c.initial_mean = {0.5};
  return c;
}

/// Three weighted atoms on a 2-D parameter grid.
inline RunConfig three_atom_config(std::size_t n = 101) {
  RunConfig c = load_config(config_path("three_atoms_2d.toml"));
  c.grid_n.assign(2, n);
  return c;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mflow::testing
