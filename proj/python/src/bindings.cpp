#include <iostream>
#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "mflow/experiment.hpp"

namespace py = pybind11;
using namespace mflow;

namespace {

py::dict to_dict(const RateReport& r) {
  py::dict d;
  d["fitted_rate"] = r.fitted_rate;
  d["lambda_theory"] = r.lambda_theory;
  d["E_star"] = r.E_star;
  d["fit_window"] = py::make_tuple(r.t_lo, r.t_hi);
  d["fit_residual"] = r.fit_residual;
  d["points_used"] = r.points_used;
  return d;
}

py::dict to_dict(const EnergyRecord& r) {
  py::dict d;
  d["t"] = r.t;
  d["energy"] = r.energy;
  d["fisher"] = r.fisher;
  d["mass"] = r.mass;
  d["w_min"] = r.w_min;
  d["w_max"] = r.w_max;
  return d;
}

/// Result of one simulation: the records plus the serialized summary.
struct Simulation {
  std::vector<EnergyRecord> records;
  std::string summary;
  std::vector<double> final_w;
  std::vector<std::vector<double>> nodes;
};

Simulation simulate(const std::string& config_path) {
  py::gil_scoped_release release;
  Experiment exp = prepare_experiment(load_config(config_path));
  RunOutcome run = run_experiment(exp);
  Simulation s;
  s.records = run.records;
  s.summary = summary_json(exp, run).dump();
  s.final_w = run.final_state.w.values;
  const auto& g = *exp.gibbs->grid;
  for (std::size_t i = 0; i < g.size(); ++i) s.nodes.push_back(g.node_coords(i));
  return s;
}

}  // namespace

PYBIND11_MODULE(_mflow, m) {
  m.doc() = "Mean-field Langevin flow solver";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<EntropyGenerator>(m, "EntropyGenerator")
      .def_property_readonly("name", &EntropyGenerator::name)
      .def_property_readonly("q", &EntropyGenerator::q)
      .def_property_readonly("tau", &EntropyGenerator::tau)
      .def("phi", &EntropyGenerator::phi, py::arg("s"))
      .def("phi1", &EntropyGenerator::phi1, py::arg("s"))
      .def("phi2", &EntropyGenerator::phi2, py::arg("s"))
      .def("psi", [](const EntropyGenerator& g, double s) { return psi_decompose(g, s); }, py::arg("s"))
      .def("conjugate", [](const EntropyGenerator& g, double r) { return legendre_conjugate(g, r); },
           py::arg("r"), "Numeric Legendre conjugate sup_s {s r - phi(s)}")
      .def("conjugate_closed_form", &EntropyGenerator::conjugate_closed_form, py::arg("r"))
      .def("check_assumptions", [](const EntropyGenerator& g) {
        py::dict out;
        for (const auto& c : check_assumptions(g).checks) {
          py::dict entry;
          entry["passed"] = c.passed;
          entry["margin"] = c.margin;
          entry["note"] = c.note;
          out[py::str(c.name)] = entry;
        }
        return out;
      });

  m.def("shannon", &make_shannon, py::arg("tau") = 1.0);
  m.def("tsallis", &make_tsallis, py::arg("q"), py::arg("tau") = 1.0);
  m.def("nonconvex_probe", &make_nonconvex_probe);

  m.def("lambda_rate", &lambda_rate, py::arg("lam"), py::arg("tau"), py::arg("M"));
  m.def("gibbs_mass_bound", &gibbs_mass_bound, py::arg("M"), py::arg("lam"), py::arg("tau"), py::arg("dim"));
  m.def("default_box_radius", &default_box_radius, py::arg("lam"), py::arg("tau"), py::arg("M"),
        py::arg("dim"), py::arg("tail") = 1e-10);
  m.def("ou_oracle", [](double m0, double lam, double tau, double t) {
    auto s = ou_oracle(m0, lam, tau, t);
    return py::make_tuple(s.mean, s.energy_shannon);
  }, py::arg("m0"), py::arg("lam"), py::arg("tau"), py::arg("t"));

  m.def("fit_decay_rate", [](const std::vector<double>& t, const std::vector<double>& energy, double e_star,
                             double lambda_theory) {
    if (t.size() != energy.size()) throw InvalidInput("t and energy must have the same length");
    std::vector<EnergyRecord> records(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      records[i].t = t[i];
      records[i].energy = energy[i];
    }
    return to_dict(fit_decay_rate(records, e_star, lambda_theory));
  }, py::arg("t"), py::arg("energy"), py::arg("e_star") = 0.0, py::arg("lambda_theory") = 0.0);

  m.def("_simulate", [](const std::string& path) {
    Simulation s = simulate(path);
    py::list records;
    for (const auto& r : s.records) records.append(to_dict(r));
    return py::make_tuple(records, s.summary, s.nodes, s.final_w);
  }, py::arg("config_path"));

  m.def("_verify", [](const std::string& path) {
    std::vector<VerifyEntry> entries;
    {
      py::gil_scoped_release release;
      entries = run_verification(prepare_experiment(load_config(path)));
    }
    return verify_json(entries).dump();
  }, py::arg("config_path"));

  m.def("cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command-line tool; returns (exit_code, stdout, stderr).");
}
