#include "mflow/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mflow {

namespace {

std::string trim(const std::string& s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_full_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

ConfigValue parse_value(const std::string& raw, std::size_t lineno) {
  std::string v = trim(raw);
  auto where = [&] { return "config line " + std::to_string(lineno); };
  if (v.empty()) throw ConfigError(where() + ": missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ConfigError(where() + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw ConfigError(where() + ": unterminated list");
    std::vector<double> out;
    std::string body = trim(v.substr(1, v.size() - 2));
    if (body.empty()) return out;
    std::istringstream in(body);
    std::string item;
    while (std::getline(in, item, ',')) {
      auto num = parse_full_number(trim(item));
      if (!num) throw ConfigError(where() + ": list entries must be numbers");
      out.push_back(*num);
    }
    return out;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (auto num = parse_full_number(v)) return *num;
  return v;
}

void flatten_json(const nlohmann::json& j, const std::string& prefix, ConfigMap& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object()) {
      flatten_json(v, key, out);
    } else if (v.is_boolean()) {
      out[key] = v.get<bool>();
    } else if (v.is_number()) {
      out[key] = v.get<double>();
    } else if (v.is_string()) {
      out[key] = v.get<std::string>();
    } else if (v.is_array()) {
      std::vector<double> list;
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError("config key '" + key + "': list entries must be numbers");
        list.push_back(e.get<double>());
      }
      out[key] = list;
    } else {
      throw ConfigError("config key '" + key + "': unsupported value");
    }
  }
}

class Reader {
 public:
  explicit Reader(const ConfigMap& map) : map_(map) {}

  const ConfigValue* find(const std::string& key) {
    seen_.insert(key);
    auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }

  std::optional<double> number(const std::string& key) {
    auto* v = find(key);
    if (!v) return std::nullopt;
    if (auto* d = std::get_if<double>(v)) return *d;
    throw ConfigError("config key '" + key + "' must be a number");
  }

  std::optional<std::size_t> count(const std::string& key) {
    auto d = number(key);
    if (!d) return std::nullopt;
    if (*d < 0 || std::floor(*d) != *d) {
      throw ConfigError("config key '" + key + "' must be a nonnegative integer");
    }
    return static_cast<std::size_t>(*d);
  }

  std::optional<bool> boolean(const std::string& key) {
    auto* v = find(key);
    if (!v) return std::nullopt;
    if (auto* b = std::get_if<bool>(v)) return *b;
    throw ConfigError("config key '" + key + "' must be true or false");
  }

  std::optional<std::string> text(const std::string& key) {
    auto* v = find(key);
    if (!v) return std::nullopt;
    if (auto* s = std::get_if<std::string>(v)) return *s;
    throw ConfigError("config key '" + key + "' must be a string");
  }

  /// A list, or a scalar broadcast later by the caller (returned as size 1).
  std::optional<std::vector<double>> list(const std::string& key) {
    auto* v = find(key);
    if (!v) return std::nullopt;
    if (auto* l = std::get_if<std::vector<double>>(v)) return *l;
    if (auto* d = std::get_if<double>(v)) return std::vector<double>{*d};
    throw ConfigError("config key '" + key + "' must be a number or a list of numbers");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : map_) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
  }

 private:
  const ConfigMap& map_;
  std::set<std::string> seen_;
};

std::vector<double> broadcast(std::vector<double> v, std::size_t n, const std::string& key) {
  if (v.size() == 1 && n > 1) v.assign(n, v[0]);
  if (v.size() != n) {
    throw ConfigError("config key '" + key + "' needs " + std::to_string(n) + " entries");
  }
  return v;
}

}  // namespace

std::string RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

ConfigMap parse_flat_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty section");
      continue;
    }
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (out.count(key)) throw ConfigError("config key '" + key + "' given twice");
    out[key] = parse_value(body.substr(eq + 1), lineno);
  }
  return out;
}

ConfigMap parse_json_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  ConfigMap out;
  flatten_json(j, "", out);
  return out;
}

RunConfig config_from_map(const ConfigMap& map, const std::string& base_dir) {
  Reader r(map);
  RunConfig c;
  c.base_dir = base_dir;

  if (auto v = r.count("seed")) c.seed = *v;

  if (auto v = r.text("dataset.path")) c.dataset_path = *v;
  const bool has_data = c.dataset_path != "none";
  auto z_lo = r.list("dataset.z_lo");
  auto z_hi = r.list("dataset.z_hi");
  auto y_lo = r.number("dataset.y_lo");
  auto y_hi = r.number("dataset.y_hi");

  if (auto v = r.text("model.activation")) c.activation = *v;
  auto loss = r.text("model.loss");

  if (auto v = r.number("potential.lambda")) c.lambda = *v;
  if (auto v = r.number("potential.tau")) c.tau = *v;
  if (auto v = r.boolean("potential.normalize")) c.normalize_gamma = *v;
  if (auto v = r.text("potential.M_source")) {
    if (*v == "grid") {
      c.use_envelope_M = false;
    } else if (*v == "envelope") {
      c.use_envelope_M = true;
    } else {
      throw ConfigError("potential.M_source must be 'grid' or 'envelope'");
    }
  }

  if (auto v = r.text("entropy.family")) c.entropy_family = *v;
  if (auto v = r.number("entropy.q")) c.entropy_q = *v;
  if (auto v = r.number("entropy.tau")) c.entropy_tau = *v;

  if (has_data) {
    if (!z_lo || !z_hi || !y_lo || !y_hi) {
      throw ConfigError("a dataset needs dataset.z_lo, dataset.z_hi, dataset.y_lo, dataset.y_hi");
    }
    std::size_t nz = std::max(z_lo->size(), z_hi->size());
    c.bounds.z_lo = broadcast(*z_lo, nz, "dataset.z_lo");
    c.bounds.z_hi = broadcast(*z_hi, nz, "dataset.z_hi");
    c.bounds.y_lo = *y_lo;
    c.bounds.y_hi = *y_hi;
    c.loss = loss.value_or("saturating_squared");
  } else {
    if (loss && *loss != "zero") {
      throw ConfigError("model.loss must be 'zero' when dataset.path is 'none'");
    }
    c.loss = "zero";
  }

  auto dim = r.count("grid.dim");
  if (dim) {
    c.grid_dim = static_cast<int>(*dim);
  } else {
    c.grid_dim = has_data ? static_cast<int>(c.bounds.z_lo.size() + 1) : 1;
  }
  if (c.grid_dim < 1 || c.grid_dim > 3) throw ConfigError("grid.dim must be 1, 2 or 3");
  auto d = static_cast<std::size_t>(c.grid_dim);
  auto lo = r.list("grid.lo");
  auto hi = r.list("grid.hi");
  if (lo.has_value() != hi.has_value()) throw ConfigError("grid.lo and grid.hi go together");
  if (lo) {
    c.grid_lo = broadcast(*lo, d, "grid.lo");
    c.grid_hi = broadcast(*hi, d, "grid.hi");
  }
  if (auto v = r.number("grid.radius")) c.grid_radius = *v;
  if (lo && c.grid_radius) throw ConfigError("give either grid.lo/grid.hi or grid.radius");
  if (auto v = r.list("grid.n")) {
    for (double x : broadcast(*v, d, "grid.n")) {
      if (x < 0 || std::floor(x) != x) throw ConfigError("grid.n entries must be integers");
      c.grid_n.push_back(static_cast<std::size_t>(x));
    }
  } else {
    c.grid_n.assign(d, c.grid_dim == 1 ? 401 : 101);
  }

  if (auto v = r.number("solver.dt")) c.solver.dt = *v;
  if (auto v = r.number("solver.t_final")) c.solver.t_final = *v;
  if (auto v = r.text("solver.scheme")) {
    if (*v == "implicit_euler" || *v == "implicit-euler") {
      c.solver.scheme = TimeScheme::implicit_euler;
    } else if (*v == "crank_nicolson" || *v == "crank-nicolson") {
      c.solver.scheme = TimeScheme::crank_nicolson;
    } else {
      throw ConfigError("solver.scheme must be implicit_euler or crank_nicolson");
    }
  }
  if (auto v = r.count("solver.record_every")) c.solver.record_every = *v;
  if (auto v = r.number("solver.linear_tol")) c.solver.linear_tol = *v;
  if (auto v = r.count("solver.max_linear_iters")) c.solver.max_linear_iters = *v;
  if (auto v = r.text("solver.preconditioner")) {
    if (*v == "jacobi") {
      c.solver.preconditioner = Preconditioner::jacobi;
    } else if (*v == "none") {
      c.solver.preconditioner = Preconditioner::none;
    } else {
      throw ConfigError("solver.preconditioner must be jacobi or none");
    }
  }

  if (auto v = r.text("initial.kind")) {
    if (*v == "uniform") {
      c.initial = InitialKind::uniform;
    } else if (*v == "gaussian") {
      c.initial = InitialKind::gaussian;
    } else if (*v == "file") {
      c.initial = InitialKind::file;
    } else {
      throw ConfigError("initial.kind must be uniform, gaussian or file");
    }
  }
  if (auto v = r.list("initial.mean")) c.initial_mean = broadcast(*v, d, "initial.mean");
  if (c.initial_mean.empty()) c.initial_mean.assign(d, 0.0);
  if (auto v = r.number("initial.stdev")) c.initial_stdev = *v;
  if (auto v = r.text("initial.path")) c.initial_path = *v;

  if (auto v = r.count("output.snapshot_every")) c.snapshot_every = *v;
  if (auto v = r.count("verify.samples")) c.verify_samples = *v;

  r.reject_unknown();
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  if (!(c.lambda > 0.0)) throw ConfigError("potential.lambda must be positive");
  if (!(c.tau > 0.0)) throw ConfigError("potential.tau must be positive");
  if (!(c.effective_entropy_tau() > 0.0)) throw ConfigError("entropy.tau must be positive");
  static const std::set<std::string> families{"shannon", "tsallis", "nonconvex_probe"};
  if (!families.count(c.entropy_family)) {
    throw ConfigError("entropy.family must be shannon, tsallis or nonconvex_probe");
  }
  if (c.entropy_family == "tsallis" && !(c.entropy_q > 1.0)) {
    throw ConfigError("entropy.q must exceed 1 for tsallis");
  }
  if (c.activation != "arctan" && c.activation != "tanh") {
    throw ConfigError("model.activation must be arctan or tanh");
  }
  if (c.loss != "saturating_squared" && c.loss != "zero") {
    throw ConfigError("model.loss must be saturating_squared or zero");
  }
  auto d = static_cast<std::size_t>(c.grid_dim);
  if (c.dataset_path != "none" && c.bounds.z_lo.size() + 1 != d) {
    throw ConfigError("grid.dim must equal the feature dimension plus one");
  }
  if (c.grid_n.size() != d) throw ConfigError("grid.n needs one entry per axis");
  for (auto n : c.grid_n) {
    if (n < 3) throw ConfigError("grid.n entries must be at least 3");
  }
  for (std::size_t k = 0; k < c.grid_lo.size(); ++k) {
    if (!(c.grid_lo[k] < c.grid_hi[k])) throw ConfigError("grid.lo must be below grid.hi");
  }
  if (c.grid_radius && !(*c.grid_radius > 0.0)) throw ConfigError("grid.radius must be positive");
  try {
    validate(c.solver);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (c.initial_mean.size() != d) throw ConfigError("initial.mean needs one entry per axis");
  if (c.initial_stdev && !(*c.initial_stdev > 0.0)) throw ConfigError("initial.stdev must be positive");
  if (c.initial == InitialKind::file && c.initial_path.empty()) {
    throw ConfigError("initial.kind = file needs initial.path");
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::filesystem::path p(path);
  std::string base = p.has_parent_path() ? p.parent_path().string() : ".";
  ConfigMap map = p.extension() == ".json" ? parse_json_config(buf.str()) : parse_flat_config(buf.str());
  return config_from_map(map, base);
}

}  // namespace mflow
