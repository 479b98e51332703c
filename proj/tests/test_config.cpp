#include <doctest.h>

#include <fstream>

#include "mflow/config.hpp"
#include "support.hpp"

using namespace mflow;

TEST_SUITE("config") {

TEST_CASE("flat format") {
  auto map = parse_flat_config(R"(
# comment
seed = 3
[grid]
lo = [-1, -2.5]   # inline comment
n = 11
[entropy]
family = "tsallis"
[potential]
normalize = false
)");
  CHECK(std::get<double>(map.at("seed")) == 3.0);
  CHECK(std::get<std::vector<double>>(map.at("grid.lo")) == std::vector<double>{-1.0, -2.5});
  CHECK(std::get<std::string>(map.at("entropy.family")) == "tsallis");
  CHECK(std::get<bool>(map.at("potential.normalize")) == false);

  CHECK_THROWS_AS(parse_flat_config("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("x = \"open\n"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("x = [1, b]\n"), ConfigError);
}

TEST_CASE("json and flat formats agree") {
  auto flat = parse_flat_config("[grid]\nn = 5\nlo = [0, 1]\n[solver]\nscheme = \"crank_nicolson\"\n");
  auto json = parse_json_config(R"({"grid": {"n": 5, "lo": [0, 1]}, "solver": {"scheme": "crank_nicolson"}})");
  CHECK(flat == json);
  CHECK_THROWS_AS(parse_json_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_json_config("{oops"), ConfigError);
}

TEST_CASE("bundled fixtures load") {
  auto ou = load_config(testing::config_path("ou_shannon.toml"));
  CHECK(ou.dataset_path == "none");
  CHECK(ou.loss == "zero");
  CHECK(ou.grid_dim == 1);
  CHECK(ou.grid_n == std::vector<std::size_t>{401});
  CHECK(ou.solver.t_final == 3.0);
  CHECK(ou.initial_mean == std::vector<double>{0.5});

  auto ts = load_config(testing::config_path("ou_tsallis.json"));
  CHECK(ts.entropy_family == "tsallis");
  CHECK(ts.entropy_q == 2.0);

  auto two = load_config(testing::config_path("three_atoms_2d.toml"));
  CHECK(two.grid_dim == 2);
  CHECK(two.grid_n == std::vector<std::size_t>{101, 101});
  CHECK(two.initial_mean == std::vector<double>{0.5, -0.5});
  CHECK_FALSE(two.grid_radius.has_value());
}

TEST_CASE("defaults and broadcasting") {
  auto c = config_from_map(parse_flat_config("[grid]\nlo = -3\nhi = 3\n"), ".");
  CHECK(c.grid_dim == 1);
  CHECK(c.grid_n == std::vector<std::size_t>{401});
  CHECK(c.loss == "zero");
  CHECK(c.effective_entropy_tau() == 1.0);

  auto d = config_from_map(parse_flat_config("[grid]\ndim = 2\nlo = -3\nhi = 3\n"), ".");
  CHECK(d.grid_lo == std::vector<double>{-3.0, -3.0});
  CHECK(d.grid_n == std::vector<std::size_t>{101, 101});
}

TEST_CASE("rejected configurations") {
  auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(config_from_map(parse_flat_config(text), "."), ConfigError);
  };
  bad("unknown = 1\n");
  bad("[potential]\nlambda = -1\n");
  bad("[potential]\ntau = 0\n");
  bad("[entropy]\nfamily = \"renyi\"\n");
  bad("[entropy]\nfamily = \"tsallis\"\nq = 1\n");
  bad("[model]\nloss = \"saturating_squared\"\n");
  bad("[dataset]\npath = \"d.csv\"\n");
  bad("[grid]\nn = 2\n");
  bad("[grid]\nlo = 1\nhi = 0\n");
  bad("[grid]\nlo = 1\n");
  bad("[grid]\nlo = -1\nhi = 1\nradius = 2\n");
  bad("[grid]\ndim = 4\n");
  bad("[solver]\ndt = 0\n");
  bad("[solver]\nscheme = \"rk4\"\n");
  bad("[initial]\nkind = \"file\"\n");
  bad("[initial]\nmean = [1, 2]\n");
  bad("[potential]\nM_source = \"guess\"\n");
  bad("seed = -1\n");
  bad("seed = \"x\"\n");
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
  auto c = load_config(testing::config_path("three_atoms_2d.toml"));
  CHECK(c.resolve("three_atoms.csv") == testing::config_path("three_atoms.csv"));
  CHECK(c.resolve("/abs/file.csv") == "/abs/file.csv");
}

}
