#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "matherlab/experiment.hpp"
#include "matherlab/field.hpp"

using namespace mather;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// small flat-spec pipeline: six cells at n = 8 with the estimate checks on
ExperimentConfig smoke_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.spec_name = "free";
  cfg.P_list = {{0.0}, {0.5}};
  cfg.eps_list = {0.2, 0.1, 0.05};
  cfg.n_x = 8;
  cfg.n_t = 8;
  cfg.estimates_P = {0.5};
  cfg.estimates_eps = 0.05;
  cfg.out_dir = out_dir;
  cfg.validate();
  return cfg;
}

} // namespace

TEST_CASE("config text parses comments, parameters and multi-token lists") {
  const std::string text =
      "# smoke configuration\n"
      "spec = pendulum\n"
      "param.amplitude = 0.5\n"
      "P = -0.5 0 0.5\n"
      "eps = 0.05 0.2 0.1\n"
      "n_x = 16\n"
      "n_t = 32\n"
      "; alternate comment style\n"
      "drift_tol = 1e-9\n"
      "verify_estimates = true\n"
      "estimates_P = 0.5\n"
      "estimates_eps = 0.1\n"
      "sde = false\n"
      "out = somewhere\n";
  ExperimentConfig cfg = parse_config_text(text);
  cfg.validate();
  CHECK(cfg.spec_name == "pendulum");
  CHECK(cfg.spec_params.at("amplitude") == 0.5);
  REQUIRE(cfg.P_list.size() == 3);
  CHECK(cfg.P_list[0] == std::vector<double>{-0.5});
  CHECK(cfg.n_x == 16);
  CHECK(cfg.n_t == 32);
  CHECK(cfg.solver.drift_tol == 1e-9);
  // validate() normalizes the sweep to descending eps
  CHECK(cfg.eps_list == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(cfg.out_dir == "somewhere");
  CHECK_FALSE(cfg.sde_enabled);

  SUBCASE("two component momenta for planar specs") {
    ExperimentConfig c2 = parse_config_text(
        "spec = smoothed2d\nP = 0,0 0.5,-0.25\neps = 0.2\n"
        "verify_estimates = false\nn_x = 16\nn_t = 16\n");
    c2.validate();
    REQUIRE(c2.P_list.size() == 2);
    CHECK(c2.P_list[1] == std::vector<double>{0.5, -0.25});
  }
}

TEST_CASE("schema violations raise config errors") {
  CHECK_THROWS_AS(parse_config_text("unknown_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("spec pendulum\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("n_x = twelve\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("dict = v2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("format = yaml\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config_text("spec = nosuch\n").validate(), ConfigError);

  SUBCASE("grids below the minimum are rejected") {
    ExperimentConfig cfg = parse_config_text("n_x = 4\n");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("the estimates cell must sit on the sweep lattice") {
    ExperimentConfig cfg = parse_config_text(
        "spec = free\nP = 0\neps = 0.2 0.1\nestimates_P = 0\nestimates_eps = 0.07\n");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("component count must match the spec dimension") {
    ExperimentConfig cfg = parse_config_text("spec = smoothed2d\nP = 0.5\neps = 0.2\n");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("parse errors carry the line number") {
    try {
      parse_config_text("spec = free\nbogus = 1\n");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }
}

TEST_CASE("canonical form round-trips and the hash tracks every field") {
  ExperimentConfig cfg = smoke_config("out");
  ExperimentConfig back = parse_config_text(cfg.canonical_string());
  back.validate();
  CHECK(back.canonical_string() == cfg.canonical_string());
  CHECK(back.hash() == cfg.hash());
  CHECK(cfg.hash().size() == 16);

  ExperimentConfig mod = cfg;
  mod.n_x = 16;
  CHECK(mod.hash() != cfg.hash());
  mod = cfg;
  mod.spec_params["d"] = 1.0;
  CHECK(mod.hash() != cfg.hash());
  mod = cfg;
  mod.sde.seed = 2;
  CHECK(mod.hash() != cfg.hash());
}

TEST_CASE("reference configuration is self-consistent") {
  const ExperimentConfig cfg = default_reference_config();
  CHECK(cfg.spec_name == "pendulum");
  CHECK(cfg.n_x == 128);
  CHECK(cfg.n_t == 128);
  CHECK(cfg.eps_list == std::vector<double>{0.2, 0.1, 0.05, 0.025, 0.0125});
  REQUIRE(cfg.P_list.size() == 5);
  CHECK(cfg.P_list.front() == std::vector<double>{-1.0});
  CHECK(cfg.P_list.back() == std::vector<double>{1.0});
  CHECK(cfg.sde_enabled);
  CHECK(cfg.sde.n_paths == 400);
  CHECK(cfg.verify_estimates);
  CHECK(cfg.estimates_P == std::vector<double>{0.5});
}

TEST_CASE("full pipeline on the flat spec produces a clean artifact tree") {
  const fs::path base = fresh_dir("matherlab_exp_smoke");
  const fs::path run = base / "run";
  ExperimentConfig cfg = smoke_config(run.string());

  std::ostringstream log;
  const ExperimentResult res = run_experiment(cfg, &log);
  CHECK(res.exit_code == 0);
  CHECK(res.failures.empty());
  REQUIRE(fs::exists(res.manifest_path));

  const nlohmann::json manifest = nlohmann::json::parse(slurp(res.manifest_path));
  CHECK(manifest["config_hash"] == cfg.hash());
  CHECK(manifest["verify_pass"] == true);
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["d"] == 1);
  for (const auto& rel : manifest["artifacts"])
    CHECK(fs::exists(run / rel.get<std::string>()));
  CHECK(fs::exists(run / "sweep.csv"));
  CHECK(fs::exists(run / "verify.json"));
  CHECK(fs::exists(run / "verify.txt"));

  SUBCASE("a second identical run reproduces every byte") {
    const fs::path first = base / "first";
    fs::rename(run, first);
    const ExperimentResult again = run_experiment(cfg, nullptr);
    CHECK(again.exit_code == 0);
    std::string diff;
    const bool same = artifacts_match(run.string(), first.string(), &diff);
    CAPTURE(diff);
    CHECK(same);
  }

  fs::remove_all(base);
}

TEST_CASE("export converts tables, reports and field dumps between formats") {
  const fs::path base = fresh_dir("matherlab_exp_export");
  const fs::path run = base / "run";
  ExperimentConfig cfg = smoke_config(run.string());
  run_experiment(cfg, nullptr);

  SUBCASE("numeric csv tables survive a json round trip byte for byte") {
    const fs::path j = base / "sweep.json";
    const fs::path c = base / "sweep2.csv";
    export_artifact((run / "sweep.csv").string(), j.string(), "json");
    export_artifact(j.string(), c.string(), "csv");
    CHECK(slurp(c) == slurp(run / "sweep.csv"));
  }

  SUBCASE("field dumps survive the same round trip") {
    fs::path phi;
    for (const auto& e : fs::directory_iterator(run / "fields"))
      if (e.path().string().find("_phi.csv") != std::string::npos) phi = e.path();
    REQUIRE(!phi.empty());
    const fs::path j = base / "phi.json";
    const fs::path c = base / "phi2.csv";
    export_artifact(phi.string(), j.string(), "json");
    export_artifact(j.string(), c.string(), "csv");
    CHECK(slurp(c) == slurp(phi));
  }

  SUBCASE("verification reports flatten to csv") {
    const fs::path c = base / "verify.csv";
    export_artifact((run / "verify.json").string(), c.string(), "csv");
    const std::string text = slurp(c);
    CHECK(text.rfind("context,name,kind,lhs,rhs,abs_residual,rel_residual,tolerance,pass",
                     0) == 0);
  }

  SUBCASE("unknown target formats are schema errors") {
    CHECK_THROWS_AS(
        export_artifact((run / "sweep.csv").string(), (base / "x").string(), "yaml"),
        ConfigError);
  }

  fs::remove_all(base);
}

TEST_CASE("artifact comparison masks wall-clock entries and nothing else") {
  const fs::path a = fresh_dir("matherlab_cmp_a");
  const fs::path b = fresh_dir("matherlab_cmp_b");

  spit(a / "manifest.json", "{\"wall_seconds\": {\"total\": 1.5}, \"x\": 1}\n");
  spit(b / "manifest.json", "{\"wall_seconds\": {\"total\": 9.0}, \"x\": 1}\n");
  spit(a / "sweep.csv", "P1,eps,hbar,seconds\n0,0.2,1.25,0.31\n");
  spit(b / "sweep.csv", "P1,eps,hbar,seconds\n0,0.2,1.25,7.77\n");

  std::string diff;
  CHECK(artifacts_match(a.string(), b.string(), &diff));

  SUBCASE("a numeric difference is not masked") {
    spit(b / "sweep.csv", "P1,eps,hbar,seconds\n0,0.2,1.26,7.77\n");
    diff.clear();
    CHECK_FALSE(artifacts_match(a.string(), b.string(), &diff));
    CHECK(diff.find("sweep.csv") != std::string::npos);
  }

  SUBCASE("an extra file is a mismatch") {
    spit(b / "stray.txt", "x\n");
    diff.clear();
    CHECK_FALSE(artifacts_match(a.string(), b.string(), &diff));
  }

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("non-converging sweeps exit with partial artifacts") {
  const fs::path base = fresh_dir("matherlab_exp_fail");
  ExperimentConfig cfg;
  cfg.spec_name = "pendulum";
  cfg.P_list = {{0.0}};
  cfg.eps_list = {0.05};
  cfg.n_x = 16;
  cfg.n_t = 16;
  cfg.solver.max_periods = 2;
  cfg.verify_estimates = false;
  cfg.out_dir = (base / "run").string();
  cfg.validate();

  const ExperimentResult res = run_experiment(cfg, nullptr);
  CHECK(res.exit_code == 3);
  CHECK_FALSE(res.failures.empty());
  CHECK(fs::exists(base / "run" / "manifest.json"));
  CHECK(fs::exists(base / "run" / "sweep.csv"));
  const nlohmann::json manifest = nlohmann::json::parse(slurp(base / "run" / "manifest.json"));
  CHECK(manifest["exit_code"] == 3);
  CHECK(manifest["failures"].size() == res.failures.size());
  fs::remove_all(base);
}
