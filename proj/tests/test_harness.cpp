#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "chainlab/checks.hpp"
#include "chainlab/config.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/harness.hpp"
#include "chainlab/resonance.hpp"

using namespace chainlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chainlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int cli(const std::string& args) {
  const int status = std::system((std::string(CHAINLAB_CLI) + " " + args + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Split on commas into doubles (header skipped).
std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const RunConfig c = parse_config(json::object());
  CHECK(c.model.kind == ModelKind::KG);
  CHECK(c.integrator.scheme == Scheme::VelocityVerlet);
  CHECK(c.ensemble_seeds == std::vector<std::uint64_t>{1});

  const RunConfig d = parse_config({{"model", {{"kind", "DNLS"}, {"g", 0.5}}},
                                    {"integrator", {{"midpoint_tol", 1e-12}}},
                                    {"ensemble_seeds", {3, 4}}});
  CHECK(d.integrator.scheme == Scheme::StrangSplit);
  CHECK(d.integrator.step == 0.005);
  CHECK(d.integrator.midpoint_tol == 1e-12);
  CHECK(d.model.g == 0.5);
  CHECK(d.ensemble_seeds == std::vector<std::uint64_t>{3, 4});
}

TEST_CASE("config errors name the field") {
  CHECK(config_error({{"integrator", {{"step", -0.01}}}}).find("integrator.step") !=
        std::string::npos);
  CHECK(config_error({{"model", {{"disorder", {{"sead", 1}}}}}}).find("model.disorder") !=
        std::string::npos);
  CHECK(config_error({{"horizon", "long"}}).find("horizon") != std::string::npos);
  CHECK(config_error({{"initial", {{"support", {1, 3}}}}}).find("initial.support") !=
        std::string::npos);
  CHECK(config_error({{"mc", {{"pattern", {{"sites", {0, 0}}, {"signs", {1, -1}}}}}}})
            .find("mc.pattern") != std::string::npos);
  CHECK(config_error({{"model", {{"kind", "KG"}}}, {"integrator", {{"scheme", "strang-split"}}}})
            .find("integrator") != std::string::npos);
  CHECK(config_error({{"outputs", {{"format", "xml"}}}}).find("outputs.format") !=
        std::string::npos);
  CHECK_FALSE(config_error({{"expansion", {{"n", 9}}}}).empty());
  CHECK_FALSE(config_error({{"resonance", {{"window", {3, 1}}}}}).empty());
}

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("1,2, 30") == std::vector<std::uint64_t>{1, 2, 30});
  CHECK(parse_seed_list("18446744073709551615") ==
        std::vector<std::uint64_t>{18446744073709551615ULL});
  CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("-1"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("18446744073709551616"), ConfigError);
}

TEST_CASE("resolved config round trips per command") {
  RunConfig c = parse_config({{"model", {{"kind", "DNLS"}, {"disorder", {{"density", "smooth-bump"}}}}},
                              {"initial", {{"E0", 2.0}, {"support", {-1, 1}}}},
                              {"sampling", {{"kind", "uniform"}, {"dt", 0.5}}},
                              {"mc", {{"tail", {{"n", 2}}}}},
                              {"outputs", {{"format", "json"}}}});
  for (const std::string cmd : {"", "simulate", "expand", "resonance", "mc", "schedule", "verify"}) {
    const json j = to_json(c, cmd);
    CHECK(to_json(parse_config(j), cmd) == j);
  }
}

TEST_CASE("simulate: decoupled sites keep M constant") {
  const fs::path out = scratch("g0");
  RunConfig c = parse_config({{"model", {{"g", 0.0}}}, {"horizon", 100.0}});
  c.ensemble_seeds = {1, 2, 3, 4};
  c.out_dir = out.string();
  const CommandOutput r = cmd_simulate(c);
  CHECK(r.exit_code == kExitOk);
  for (auto seed : c.ensemble_seeds) {
    const auto rows = read_csv(out / ("seed_" + std::to_string(seed) + ".csv"));
    REQUIRE(rows.size() > 10);
    for (const auto& row : rows)
      CHECK(std::abs(row[1] - rows[0][1]) <= c.integrator.energy_drift_tol * rows[0][1]);
  }
  const json s = json::parse(slurp(out / "summary.json"));
  CHECK(s["seeds"].size() == 4);
  CHECK(s["failed_seeds"] == 0);
  CHECK(parse_config(s["config"]).model.g == 0.0);
}

TEST_CASE("simulate: per-seed failures and exit codes") {
  RunConfig c = parse_config({{"horizon", 50.0}, {"integrator", {{"energy_drift_tol", 1e-12}}}});
  c.ensemble_seeds = {1, 2};
  c.out_dir = scratch("fail").string();
  const CommandOutput r = cmd_simulate(c);
  CHECK(r.exit_code == kExitRuntimeFailure);
  for (const auto& s : r.summary["seeds"]) {
    CHECK(s["status"] == "failed");
    CHECK(s["error"].get<std::string>().find("drift") != std::string::npos);
  }
  CHECK(run_command("nonsense", c, std::cerr) == kExitConfigError);
}

TEST_CASE("outputs are byte-identical and reproducible from the summary") {
  RunConfig c = parse_config({{"horizon", 30.0}, {"expansion", {{"x", {0, 1}}, {"n", 2}}}});
  c.ensemble_seeds = {5, 6, 7};
  for (const std::string cmd : {"simulate", "expand", "resonance", "mc", "schedule"}) {
    RunConfig a = c, b = c;
    a.out_dir = scratch(cmd + "_a").string();
    a.workers = 1;
    b.out_dir = scratch(cmd + "_b").string();
    b.workers = 3;
    REQUIRE(run_command(cmd, a, std::cerr) == kExitOk);
    REQUIRE(run_command(cmd, b, std::cerr) == kExitOk);
    size_t files = 0;
    for (const auto& e : fs::directory_iterator(a.out_dir)) {
      const auto name = e.path().filename();
      if (name == "summary.json") continue;
      CHECK(slurp(e.path()) == slurp(fs::path(b.out_dir) / name));
      ++files;
    }
    CHECK(files > 0);

    const json s = json::parse(slurp(fs::path(a.out_dir) / "summary.json"));
    const RunConfig back = parse_config(s["config"]);
    RunConfig again = back;
    again.out_dir = scratch(cmd + "_c").string();
    REQUIRE(run_command(cmd, again, std::cerr) == kExitOk);
    for (const auto& e : fs::directory_iterator(a.out_dir))
      if (e.path().filename() != "summary.json")
        CHECK(slurp(e.path()) == slurp(fs::path(again.out_dir) / e.path().filename()));
  }
}

TEST_CASE("expand x=0 n=1 gives degree-4 u and degree-6 g") {
  RunConfig c = parse_config({{"expansion", {{"x", {0}}, {"n", 1}, {"explicit_check", true}}}});
  c.out_dir = scratch("expand").string();
  const CommandOutput r = cmd_expand(c);
  CHECK(r.exit_code == kExitOk);
  const json e = json::parse(slurp(fs::path(c.out_dir) / "expansion_s1_x0.json"));
  const Polynomial u = polynomial_from_json(e["u"]);
  const Polynomial g = polynomial_from_json(e["g"]);
  CHECK(u.min_degree() == 4);
  CHECK(u.max_degree() == 4);
  CHECK(g.min_degree() == 6);
  CHECK(g.max_degree() == 6);
  CHECK(r.summary["cases"][0]["explicit_check"].size() == 2);
  CHECK(fs::exists(fs::path(c.out_dir) / "expansion_terms.csv"));
}

TEST_CASE("resonance report has disjoint maximal intervals") {
  RunConfig c = parse_config({{"resonance", {{"n", 1}, {"delta", 0.05}, {"window", {-50, 50}}}}});
  c.ensemble_seeds = {1, 2, 3};
  c.out_dir = scratch("resonance").string();
  REQUIRE(cmd_resonance(c).exit_code == kExitOk);
  for (auto seed : c.ensemble_seeds) {
    const auto rows = read_csv(fs::path(c.out_dir) / ("resonance_s" + std::to_string(seed) + ".csv"));
    REQUIRE(rows.size() == 101);
    std::vector<char> flags;
    for (const auto& row : rows) {
      flags.push_back(static_cast<char>(row[2]));
      CHECK((row[1] <= 0.05) == (row[2] == 1.0));
    }
    const auto iv = maximal_intervals(flags, -50);
    for (size_t k = 1; k < iv.size(); ++k) CHECK(iv[k].left > iv[k - 1].right + 1);
  }
}

TEST_CASE("mc estimates are monotone in delta") {
  RunConfig c = parse_config({{"mc", {{"samples", 20000}, {"tail", {{"n", 1}}}}}});
  c.out_dir = scratch("mc").string();
  REQUIRE(cmd_mc(c).exit_code == kExitOk);
  const auto rows = read_csv(fs::path(c.out_dir) / "mc_s1.csv");
  REQUIRE(rows.size() == 5);
  for (size_t k = 1; k < rows.size(); ++k) CHECK(rows[k][1] >= rows[k - 1][1]);
  CHECK(fs::exists(fs::path(c.out_dir) / "tail_s1.csv"));
}

TEST_CASE("schedule command") {
  RunConfig c = parse_config({{"outputs", {{"format", "json"}}}});
  c.out_dir = scratch("schedule").string();
  REQUIRE(cmd_schedule(c).exit_code == kExitOk);
  const json j = json::parse(slurp(fs::path(c.out_dir) / "schedule.json"));
  CHECK(j["schedule"][0]["n"] == 2);
  CHECK(j["threshold"][0]["eps_of_t"].get<double>() ==
        doctest::Approx(std::exp(-16.0)).epsilon(1e-12));
}

TEST_CASE("corrupted bracket fails Jacobi") {
  const auto good = check_bracket_calculus(default_bracket(), 20, 11);
  const auto bad = check_bracket_calculus(corrupted_bracket(), 20, 11);
  for (const auto& v : good) CHECK(v.passed);
  CHECK(bad[0].name == "bracket.antisymmetry");
  CHECK(bad[0].passed);
  CHECK(bad[2].name == "bracket.jacobi");
  CHECK_FALSE(bad[2].passed);
  CHECK(bad[2].observed > 1e-3);
  CHECK_FALSE(check_spectral(corrupted_bracket(), 200, 3).passed);
}

TEST_CASE("verdict JSON shape") {
  const json j = to_json(check_schedule_arithmetic());
  CHECK(j["name"] == "schedule.arithmetic");
  CHECK(j["passed"] == true);
  CHECK(j.contains("observed"));
  CHECK(j.contains("tolerance"));
}

TEST_CASE("command line exit codes and precedence") {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.json") << R"({"integrator": {"step": -0.01}})";
    std::ofstream(dir / "unknown.json") << R"({"integrater": {}})";
    std::ofstream(dir / "broken.json") << R"({"horizon": )";
    std::ofstream(dir / "ok.json") << R"({"horizon": 5, "ensemble_seeds": [9]})";
  }
  const std::string out = " --out " + (dir / "out").string();
  CHECK(cli("simulate --config " + (dir / "bad.json").string() + out) == kExitConfigError);
  CHECK(cli("simulate --config " + (dir / "unknown.json").string() + out) == kExitConfigError);
  CHECK(cli("simulate --config " + (dir / "broken.json").string() + out) == kExitConfigError);
  CHECK(cli("simulate --format yaml" + out) == kExitConfigError);
  CHECK(cli("frobnicate") == kExitConfigError);
  CHECK(cli("simulate --config " + (dir / "ok.json").string() + out) == kExitOk);
  CHECK(fs::exists(dir / "out" / "seed_9.csv"));

  // --seeds beats CHAINLAB_SEED beats the file.
  CHECK(cli("simulate --config " + (dir / "ok.json").string() + out + "_env --format json") == 0);
  CHECK(std::system(("CHAINLAB_SEED=4 " + std::string(CHAINLAB_CLI) + " schedule --config " +
                     (dir / "ok.json").string() + out + "_env")
                        .c_str()) == 0);
  CHECK(json::parse(slurp(dir / "out_env" / "summary.json"))["config"]["ensemble_seeds"] ==
        json{4});
  CHECK(std::system(("CHAINLAB_SEED=4 " + std::string(CHAINLAB_CLI) + " schedule --seeds 7,8" +
                     out + "_flag")
                        .c_str()) == 0);
  CHECK(json::parse(slurp(dir / "out_flag" / "summary.json"))["config"]["ensemble_seeds"] ==
        json{7, 8});
}
