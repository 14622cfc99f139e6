#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "kfp/commands.hpp"
#include "kfp/config.hpp"
#include "kfp/error.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kConfigDir = fs::path(KFP_SOURCE_DIR) / "config";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "kfp_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs kfp_lab with `args`; stderr goes to `err` when given.
int lab(const std::string& args, const fs::path& err = {}) {
  std::string cmd = std::string(KFP_LAB_PATH) + " " + args + " > /dev/null";
  cmd += err.empty() ? " 2>/dev/null" : " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

json small_box(const std::string& preset) {
  return {{"domain", {{"type", "box"}, {"x", {0, 1}}, {"v", {-1, 1}}}},
          {"coefficients", {{"preset", preset}}},
          {"grid", {{"nx", 16}, {"nv", 16}}},
          {"verify", {{"cases", 2}}}};
}

}  // namespace

TEST_CASE("config parsing") {
  const kfp::RunConfig cfg = kfp::load_config((kConfigDir / "unit_box_half.json").string());
  CHECK(cfg.nx == 128);
  CHECK(cfg.oracle.n_paths == 200000);
  CHECK(cfg.oracle.seed == 7);
  CHECK(cfg.probes.size() == 5);
  CHECK(cfg.coeffs.name == "unit_box_half");

  const kfp::RunConfig custom = kfp::load_config((kConfigDir / "custom_source.json").string());
  CHECK(custom.solver.method == kfp::SolverMethod::DirectBanded);
  CHECK(custom.coeffs.A[0][0].at(0.3, 1.0) == doctest::Approx(1.25));
  CHECK(custom.coeffs.g2.at(0.5, 0.0) == doctest::Approx(0.25));

  const kfp::RunConfig raster = kfp::load_config((kConfigDir / "raster.json").string());
  CHECK(raster.domain.type == kfp::DomainConfig::Type::Raster);
  CHECK_FALSE(raster.domain.raster.empty());

  json doc = small_box("constant");
  doc.erase("domain");
  try {
    kfp::parse_config(doc);
    FAIL("expected ConfigError");
  } catch (const kfp::ConfigError& e) {
    CHECK(std::string(e.what()).find("missing key: domain") != std::string::npos);
  }
  doc = small_box("constant");
  doc["grid"]["nx"] = 2;
  CHECK_THROWS_AS(kfp::parse_config(doc), kfp::ConfigError);
  doc = small_box("constant");
  doc["solver"] = {{"tolerance", 1e-8}};
  CHECK_THROWS_WITH_AS(kfp::parse_config(doc), doctest::Contains("solver.tolerance"), kfp::ConfigError);
  doc = small_box("constant");
  doc["coefficients"] = {{"a", "1 +"}};
  CHECK_THROWS_WITH_AS(kfp::parse_config(doc), doctest::Contains("coefficients.a"), kfp::ConfigError);

  kfp::RunConfig over = kfp::parse_config(small_box("constant"));
  kfp::apply_grid_override(over, "24x40");
  CHECK(over.nx == 24);
  CHECK(over.nv == 40);
  CHECK_THROWS_AS(kfp::apply_grid_override(over, "24by40"), kfp::ConfigError);
  CHECK(kfp::fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(kfp::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("exit code taxonomy") {
  CHECK(kfp::exit_code_for(kfp::ConfigError("x")) == 2);
  CHECK(kfp::exit_code_for(kfp::AssumptionViolated("x")) == 2);
  CHECK(kfp::exit_code_for(kfp::NotConverged("x", {})) == 3);
  CHECK(kfp::exit_code_for(kfp::TooManyCensored("x")) == 3);
}

TEST_CASE("verify on constant data passes") {
  const fs::path out = scratch("verify");
  CHECK(lab("verify --config " + (kConfigDir / "constant.json").string() + " --out " + out.string()) == 0);
  const json v = json::parse(slurp(out / "verdicts.json"));
  CHECK(v["passed"] == true);
  CHECK(v["verdicts"].size() > 5);
  const json m = json::parse(slurp(out / "manifest.json"));
  CHECK(m["command"] == "verify");
  CHECK(m["config_fnv1a"].get<std::string>().size() == 16);
  CHECK(m.contains("compiler"));
}

TEST_CASE("malformed configs exit with 2") {
  const fs::path dir = scratch("malformed");
  json doc = small_box("constant");
  doc.erase("domain");
  const fs::path cfg = write_config(dir, doc);
  CHECK(lab("solve --config " + cfg.string(), dir / "err.txt") == 2);
  CHECK(slurp(dir / "err.txt").find("missing key: domain") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{ \"domain\": ";
  CHECK(lab("solve --config " + (dir / "broken.json").string()) == 2);
  CHECK(lab("solve --config " + (dir / "absent.json").string()) == 2);
  CHECK(lab("frobnicate --config " + (kConfigDir / "constant.json").string()) == 2);
  CHECK(lab("solve") == 2);
  CHECK(lab("solve --config " + (kConfigDir / "constant.json").string() + " --grid 2x2") == 2);
  // precondition: the viscosity sequence needs a product domain
  CHECK(lab("viscosity --config " + (kConfigDir / "ball.json").string() + " --out " + dir.string()) == 2);
}

TEST_CASE("solve, perron, oracle, crosscheck and report") {
  const fs::path dir = scratch("commands");
  json doc = small_box("unit_box_half");
  doc["oracle"] = {{"dt", 1e-3}, {"n_paths", 2000}, {"points", {{0.5, 0.25}, {0.3, -0.4}}}};
  doc["seed"] = 11;
  doc["out_dir"] = (dir / "out").string();
  const fs::path cfg = write_config(dir, doc);
  const std::string base = " --config " + cfg.string();

  CHECK(lab("solve" + base + " --grid 20x12") == 0);
  std::ifstream csv(dir / "out" / "u.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 1 + 20 * 12);
  CHECK(json::parse(slurp(dir / "out" / "manifest.json"))["grid"] == json({20, 12}));

  CHECK(lab("viscosity" + base) == 0);
  CHECK(json::parse(slurp(dir / "out" / "viscosity.json"))["records"].size() >= 2);

  CHECK(lab("oracle" + base) == 0);
  const std::string first = slurp(dir / "out" / "oracle.json");
  CHECK(lab("oracle" + base) == 0);
  CHECK(slurp(dir / "out" / "oracle.json") == first);
  CHECK(lab("oracle" + base + " --seed 12") == 0);
  CHECK(slurp(dir / "out" / "oracle.json") != first);
  CHECK(json::parse(first)["oracle"]["points"].size() == 2);

  CHECK(lab("crosscheck" + base) == 0);
  const json cc = json::parse(slurp(dir / "out" / "crosscheck.json"));
  CHECK(cc["passed"] == true);
  CHECK(cc["rows"].size() == 2);

  CHECK(lab("perron --config " + (kConfigDir / "ball.json").string() + " --grid 24x24 --out " +
            (dir / "out").string()) == 0);
  CHECK(json::parse(slurp(dir / "out" / "perron.json"))["ordered"] == true);

  CHECK(lab("report" + base) == 0);
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  for (const char* key : {"summary", "viscosity", "oracle", "crosscheck", "perron"}) CHECK(report.contains(key));
}

TEST_CASE("raster perron run") {
  const fs::path dir = scratch("raster");
  CHECK(lab("perron --config " + (kConfigDir / "raster.json").string() + " --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "upper.csv"));
  CHECK(json::parse(slurp(dir / "perron.json"))["connected"] == true);
}
