#pragma once

#include <array>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "kfp/coefficients.hpp"
#include "kfp/geometry.hpp"
#include "kfp/krylov.hpp"
#include "kfp/oracle.hpp"

namespace kfp {

struct DomainConfig {
  enum class Type { Box, Ball, Raster };
  Type type = Type::Box;
  ProductDomain box = ProductDomain::unit_box();
  std::array<double, 2> center{};
  double radius = 1.0;
  /// Raster text (loaded from `raster` relative to the config file).
  std::string raster;
};

/// Everything a command needs, parsed from one JSON file.
struct RunConfig {
  DomainConfig domain;
  CoefficientField coeffs;
  int nx = 64;
  int nv = 64;
  SolverSettings solver;
  double eps = 0.0;
  int k_max = 64;
  double stop_tol = 0.0;
  PathConfig oracle;
  std::vector<std::array<double, 2>> probes;
  int max_sweeps = 20000;
  int cover_side = 0;
  int verify_cases = 10;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  nlohmann::json raw;
  /// Exact bytes of the config file, hashed into the manifest.
  std::string text;
};

/// Parses and range-checks a config document. `base_dir` resolves relative
/// raster paths. Throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Applies an "NXxNV" override; ConfigError on malformed input.
void apply_grid_override(RunConfig& cfg, const std::string& spec);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace kfp
