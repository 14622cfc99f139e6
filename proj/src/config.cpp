#include "kfp/config.hpp"

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "kfp/error.hpp"
#include "kfp/expression.hpp"

namespace kfp {

namespace {

using json = nlohmann::json;

const json& require(const json& obj, const std::string& key, const std::string& prefix = "") {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError("missing key: " + prefix + key);
  return obj.at(key);
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key: " + prefix + key);
  }
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("wrong type for key: " + path);
  }
}

template <class T>
void read_optional(const json& obj, const std::string& key, T& out, const std::string& prefix) {
  if (obj.contains(key)) out = get<T>(obj, key, prefix + key);
}

Interval read_interval(const json& obj, const std::string& key, const std::string& prefix) {
  const json& v = require(obj, key, prefix);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError("key " + prefix + key + " must be [lo, hi]");
  }
  Interval iv{v[0].get<double>(), v[1].get<double>()};
  if (!(iv.lo < iv.hi)) throw ConfigError("key " + prefix + key + " needs lo < hi");
  return iv;
}

DomainConfig parse_domain(const json& d, const std::string& base_dir) {
  if (!d.is_object()) throw ConfigError("key domain must be an object");
  DomainConfig out;
  const std::string type = d.contains("type") ? get<std::string>(d, "type", "domain.type") : "box";
  if (type == "box") {
    reject_unknown(d, {"type", "x", "v"}, "domain.");
    out.box = ProductDomain({read_interval(d, "x", "domain.")}, {read_interval(d, "v", "domain.")});
  } else if (type == "ball") {
    reject_unknown(d, {"type", "center", "radius"}, "domain.");
    out.type = DomainConfig::Type::Ball;
    if (d.contains("center")) {
      const auto c = get<std::vector<double>>(d, "center", "domain.center");
      if (c.size() != 2) throw ConfigError("key domain.center must be [x, v]");
      out.center = {c[0], c[1]};
    }
    read_optional(d, "radius", out.radius, "domain.");
    if (!(out.radius > 0.0)) throw ConfigError("key domain.radius must be positive");
    out.box = ProductDomain({{out.center[0] - out.radius, out.center[0] + out.radius}},
                            {{out.center[1] - out.radius, out.center[1] + out.radius}});
  } else if (type == "raster") {
    reject_unknown(d, {"type", "x", "v", "raster"}, "domain.");
    out.type = DomainConfig::Type::Raster;
    out.box = ProductDomain({read_interval(d, "x", "domain.")}, {read_interval(d, "v", "domain.")});
    require(d, "raster", "domain.");
    const auto rel = get<std::string>(d, "raster", "domain.raster");
    std::filesystem::path p(rel);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot read domain.raster: " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    out.raster = ss.str();
  } else {
    throw ConfigError("key domain.type must be box, ball or raster");
  }
  return out;
}

ScalarField field_from(const json& c, const std::string& key, const ScalarField& fallback) {
  if (!c.contains(key)) return fallback;
  const json& v = c.at(key);
  if (v.is_number()) return ScalarField::constant(v.get<double>());
  if (!v.is_string()) throw ConfigError("key coefficients." + key + " must be a number or expression");
  try {
    return ScalarField::from_expression(Expression::parse(v.get<std::string>(), 1));
  } catch (const ConfigError& e) {
    throw ConfigError("key coefficients." + key + ": " + e.what());
  }
}

CoefficientField parse_coefficients(const json& c) {
  if (!c.is_object()) throw ConfigError("key coefficients must be an object");
  reject_unknown(c, {"preset", "a", "b", "f", "g", "g1", "g2"}, "coefficients.");
  CoefficientField out = c.contains("preset")
                             ? make_preset(get<std::string>(c, "preset", "coefficients.preset"), 1)
                             : CoefficientField::isotropic(1, 1.0, ScalarField::constant(0.0));
  if (!c.contains("preset") && !c.contains("a")) throw ConfigError("missing key: coefficients.a");
  out.A[0][0] = field_from(c, "a", out.A[0][0]);
  out.b[0] = field_from(c, "b", out.b[0]);
  out.f = field_from(c, "f", out.f);
  if (c.contains("g")) out.g1 = out.g2 = field_from(c, "g", out.g1);
  out.g1 = field_from(c, "g1", out.g1);
  out.g2 = field_from(c, "g2", out.g2);
  if (!c.contains("preset")) out.name = "custom";
  return out;
}

void check_range(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("key " + key + " out of range: " + what);
}

}  // namespace

RunConfig parse_config(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc, {"domain", "coefficients", "grid", "solver", "eps", "viscosity", "oracle", "perron", "verify",
                       "seed", "out_dir", "$schema", "description"},
                 "");
  RunConfig cfg;
  cfg.raw = doc;
  cfg.domain = parse_domain(require(doc, "domain"), base_dir);
  cfg.coeffs = parse_coefficients(require(doc, "coefficients"));

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    reject_unknown(g, {"nx", "nv"}, "grid.");
    read_optional(g, "nx", cfg.nx, "grid.");
    read_optional(g, "nv", cfg.nv, "grid.");
  }
  check_range(cfg.nx >= 4 && cfg.nx <= 4096, "grid.nx", "4..4096");
  check_range(cfg.nv >= 4 && cfg.nv <= 4096, "grid.nv", "4..4096");

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    reject_unknown(s, {"method", "rel_tol", "max_iter", "restart", "jacobi"}, "solver.");
    if (s.contains("method")) cfg.solver.method = parse_solver_method(get<std::string>(s, "method", "solver.method"));
    read_optional(s, "rel_tol", cfg.solver.rel_tol, "solver.");
    read_optional(s, "max_iter", cfg.solver.max_iter, "solver.");
    read_optional(s, "restart", cfg.solver.restart, "solver.");
    read_optional(s, "jacobi", cfg.solver.jacobi, "solver.");
  }
  check_range(cfg.solver.rel_tol > 0.0 && cfg.solver.rel_tol < 1.0, "solver.rel_tol", "(0, 1)");
  check_range(cfg.solver.max_iter >= 0, "solver.max_iter", ">= 0");
  check_range(cfg.solver.restart >= 1, "solver.restart", ">= 1");

  read_optional(doc, "eps", cfg.eps, "");
  check_range(cfg.eps >= 0.0, "eps", ">= 0");

  if (doc.contains("viscosity")) {
    const json& v = doc.at("viscosity");
    reject_unknown(v, {"k_max", "stop_tol"}, "viscosity.");
    read_optional(v, "k_max", cfg.k_max, "viscosity.");
    read_optional(v, "stop_tol", cfg.stop_tol, "viscosity.");
  }
  check_range(cfg.k_max >= 2 && cfg.k_max <= 4096, "viscosity.k_max", "2..4096");
  check_range(cfg.stop_tol >= 0.0, "viscosity.stop_tol", ">= 0");

  read_optional(doc, "seed", cfg.seed, "");
  cfg.oracle.seed = cfg.seed;
  if (doc.contains("oracle")) {
    const json& o = doc.at("oracle");
    reject_unknown(o, {"dt", "n_paths", "max_steps", "seed", "points"}, "oracle.");
    read_optional(o, "dt", cfg.oracle.dt, "oracle.");
    read_optional(o, "n_paths", cfg.oracle.n_paths, "oracle.");
    read_optional(o, "max_steps", cfg.oracle.max_steps, "oracle.");
    read_optional(o, "seed", cfg.oracle.seed, "oracle.");
    if (o.contains("points")) {
      for (const auto& p : o.at("points")) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("key oracle.points entries must be [x, v]");
        cfg.probes.push_back({p[0].get<double>(), p[1].get<double>()});
      }
    }
  }
  check_range(cfg.oracle.dt > 0.0 && cfg.oracle.dt <= 0.1, "oracle.dt", "(0, 0.1]");
  check_range(cfg.oracle.n_paths >= 1, "oracle.n_paths", ">= 1");
  check_range(cfg.oracle.max_steps >= 1, "oracle.max_steps", ">= 1");

  if (doc.contains("perron")) {
    const json& p = doc.at("perron");
    reject_unknown(p, {"max_sweeps", "cover_side"}, "perron.");
    read_optional(p, "max_sweeps", cfg.max_sweeps, "perron.");
    read_optional(p, "cover_side", cfg.cover_side, "perron.");
  }
  check_range(cfg.max_sweeps >= 1, "perron.max_sweeps", ">= 1");
  check_range(cfg.cover_side >= 0, "perron.cover_side", ">= 0");

  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    reject_unknown(v, {"cases"}, "verify.");
    read_optional(v, "cases", cfg.verify_cases, "verify.");
  }
  check_range(cfg.verify_cases >= 1 && cfg.verify_cases <= 1000, "verify.cases", "1..1000");
  read_optional(doc, "out_dir", cfg.out_dir, "");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  RunConfig cfg = parse_config(doc, std::filesystem::path(path).parent_path().string().empty()
                                        ? "."
                                        : std::filesystem::path(path).parent_path().string());
  cfg.text = text;
  return cfg;
}

void apply_grid_override(RunConfig& cfg, const std::string& spec) {
  static const std::regex pattern(R"((\d+)[xX](\d+))");
  std::smatch m;
  if (!std::regex_match(spec, m, pattern)) throw ConfigError("--grid expects NXxNV, got " + spec);
  cfg.nx = std::stoi(m[1]);
  cfg.nv = std::stoi(m[2]);
  check_range(cfg.nx >= 4 && cfg.nx <= 4096, "--grid", "NX in 4..4096");
  check_range(cfg.nv >= 4 && cfg.nv <= 4096, "--grid", "NV in 4..4096");
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace kfp
