#include "kfp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kfp/error.hpp"
#include "kfp/philox.hpp"

namespace kfp {

void PathConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (n_paths < 1) throw InvalidArgument("n_paths must be at least 1");
  if (max_steps < 1) throw InvalidArgument("max_steps must be at least 1");
}

OracleProblem OracleProblem::make(const CoefficientField& coeffs, const ProductDomain& domain) {
  if (coeffs.n != domain.dim()) throw InvalidArgument("coefficient and domain dimensions differ");
  OracleProblem p{coeffs, domain, validate_assumptions(coeffs, domain, 9)};
  if (!p.report.dv_a_passed) throw AssumptionViolated("the oracle needs validated d_v a");
  return p;
}

namespace {

/// Per-step coefficient values; frozen once when A, b and f are constant.
struct StepCoefficients {
  Matrix2 sqrt_a{};
  Vector2 drift{};
  double source = 0.0;
};

class Stepper {
 public:
  explicit Stepper(const OracleProblem& p) : p_(p) {
    const auto& c = p.coeffs;
    frozen_ = c.constant_diffusion() && c.f.is_constant();
    for (int k = 0; k < c.n; ++k) frozen_ = frozen_ && c.b[static_cast<std::size_t>(k)].is_constant();
    if (frozen_) fixed_ = evaluate(PhasePoint{});
  }

  StepCoefficients at(const PhasePoint& xi) const { return frozen_ ? fixed_ : evaluate(xi); }
  bool frozen() const { return frozen_; }

 private:
  StepCoefficients evaluate(const PhasePoint& xi) const {
    PhasePoint q = xi;
    q.n = p_.coeffs.n;
    StepCoefficients s;
    s.sqrt_a = symmetric_sqrt(p_.coeffs.diffusion(q), q.n);
    s.drift = nondivergence_drift(p_.coeffs, p_.report, q);
    s.source = p_.coeffs.f(q);
    return s;
  }

  const OracleProblem& p_;
  bool frozen_ = false;
  StepCoefficients fixed_;
};

/// Smallest t in (0, 1] at which the segment p -> q leaves the closed box,
/// or a value > 1 if q is still inside.
double first_exit_fraction(const PhasePoint& p, const PhasePoint& q, const ProductDomain& d) {
  double t = 2.0;
  auto hit = [&](double a, double b, const Interval& iv) {
    if (b > iv.hi) t = std::min(t, (iv.hi - a) / (b - a));
    if (b < iv.lo) t = std::min(t, (iv.lo - a) / (b - a));
  };
  for (int k = 0; k < p.n; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    hit(p.x[kk], q.x[kk], d.x(k));
    hit(p.v[kk], q.v[kk], d.v(k));
  }
  return t;
}

double snap(double value, const Interval& iv) {
  if (std::abs(value - iv.hi) <= 1e-13 * (1.0 + std::abs(iv.hi)) || value > iv.hi) return iv.hi;
  if (std::abs(value - iv.lo) <= 1e-13 * (1.0 + std::abs(iv.lo)) || value < iv.lo) return iv.lo;
  return value;
}

}  // namespace

ExitSample sample_exit(const PhasePoint& xi0, const OracleProblem& problem, const PathConfig& cfg,
                       std::int64_t path_index) {
  const ProductDomain& d = problem.domain;
  const int n = problem.coeffs.n;
  if (!d.contains(xi0)) throw InvalidArgument("oracle start point must be interior");
  const Stepper stepper(problem);
  NormalStream rng(cfg.seed, static_cast<std::uint64_t>(path_index));
  const double dt = cfg.dt;
  const double noise = std::sqrt(2.0 * dt);

  ExitSample out;
  PhasePoint p = xi0;
  std::int64_t step = 0;
  if (n == 1 && stepper.frozen()) {
    // Constant coefficients in one dimension: scalar loop, same arithmetic
    // as the general path.
    const StepCoefficients c = stepper.at(p);
    const double kick = noise * c.sqrt_a[0][0];
    const double drift = c.drift[0] * dt;
    const double xlo = d.x(0).lo, xhi = d.x(0).hi, vlo = d.v(0).lo, vhi = d.v(0).hi;
    double x = p.x[0];
    double v = p.v[0];
    for (; step < cfg.max_steps; ++step) {
      const double xn = x + v * dt;
      const double vn = v + drift + kick * rng.next();
      if (xn < xlo || xn > xhi || vn < vlo || vn > vhi) {
        p.x[0] = x;
        p.v[0] = v;
        PhasePoint q = p;
        q.x[0] = xn;
        q.v[0] = vn;
        const double t = first_exit_fraction(p, q, d);
        out.exit = p;
        out.exit.x[0] = snap(x + t * (xn - x), d.x(0));
        out.exit.v[0] = snap(v + t * (vn - v), d.v(0));
        out.source_integral = c.source * (static_cast<double>(step) + t) * dt;
        out.label = classify_boundary(out.exit, d);
        out.steps = step + 1;
        return out;
      }
      x = xn;
      v = vn;
    }
    p.x[0] = x;
    p.v[0] = v;
    out.exit = p;
    out.steps = cfg.max_steps;
    out.censored = true;
    return out;
  }
  for (; step < cfg.max_steps; ++step) {
    const StepCoefficients c = stepper.at(p);
    std::array<double, kMaxDim> z{};
    for (int k = 0; k < n; ++k) z[static_cast<std::size_t>(k)] = rng.next();
    PhasePoint q = p;
    for (int k = 0; k < n; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      q.x[kk] = p.x[kk] + p.v[kk] * dt;
      double kick = 0.0;
      for (int m = 0; m < n; ++m) kick += c.sqrt_a[kk][static_cast<std::size_t>(m)] * z[static_cast<std::size_t>(m)];
      q.v[kk] = p.v[kk] + c.drift[kk] * dt + noise * kick;
    }
    const double t = first_exit_fraction(p, q, d);
    if (t <= 1.0) {
      PhasePoint e = p;
      for (int k = 0; k < n; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        e.x[kk] = snap(p.x[kk] + t * (q.x[kk] - p.x[kk]), d.x(k));
        e.v[kk] = snap(p.v[kk] + t * (q.v[kk] - p.v[kk]), d.v(k));
      }
      out.source_integral += c.source * t * dt;
      out.exit = e;
      out.label = classify_boundary(e, d);
      out.steps = step + 1;
      return out;
    }
    out.source_integral += c.source * dt;
    p = q;
  }
  out.exit = p;
  out.steps = cfg.max_steps;
  out.censored = true;
  return out;
}

double OracleEstimate::fraction(BoundaryLabel label) const {
  const auto it = histogram.find(label);
  return used == 0 || it == histogram.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(used);
}

OracleEstimate estimate_solution(const PhasePoint& xi0, const OracleProblem& problem, const PathConfig& cfg,
                                 Exec exec) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_paths);
  std::vector<double> value(n);
  std::vector<signed char> label(n);
  const auto& c = problem.coeffs;

  auto run = [&](std::int64_t k) {
    const ExitSample s = sample_exit(xi0, problem, cfg, k);
    const auto kk = static_cast<std::size_t>(k);
    if (s.censored) {
      label[kk] = -1;
      value[kk] = 0.0;
      return;
    }
    label[kk] = static_cast<signed char>(s.label);
    const bool velocity = s.label == BoundaryLabel::V || s.label == BoundaryLabel::Corner;
    value[kk] = (velocity ? c.g1(s.exit) : c.g2(s.exit)) + s.source_integral;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t k = 0; k < cfg.n_paths; ++k) run(k);
  } else {
    for (std::int64_t k = 0; k < cfg.n_paths; ++k) run(k);
  }

  OracleEstimate out;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (label[k] < 0) {
      ++out.censored;
      continue;
    }
    ++out.used;
    ++out.histogram[static_cast<BoundaryLabel>(label[k])];
    sum += value[k];
  }
  if (static_cast<double>(out.censored) > 0.01 * static_cast<double>(cfg.n_paths)) {
    throw TooManyCensored(std::to_string(out.censored) + " of " + std::to_string(cfg.n_paths) +
                          " paths hit max_steps");
  }
  if (out.used == 0) return out;
  out.mean = sum / static_cast<double>(out.used);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (label[k] < 0) continue;
    const double d = value[k] - out.mean;
    ss += d * d;
  }
  if (out.used > 1) out.std_error = std::sqrt(ss / static_cast<double>(out.used - 1) / static_cast<double>(out.used));
  return out;
}

nlohmann::json to_json(const OracleEstimate& estimate) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [label, count] : estimate.histogram) hist[std::string(to_string(label))] = count;
  return {{"mean", estimate.mean},
          {"stderr", estimate.std_error},
          {"paths_used", estimate.used},
          {"censored", estimate.censored},
          {"exit_histogram", hist}};
}

}  // namespace kfp
