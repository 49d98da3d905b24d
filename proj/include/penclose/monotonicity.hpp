#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "penclose/core.hpp"
#include "penclose/geometry.hpp"
#include "penclose/mesh.hpp"
#include "penclose/parallel.hpp"
#include "penclose/solver.hpp"
#include "penclose/wolff.hpp"

namespace penclose {

inline constexpr double kMonotonicityRelTol = 1e-6;

struct MonotonicityReport {
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
  double p = 0.0;
  bool pass = false;
  double slack_lower = 0.0;  // middle - lower
  double slack_upper = 0.0;  // upper - middle
  double tol = 0.0;
};

/// Sandwich of ((Lambda_s1 - Lambda_s0) f, f) between two integrals of
/// |grad u0|^p, u0 the sigma0 minimiser. Pass requires both orderings
/// and, for one-signed contrasts, the matching sign of all three values.
inline MonotonicityReport check_monotonicity(const Mesh& mesh, const ConductivityField& sigma0,
                                             const ConductivityField& sigma1,
                                             const std::vector<double>& boundary_values, double p,
                                             const SolverOptions& options = {},
                                             double rel_tol = kMonotonicityRelTol) {
  require(sigma0.values.size() == mesh.num_triangles() && sigma1.values.size() == mesh.num_triangles(),
          ErrorCode::InvalidArgument, "conductivity length mismatch");
  bool increase = true, decrease = true;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    require(sigma0.values[t] > 0.0 && sigma1.values[t] > 0.0, ErrorCode::Positivity,
            "conductivities must be strictly positive");
    increase = increase && sigma1.values[t] >= sigma0.values[t];
    decrease = decrease && sigma1.values[t] <= sigma0.values[t];
  }
  const PairingComparison cmp = compare_pairings(mesh, sigma0, sigma1, boundary_values, p, options);

  const double r = 1.0 / (p - 1.0);
  double lower = 0.0, upper = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double s0 = sigma0.values[t];
    const double s1 = sigma1.values[t];
    if (s0 == s1) continue;
    const double gp = std::pow(norm2(cmp.grad_u0[t]), 0.5 * p);
    const double a = mesh.area(t);
    lower += a * (p - 1.0) * s0 * std::pow(s1, -r) * (std::pow(s1, r) - std::pow(s0, r)) * gp;
    upper += a * (s1 - s0) * gp;
  }

  MonotonicityReport rep;
  rep.p = p;
  rep.lower = lower;
  rep.middle = cmp.difference;
  rep.upper = upper;
  rep.slack_lower = rep.middle - rep.lower;
  rep.slack_upper = rep.upper - rep.middle;
  rep.tol = std::max(rel_tol * std::max(std::abs(upper), std::abs(lower)), 100.0 * cmp.error_estimate) +
            1e-14 * cmp.pairing0;
  rep.pass = rep.slack_lower >= -rep.tol && rep.slack_upper >= -rep.tol;
  if (increase) rep.pass = rep.pass && lower >= -rep.tol && rep.middle >= -rep.tol && upper >= -rep.tol;
  if (decrease) rep.pass = rep.pass && lower <= rep.tol && rep.middle <= rep.tol && upper <= rep.tol;
  return rep;
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

enum class BoundaryKind { Wolff, Affine };

struct MonotonicityCase {
  std::size_t index = 0;
  double p = 2.0;
  Vec2 center;
  double radius = 0.0;
  double contrast = 0.0;
  BoundaryKind boundary = BoundaryKind::Affine;
  double tau = 0.0;    // Wolff
  double angle = 0.0;  // Wolff direction
  Vec2 slope;          // affine
  double offset = 0.0; // affine
};

struct MonotonicityCaseResult {
  MonotonicityCase spec;
  MonotonicityReport report;
};

struct MonotonicitySuiteConfig {
  std::vector<double> exponents{1.3, 1.5, 2.0, 3.0, 5.0};
  std::size_t cases_per_exponent = 50;
  std::uint64_t seed = 1;
  double mesh_h = 1.0 / 24.0;
  double tol = 1e-9;
  double rel_tol = kMonotonicityRelTol;
  unsigned workers = 1;
};

/// Case 0 of every exponent is the identical-conductivity smoke case.
inline std::vector<MonotonicityCase> generate_cases(const MonotonicitySuiteConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::vector<MonotonicityCase> cases;
  std::size_t index = 0;
  for (double p : config.exponents) {
    for (std::size_t k = 0; k < config.cases_per_exponent; ++k) {
      MonotonicityCase c;
      c.index = index++;
      c.p = p;
      c.radius = uniform(rng, 0.05, 0.2);
      c.center = {uniform(rng, 0.25, 0.75), uniform(rng, 0.25, 0.75)};
      c.contrast = k == 0 ? 0.0 : uniform(rng, -0.9, 4.0);
      c.boundary = uniform01(rng) < 0.5 ? BoundaryKind::Wolff : BoundaryKind::Affine;
      c.tau = uniform(rng, 1.0, 3.0);
      c.angle = uniform(rng, 0.0, 2.0 * kPi);
      c.slope = {uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)};
      c.offset = uniform(rng, -1.0, 1.0);
      cases.push_back(c);
    }
  }
  return cases;
}

inline std::vector<MonotonicityCaseResult> run_monotonicity_suite(const MonotonicitySuiteConfig& config) {
  const Shape square = Shape::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const Mesh mesh = generate_mesh(square, config.mesh_h);
  const std::vector<MonotonicityCase> cases = generate_cases(config);
  std::map<double, std::shared_ptr<const WolffProfile>> profiles;
  for (double p : config.exponents) {
    if (!profiles.count(p)) {
      profiles[p] = std::make_shared<const WolffProfile>(integrate_profile(p, 1.0, 0.0, 1e-3, 40.0));
    }
  }
  for (const auto& c : cases) {
    require(c.tau * mesh.h_max() <= kResolution * (1.0 + 1e-12) || c.boundary == BoundaryKind::Affine,
            ErrorCode::Resolution, "mesh too coarse for the Wolff boundary data");
  }
  SolverOptions options;
  options.tol = config.tol;
  const ConductivityField sigma0 = ConductivityField::constant(mesh, 1.0);

  std::vector<MonotonicityCaseResult> results(cases.size());
  parallel_for(cases.size(), config.workers, [&](std::size_t i) {
    const MonotonicityCase& c = cases[i];
    const ConductivityField sigma1 = assign_conductivity(mesh, Shape::disk(c.center, c.radius), c.contrast);
    std::vector<double> trace;
    trace.reserve(mesh.boundary_nodes().size());
    if (c.boundary == BoundaryKind::Wolff) {
      const Vec2 rho = unit_from_angle(c.angle);
      TestFunctionParams params{DirectionFrame::from_rho(rho), c.tau, support_function(square, rho), profiles.at(c.p)};
      for (int b : mesh.boundary_nodes()) trace.push_back(eval_wolff(params, mesh.vertices()[b]).value);
    } else {
      for (int b : mesh.boundary_nodes()) trace.push_back(dot(c.slope, mesh.vertices()[b]) + c.offset);
    }
    results[i] = {c, check_monotonicity(mesh, sigma0, sigma1, trace, c.p, options, config.rel_tol)};
  });
  return results;
}

}  // namespace penclose
