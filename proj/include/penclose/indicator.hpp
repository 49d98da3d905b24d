// Indicator function I(tau, t) = tau^(2-p) ((Lambda_sigma - Lambda_1) u0, u0),
// tau-sweeps, support-function estimates and convex-hull reconstruction.

#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "penclose/core.hpp"
#include "penclose/geometry.hpp"
#include "penclose/io.hpp"
#include "penclose/mesh.hpp"
#include "penclose/parallel.hpp"
#include "penclose/solver.hpp"
#include "penclose/wolff.hpp"

namespace penclose {

/// |I| below this multiple of the propagated solver error is noise.
inline constexpr double kNoiseFactor = 10.0;

struct IndicatorSample {
  Vec2 rho;
  double tau = 0.0;
  double t = 0.0;
  double value = 0.0;
  double pairing_sigma = 0.0;
  double pairing_background = 0.0;
  /// pairing_sigma - pairing_background, formed without cancellation;
  /// value = tau^(2-p) * difference exactly.
  double difference = 0.0;
  double noise_floor = 0.0;

  bool above_noise_floor() const { return std::isfinite(value) && std::abs(value) > noise_floor; }
};

inline double tau_weight(double tau, double p) { return std::pow(tau, static_cast<double>(kDimension) - p); }

inline std::vector<double> wolff_trace(const Mesh& mesh, const TestFunctionParams& params) {
  std::vector<double> out;
  out.reserve(mesh.boundary_nodes().size());
  for (int b : mesh.boundary_nodes()) out.push_back(eval_wolff(params, mesh.vertices()[b]).value);
  return out;
}

inline std::vector<double> wolff_nodal(const Mesh& mesh, const TestFunctionParams& params) {
  std::vector<double> out(mesh.num_vertices());
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) out[v] = eval_wolff(params, mesh.vertices()[v]).value;
  return out;
}

/// Pairs the Wolff trace against sigma and against the background 1 on the
/// same mesh with the same solver settings.
inline IndicatorSample indicator(const Mesh& mesh, const ConductivityField& sigma,
                                 std::shared_ptr<const WolffProfile> profile, Vec2 rho, double tau, double t, double p,
                                 SolverOptions options = {}, double noise_factor = kNoiseFactor) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  require(profile != nullptr && profile->p() == p, ErrorCode::InvalidArgument,
          "profile exponent does not match p");
  require(tau * mesh.h_max() <= kResolution * (1.0 + 1e-12), ErrorCode::Resolution,
          "tau * h_max = " + std::to_string(tau * mesh.h_max()) + " exceeds " + std::to_string(kResolution));
  TestFunctionParams params{DirectionFrame::from_rho(rho), tau, t, std::move(profile)};
  const std::vector<double> trace = wolff_trace(mesh, params);
  options.initial_guess = wolff_nodal(mesh, params);
  const ConductivityField background = ConductivityField::constant(mesh, 1.0);
  const PairingComparison cmp = compare_pairings(mesh, background, sigma, trace, p, options);

  IndicatorSample out;
  out.rho = params.frame.rho;
  out.tau = tau;
  out.t = t;
  out.pairing_background = cmp.pairing0;
  out.pairing_sigma = cmp.pairing1;
  out.difference = cmp.difference;
  const double w = tau_weight(tau, p);
  out.value = w * cmp.difference;
  out.noise_floor = noise_factor * w * cmp.error_estimate;
  return out;
}

struct SweepResult {
  std::vector<IndicatorSample> samples;
  /// Least-squares d(log|I|)/dtau over the upper half of the usable samples.
  double slope = 0.0;
  double fit_residual = 0.0;
  bool fitted = false;
  /// +1 or -1 when all usable samples share a sign, 0 otherwise.
  int sign = 0;
  std::size_t usable = 0;
  /// Set when some sample fell below its noise floor.
  bool noise_limited = false;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InsufficientData, "line fit needs two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorCode::InsufficientData, "line fit needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

/// Sign classification and slope fit for samples at one (rho, t).
inline SweepResult summarize_sweep(std::vector<IndicatorSample> samples) {
  SweepResult out;
  out.samples = std::move(samples);
  for (std::size_t i = 1; i < out.samples.size(); ++i) {
    require(out.samples[i].tau > out.samples[i - 1].tau, ErrorCode::InvalidArgument,
            "sweep tau values must be strictly increasing");
  }
  std::vector<double> taus, logs;
  int positive = 0, negative = 0;
  for (const auto& s : out.samples) {
    if (!s.above_noise_floor()) {
      out.noise_limited = true;
      continue;
    }
    taus.push_back(s.tau);
    logs.push_back(std::log(std::abs(s.value)));
    (s.value > 0.0 ? positive : negative) += 1;
  }
  out.usable = taus.size();
  if (out.usable > 0 && (positive == 0 || negative == 0)) out.sign = positive > 0 ? 1 : -1;
  if (out.usable >= 2) {
    const std::size_t take = std::max<std::size_t>(2, (out.usable + 1) / 2);
    const std::vector<double> x(taus.end() - static_cast<std::ptrdiff_t>(take), taus.end());
    const std::vector<double> y(logs.end() - static_cast<std::ptrdiff_t>(take), logs.end());
    const LineFit fit = fit_line(x, y);
    out.slope = fit.slope;
    out.fit_residual = fit.rms_residual;
    out.fitted = std::isfinite(fit.slope);
  }
  return out;
}

/// h_hat = t + slope / p. The pairing is p-homogeneous, so shifting t
/// scales I by exp(p tau (t_old - t_new)).
inline SupportEstimate estimate_support(const SweepResult& sweep, double t, double p) {
  if (sweep.usable == 0 && !sweep.samples.empty()) {
    throw Error(ErrorCode::NoiseFloor, "every indicator sample is below the noise floor");
  }
  require(sweep.usable >= 4 && sweep.fitted, ErrorCode::InsufficientData,
          "need at least four samples above the noise floor, have " + std::to_string(sweep.usable));
  SupportEstimate out;
  out.rho = sweep.samples.front().rho;
  out.h_hat = t + sweep.slope / p;
  out.slope_fit_residual = sweep.fit_residual;
  return out;
}

/// One mesh per growth parameter, fine enough that tau * h_max <= 0.2.
struct TauLevel {
  double tau = 0.0;
  Mesh mesh;
  ConductivityField sigma;
};

inline std::vector<TauLevel> build_levels(const Shape& omega, const Shape& inclusion, double sigma_d,
                                          const std::vector<double>& taus, std::size_t mesh_budget) {
  std::vector<TauLevel> levels;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    require(taus[i] > 0.0, ErrorCode::InvalidArgument, "tau values must be positive");
    require(i == 0 || taus[i] > taus[i - 1], ErrorCode::InvalidArgument, "tau values must be strictly increasing");
    Mesh mesh = generate_mesh_for_edge(omega, kResolution / taus[i], mesh_budget);
    ConductivityField sigma = assign_conductivity(mesh, inclusion, sigma_d);
    levels.push_back(TauLevel{taus[i], std::move(mesh), std::move(sigma)});
  }
  return levels;
}

inline SweepResult sweep(const std::vector<TauLevel>& levels, std::shared_ptr<const WolffProfile> profile, Vec2 rho,
                         double t, double p, const SolverOptions& options = {}, unsigned workers = 1,
                         double noise_factor = kNoiseFactor) {
  std::vector<IndicatorSample> samples(levels.size());
  parallel_for(levels.size(), workers, [&](std::size_t k) {
    samples[k] = indicator(levels[k].mesh, levels[k].sigma, profile, rho, levels[k].tau, t, p, options, noise_factor);
  });
  return summarize_sweep(std::move(samples));
}

struct ReconstructionConfig {
  Shape omega;
  Shape inclusion;
  double sigma_d = 1.0;
  double p = 2.0;
  std::size_t directions = 16;
  std::vector<double> taus{4.0, 6.0, 8.0, 10.0, 12.0, 14.0};
  std::size_t mesh_budget = kDefaultMaxVertices;
  double tol = 1e-9;
  unsigned workers = 1;
  double a0 = 1.0;
  double b0 = 0.0;
  double step = 1e-3;
  double span = 40.0;
  double noise_factor = kNoiseFactor;
};

struct DirectionResult {
  Vec2 rho;
  double t = 0.0;
  SweepResult sweep;
  std::optional<SupportEstimate> estimate;
  std::string failure;
};

struct ReconstructionResult {
  std::vector<DirectionResult> directions;
  std::optional<HullResult> hull;
  bool inclusion_detected = false;
  std::string summary;
};

/// Sweeps every direction with t anchored at the domain's support value,
/// estimates the support function and intersects the half-planes.
inline ReconstructionResult reconstruct_hull(const ReconstructionConfig& config) {
  require(config.directions >= 8, ErrorCode::InvalidArgument, "need at least eight directions");
  require(!config.omega.empty(), ErrorCode::InvalidArgument, "domain shape is empty");
  auto profile = std::make_shared<const WolffProfile>(
      integrate_profile(config.p, config.a0, config.b0, config.step, config.span));
  const std::vector<TauLevel> levels =
      build_levels(config.omega, config.inclusion, config.sigma_d, config.taus, config.mesh_budget);
  SolverOptions options;
  options.tol = config.tol;

  const std::size_t nd = config.directions;
  const std::size_t nt = levels.size();
  ReconstructionResult out;
  out.directions.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    out.directions[d].rho = unit_from_angle(2.0 * kPi * static_cast<double>(d) / static_cast<double>(nd));
    out.directions[d].t = support_function(config.omega, out.directions[d].rho);
  }
  std::vector<IndicatorSample> samples(nd * nt);
  std::vector<std::string> failures(nd * nt);
  // Largest meshes first keeps the pool busy until the end.
  parallel_for(nd * nt, config.workers, [&](std::size_t task) {
    const std::size_t k = nt - 1 - task / nd;
    const std::size_t d = task % nd;
    const auto& level = levels[k];
    try {
      samples[d * nt + k] = indicator(level.mesh, level.sigma, profile, out.directions[d].rho, level.tau,
                                      out.directions[d].t, config.p, options, config.noise_factor);
    } catch (const Error& e) {
      failures[d * nt + k] = e.what();
    }
  });

  std::vector<SupportEstimate> estimates;
  std::size_t silent = 0;
  for (std::size_t d = 0; d < nd; ++d) {
    auto& dir = out.directions[d];
    for (std::size_t k = 0; k < nt; ++k) {
      if (!failures[d * nt + k].empty() && dir.failure.empty()) dir.failure = failures[d * nt + k];
    }
    if (!dir.failure.empty()) continue;
    std::vector<IndicatorSample> row(samples.begin() + static_cast<std::ptrdiff_t>(d * nt),
                                     samples.begin() + static_cast<std::ptrdiff_t>((d + 1) * nt));
    dir.sweep = summarize_sweep(std::move(row));
    if (dir.sweep.usable == 0) ++silent;
    try {
      dir.estimate = estimate_support(dir.sweep, dir.t, config.p);
      estimates.push_back(*dir.estimate);
    } catch (const Error& e) {
      dir.failure = e.what();
    }
  }

  if (silent == nd) {
    out.inclusion_detected = false;
    out.summary = "no inclusion detected: every indicator sample is below the noise floor";
    return out;
  }
  if (estimates.size() < 3) {
    throw Error(ErrorCode::NonConvergence, "only " + std::to_string(estimates.size()) + " of " +
                                               std::to_string(nd) + " directions produced a support estimate");
  }
  out.hull = halfspace_intersection(estimates);
  out.inclusion_detected = true;
  out.summary = "reconstructed convex hull with " + std::to_string(out.hull->vertices.size()) + " vertices from " +
                std::to_string(estimates.size()) + " of " + std::to_string(nd) + " directions";
  return out;
}

inline void write_sweep_csv_header(std::ostream& os) {
  os << "rho_x,rho_y,tau,t,indicator,pairing_sigma,pairing_background\n";
}

inline void write_sweep_csv_rows(std::ostream& os, const SweepResult& sweep) {
  for (const auto& s : sweep.samples) {
    os << format_double(s.rho.x) << ',' << format_double(s.rho.y) << ',' << format_double(s.tau) << ','
       << format_double(s.t) << ',' << format_double(s.value) << ',' << format_double(s.pairing_sigma) << ','
       << format_double(s.pairing_background) << '\n';
  }
}

}  // namespace penclose
