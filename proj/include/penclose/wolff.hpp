// Periodic-exponential p-harmonic test solutions.
//
// The profile a(s) solves a'' + V(a, a') a = 0 and is periodic; the test
// function u0(x) = exp(tau (x.rho - t)) a(tau x.rho_perp) is p-harmonic in
// the plane.

#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "penclose/core.hpp"
#include "penclose/io.hpp"

namespace penclose {

/// V(a, a') = ((2p-3) a'^2 + (p-1) a^2) / ((p-1) a'^2 + a^2).
inline double potential_v(double a, double a_prime, double p) {
  require(a != 0.0 || a_prime != 0.0, ErrorCode::DegenerateInput,
          "potential V is undefined at a = a' = 0");
  require(p > 1.0 && std::isfinite(p), ErrorCode::InvalidArgument, "exponent p must satisfy 1 < p < inf");
  const double ap2 = a_prime * a_prime;
  const double a2 = a * a;
  return ((2.0 * p - 3.0) * ap2 + (p - 1.0) * a2) / ((p - 1.0) * ap2 + a2);
}

struct ProfileState {
  double a = 0.0;
  double a_prime = 0.0;
};

class WolffProfile;
double detect_period(const WolffProfile& profile);
WolffProfile integrate_profile(double p, double a0, double b0, double step, double span);

/// Uniformly sampled orbit (a, a') of the profile ODE. Immutable once built.
class WolffProfile {
 public:
  double p() const { return p_; }
  double a0() const { return a_.front(); }
  double b0() const { return a_prime_.front(); }
  double step() const { return step_; }
  double period() const { return period_; }
  double span() const { return step_ * static_cast<double>(a_.size() - 1); }
  std::size_t size() const { return a_.size(); }
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& a_prime() const { return a_prime_; }

  /// Cubic Hermite interpolation on [0, span]; a' is interpolated with the
  /// ODE's own a'' so both components are fourth-order accurate.
  ProfileState raw_state(double s) const {
    const std::size_t n = a_.size() - 1;
    double x = s / step_;
    std::size_t i = x <= 0.0 ? 0 : static_cast<std::size_t>(x);
    if (i >= n) i = n - 1;
    const double th = x - static_cast<double>(i);
    const double th2 = th * th;
    const double th3 = th2 * th;
    const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    const double h10 = th3 - 2.0 * th2 + th;
    const double h01 = -2.0 * th3 + 3.0 * th2;
    const double h11 = th3 - th2;
    const double app0 = -potential_v(a_[i], a_prime_[i], p_) * a_[i];
    const double app1 = -potential_v(a_[i + 1], a_prime_[i + 1], p_) * a_[i + 1];
    ProfileState out;
    out.a = h00 * a_[i] + h10 * step_ * a_prime_[i] + h01 * a_[i + 1] + h11 * step_ * a_prime_[i + 1];
    out.a_prime = h00 * a_prime_[i] + h10 * step_ * app0 + h01 * a_prime_[i + 1] + h11 * step_ * app1;
    return out;
  }

  /// Evaluation on the whole real line through periodic extension.
  ProfileState state(double s) const {
    double r = std::fmod(s, period_);
    if (r < 0.0) r += period_;
    return raw_state(r);
  }

  /// Empirical orbit bounds c, C: min and max of a^2 + a'^2 over all samples.
  double orbit_min() const { return orbit_min_; }
  double orbit_max() const { return orbit_max_; }

  /// Integral of a over [0, period], integrating the Hermite interpolant exactly.
  double mean_over_period() const {
    const double h = step_;
    const std::size_t n = a_.size() - 1;
    std::size_t m = static_cast<std::size_t>(period_ / h);
    if (m > n - 1) m = n - 1;
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      sum += 0.5 * h * (a_[j] + a_[j + 1]) + h * h * (a_prime_[j] - a_prime_[j + 1]) / 12.0;
    }
    const double th = (period_ - static_cast<double>(m) * h) / h;
    const double th2 = th * th, th3 = th2 * th, th4 = th3 * th;
    const double i00 = 0.5 * th4 - th3 + th;
    const double i10 = 0.25 * th4 - 2.0 * th3 / 3.0 + 0.5 * th2;
    const double i01 = -0.5 * th4 + th3;
    const double i11 = 0.25 * th4 - th3 / 3.0;
    sum += h * (a_[m] * i00 + h * a_prime_[m] * i10 + a_[m + 1] * i01 + h * a_prime_[m + 1] * i11);
    return sum;
  }

  /// Distance in the phase plane between the orbit at s = period and s = 0.
  double closure_error() const {
    const ProfileState end = raw_state(period_);
    return std::hypot(end.a - a_.front(), end.a_prime - a_prime_.front());
  }

  /// max |a'' + V(a, a') a| over interior samples, a'' from a fourth-order
  /// central difference of the sampled a.
  double max_ode_residual() const {
    const double h2 = step_ * step_;
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < a_.size(); ++i) {
      const double app = (-a_[i + 2] + 16.0 * a_[i + 1] - 30.0 * a_[i] + 16.0 * a_[i - 1] - a_[i - 2]) /
                         (12.0 * h2);
      worst = std::max(worst, std::abs(app + potential_v(a_[i], a_prime_[i], p_) * a_[i]));
    }
    return worst;
  }

 private:
  friend WolffProfile integrate_profile(double, double, double, double, double);

  WolffProfile(double p, double step, std::vector<double> a, std::vector<double> a_prime)
      : p_(p), step_(step), a_(std::move(a)), a_prime_(std::move(a_prime)) {}

  double p_;
  double step_;
  std::vector<double> a_;
  std::vector<double> a_prime_;
  double period_ = 0.0;
  double orbit_min_ = 0.0;
  double orbit_max_ = 0.0;
};

namespace detail {

inline double wrap_angle(double d) {
  while (d > kPi) d -= 2.0 * kPi;
  while (d <= -kPi) d += 2.0 * kPi;
  return d;
}

// Angular velocity of the orbit around the origin; strictly negative since
// V a^2 + a'^2 = (p-1)(a^2+a'^2)^2 / ((p-1)a'^2 + a^2).
inline double angular_rate(const ProfileState& st, double p) {
  const double r2 = st.a * st.a + st.a_prime * st.a_prime;
  const double app = -potential_v(st.a, st.a_prime, p) * st.a;
  return (st.a * app - st.a_prime * st.a_prime) / r2;
}

}  // namespace detail

/// Smallest s > 0 at which the orbit has wound once around the origin.
/// The crossing is bracketed from the unwrapped sample angles, located by
/// linear interpolation and polished with Newton steps on the interpolant.
inline double detect_period(const WolffProfile& profile) {
  const auto& a = profile.a();
  const auto& b = profile.a_prime();
  const double h = profile.step();
  const double target = 2.0 * kPi;
  double winding = 0.0;
  double prev_angle = std::atan2(b[0], a[0]);
  for (std::size_t i = 1; i < a.size(); ++i) {
    const double angle = std::atan2(b[i], a[i]);
    const double next = winding + detail::wrap_angle(angle - prev_angle);
    if (std::abs(next) >= target) {
      const double sign = next < 0.0 ? -1.0 : 1.0;
      const double lo = h * static_cast<double>(i - 1);
      const double hi = h * static_cast<double>(i);
      double s = lo + (sign * target - winding) / (next - winding) * h;
      const double base_winding = winding;
      const double base_angle = prev_angle;
      for (int it = 0; it < 8; ++it) {
        const ProfileState st = profile.raw_state(s);
        const double w = base_winding + detail::wrap_angle(std::atan2(st.a_prime, st.a) - base_angle);
        const double rate = detail::angular_rate(st, profile.p());
        const double ds = (w - sign * target) / rate;
        s = std::clamp(s - ds, lo, hi);
        if (std::abs(ds) < 1e-15 * (1.0 + s)) break;
      }
      require(s > 0.0 && std::isfinite(s), ErrorCode::NoReturn, "period refinement failed");
      return s;
    }
    winding = next;
    prev_angle = angle;
  }
  throw Error(ErrorCode::NoReturn, "orbit does not complete a revolution within span " +
                                       std::to_string(profile.span()));
}

/// Integrates the profile ODE from (a0, b0) with the classical fixed-step
/// fourth-order Runge-Kutta scheme and detects the period.
inline WolffProfile integrate_profile(double p, double a0, double b0, double step, double span) {
  require(p > 1.0 && std::isfinite(p), ErrorCode::InvalidArgument, "exponent p must satisfy 1 < p < inf");
  require(a0 != 0.0 || b0 != 0.0, ErrorCode::DegenerateInput, "initial conditions (a0, b0) must not both vanish");
  require(step > 0.0 && std::isfinite(step), ErrorCode::InvalidArgument, "step must be positive");
  require(span > step && std::isfinite(span), ErrorCode::InvalidArgument, "span must exceed the step");

  const auto n = static_cast<std::size_t>(std::ceil(span / step - 1e-9));
  std::vector<double> a(n + 1), b(n + 1);
  a[0] = a0;
  b[0] = b0;
  const double r2_start = a0 * a0 + b0 * b0;
  const double collapse = 1e-8 * r2_start;

  auto rhs = [p](double x, double y) { return -potential_v(x, y, p) * x; };
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i], y = b[i];
    const double k1x = y, k1y = rhs(x, y);
    const double x2 = x + 0.5 * step * k1x, y2 = y + 0.5 * step * k1y;
    require(x2 != 0.0 || y2 != 0.0, ErrorCode::OrbitCollapse, "orbit hit the origin; reduce the step");
    const double k2x = y2, k2y = rhs(x2, y2);
    const double x3 = x + 0.5 * step * k2x, y3 = y + 0.5 * step * k2y;
    require(x3 != 0.0 || y3 != 0.0, ErrorCode::OrbitCollapse, "orbit hit the origin; reduce the step");
    const double k3x = y3, k3y = rhs(x3, y3);
    const double x4 = x + step * k3x, y4 = y + step * k3y;
    require(x4 != 0.0 || y4 != 0.0, ErrorCode::OrbitCollapse, "orbit hit the origin; reduce the step");
    const double k4x = y4, k4y = rhs(x4, y4);
    a[i + 1] = x + step / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    b[i + 1] = y + step / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    const double r2 = a[i + 1] * a[i + 1] + b[i + 1] * b[i + 1];
    if (!(r2 > collapse) || !std::isfinite(r2)) {
      throw Error(ErrorCode::OrbitCollapse, "orbit fell below the lower bound at s = " +
                                                std::to_string(step * static_cast<double>(i + 1)) +
                                                "; reduce the step");
    }
  }

  WolffProfile profile(p, step, std::move(a), std::move(b));
  try {
    profile.period_ = detect_period(profile);
  } catch (const Error& e) {
    throw Error(ErrorCode::NonConvergence, std::string("period detection failed: ") + e.what());
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < profile.a_.size(); ++i) {
    const double r2 = profile.a_[i] * profile.a_[i] + profile.a_prime_[i] * profile.a_prime_[i];
    lo = std::min(lo, r2);
    hi = std::max(hi, r2);
  }
  profile.orbit_min_ = lo;
  profile.orbit_max_ = hi;
  return profile;
}

inline void write_profile_csv(std::ostream& os, const WolffProfile& profile) {
  os << "# p=" << format_double(profile.p()) << " period=" << format_double(profile.period()) << '\n';
  os << "s,a,a_prime\n";
  for (std::size_t i = 0; i < profile.size(); ++i) {
    os << format_double(profile.step() * static_cast<double>(i)) << ',' << format_double(profile.a()[i]) << ','
       << format_double(profile.a_prime()[i]) << '\n';
  }
}

struct DirectionFrame {
  Vec2 rho{1.0, 0.0};
  Vec2 rho_perp{0.0, 1.0};

  static DirectionFrame from_angle(double angle) {
    const Vec2 r = unit_from_angle(angle);
    return {r, perp(r)};
  }

  /// rho is normalized; rho_perp is rho rotated a quarter turn counterclockwise.
  static DirectionFrame from_rho(Vec2 rho) {
    const double len = norm(rho);
    require(len > 0.0 && std::isfinite(len), ErrorCode::InvalidArgument, "direction must be nonzero");
    const Vec2 r = (1.0 / len) * rho;
    return {r, perp(r)};
  }
};

struct TestFunctionParams {
  DirectionFrame frame;
  double tau = 1.0;
  double t = 0.0;
  std::shared_ptr<const WolffProfile> profile;
};

struct WolffValue {
  double value = 0.0;
  Vec2 gradient;
};

inline constexpr double kMaxExponent = 700.0;

/// u0(x) = exp(tau (x.rho - t)) a(tau x.rho_perp) and its gradient
/// tau exp(tau (x.rho - t)) (rho a + rho_perp a').
inline WolffValue eval_wolff(const TestFunctionParams& params, Vec2 x) {
  require(params.tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  require(params.profile != nullptr, ErrorCode::InvalidArgument, "test function has no profile");
  const double exponent = params.tau * (dot(x, params.frame.rho) - params.t);
  if (exponent > kMaxExponent) {
    throw Error(ErrorCode::Overflow, "exponent tau (x.rho - t) = " + std::to_string(exponent) + " overflows");
  }
  const double growth = std::exp(exponent);
  const ProfileState st = params.profile->state(params.tau * dot(x, params.frame.rho_perp));
  WolffValue out;
  out.value = growth * st.a;
  out.gradient = (params.tau * growth) * (st.a * params.frame.rho + st.a_prime * params.frame.rho_perp);
  return out;
}

/// max over interior grid points of a flux-form finite-difference
/// div(|grad u|^(p-2) grad u). Fluxes live at cell-edge midpoints; the
/// tangential derivative there averages the two neighbouring central
/// differences, so the stencil is second order.
template <class Function>
double pharmonic_residual_of(const Function& u, double p, double spacing, const Box& window) {
  require(spacing > 0.0, ErrorCode::InvalidArgument, "grid spacing must be positive");
  const auto nx = static_cast<std::size_t>(std::floor((window.x_max - window.x_min) / spacing + 1e-9));
  const auto ny = static_cast<std::size_t>(std::floor((window.y_max - window.y_min) / spacing + 1e-9));
  require(nx >= 2 && ny >= 2, ErrorCode::InvalidArgument, "window too small for the grid spacing");
  const double h = spacing;
  std::vector<double> grid((nx + 1) * (ny + 1));
  auto at = [&](std::size_t i, std::size_t j) -> double& { return grid[j * (nx + 1) + i]; };
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) {
      at(i, j) = u(Vec2{window.x_min + h * static_cast<double>(i), window.y_min + h * static_cast<double>(j)});
    }
  }
  auto flux = [p](double gx, double gy, bool x_component) {
    const double g2 = gx * gx + gy * gy;
    if (g2 == 0.0) return 0.0;
    const double w = std::pow(g2, 0.5 * (p - 2.0));
    return w * (x_component ? gx : gy);
  };
  // x-flux between (i, j) and (i + 1, j)
  auto flux_x = [&](std::size_t i, std::size_t j) {
    const double gx = (at(i + 1, j) - at(i, j)) / h;
    const double gy = (at(i, j + 1) - at(i, j - 1) + at(i + 1, j + 1) - at(i + 1, j - 1)) / (4.0 * h);
    return flux(gx, gy, true);
  };
  auto flux_y = [&](std::size_t i, std::size_t j) {
    const double gy = (at(i, j + 1) - at(i, j)) / h;
    const double gx = (at(i + 1, j) - at(i - 1, j) + at(i + 1, j + 1) - at(i - 1, j + 1)) / (4.0 * h);
    return flux(gx, gy, false);
  };
  double worst = 0.0;
  for (std::size_t j = 1; j < ny; ++j) {
    for (std::size_t i = 1; i < nx; ++i) {
      const double div = (flux_x(i, j) - flux_x(i - 1, j)) / h + (flux_y(i, j) - flux_y(i, j - 1)) / h;
      worst = std::max(worst, std::abs(div));
    }
  }
  return worst;
}

inline double pharmonic_residual(const TestFunctionParams& params, double spacing, const Box& window) {
  require(params.tau * spacing <= 0.2 + 1e-12, ErrorCode::Resolution,
          "tau * grid_spacing = " + std::to_string(params.tau * spacing) + " exceeds 0.2");
  return pharmonic_residual_of([&](Vec2 x) { return eval_wolff(params, x).value; }, params.profile->p(), spacing,
                               window);
}

}  // namespace penclose
