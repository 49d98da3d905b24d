// penclose: enclosure method for the weighted p-Laplace equation.
//
// Shared vocabulary: planar vectors, the error type used across the library,
// and a few numeric helpers.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace penclose {

/// Reasons an operation can fail. The CLI maps these onto exit codes.
enum class ErrorCode {
  DegenerateInput,
  OrbitCollapse,
  NonConvergence,
  NoReturn,
  Overflow,
  Resolution,
  Budget,
  Positivity,
  EmptyIntersection,
  Unbounded,
  InsufficientData,
  NoiseFloor,
  LineSearchFailure,
  InvalidArgument,
  Config,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::OrbitCollapse: return "orbit-collapse";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::NoReturn: return "no-return";
    case ErrorCode::Overflow: return "overflow";
    case ErrorCode::Resolution: return "resolution";
    case ErrorCode::Budget: return "budget";
    case ErrorCode::Positivity: return "positivity";
    case ErrorCode::EmptyIntersection: return "empty-intersection";
    case ErrorCode::Unbounded: return "unbounded-region";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::NoiseFloor: return "noise-floor";
    case ErrorCode::LineSearchFailure: return "line-search-failure";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Vec2 a) { return dot(a, a); }

/// Axis-aligned box.
struct Box {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
};

inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline constexpr double kPi = 3.14159265358979323846;

/// Spatial dimension. Fixed at 2 wherever tau^(n-p) appears.
inline constexpr int kDimension = 2;

/// b^q - a^q for a, b >= 0, accurate when b is close to a. `b_minus_a` is
/// supplied separately so callers can form it without cancellation.
inline double pow_difference(double a, double b_minus_a, double q) {
  if (a <= 0.0) return std::pow(std::max(a + b_minus_a, 0.0), q);
  const double ratio = b_minus_a / a;
  if (ratio <= -1.0) return -std::pow(a, q);
  return std::pow(a, q) * std::expm1(q * std::log1p(ratio));
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace penclose
