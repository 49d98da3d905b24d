#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "oracles.hpp"
#include "penclose/wolff.hpp"

using namespace penclose;

namespace {

std::shared_ptr<const WolffProfile> make(double p, double a0 = 1.0, double b0 = 0.0) {
  return std::make_shared<const WolffProfile>(integrate_profile(p, a0, b0, 1e-3, 40.0));
}

double residual_order(double p) {
  TestFunctionParams params{DirectionFrame::from_angle(0.3), 1.0, 0.0, make(p)};
  const Box window{0.0, 1.0, 0.0, 1.0};
  const double coarse = pharmonic_residual(params, 0.02, window);
  const double fine = pharmonic_residual(params, 0.01, window);
  return std::log2(coarse / fine);
}

}  // namespace

TEST(Potential, Examples) {
  EXPECT_DOUBLE_EQ(potential_v(1, 0, 2), 1.0);
  EXPECT_DOUBLE_EQ(potential_v(0, 1, 3), 1.5);
  EXPECT_DOUBLE_EQ(potential_v(1, 0, 4), 3.0);
}

TEST(Potential, QuadraticCaseIsIdentically1) {
  for (double a : {-2.0, 0.0, 0.3, 5.0}) {
    for (double b : {-1.0, 0.0, 0.7}) {
      if (a == 0.0 && b == 0.0) continue;
      EXPECT_NEAR(potential_v(a, b, 2.0), 1.0, 1e-15);
    }
  }
}

TEST(Potential, OriginIsDegenerate) {
  try {
    potential_v(0, 0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
}

TEST(Profile, QuadraticCaseIsCosine) {
  const auto prof = make(2.0);
  EXPECT_NEAR(prof->period(), 2 * kPi, 1e-6);
  for (std::size_t i = 0; i < prof->size(); i += 97) {
    const double s = prof->step() * static_cast<double>(i);
    EXPECT_NEAR(prof->a()[i], std::cos(s), 1e-6);
    EXPECT_NEAR(prof->a_prime()[i], -std::sin(s), 1e-6);
  }
}

TEST(Profile, QuadraticCaseIsSine) {
  const auto prof = make(2.0, 0.0, 1.0);
  for (std::size_t i = 0; i < prof->size(); i += 97) {
    EXPECT_NEAR(prof->a()[i], std::sin(prof->step() * static_cast<double>(i)), 1e-6);
  }
}

TEST(Profile, PeriodMatchesFineIndependentIntegration) {
  const auto prof = make(4.0);
  const double reference = oracle::profile_period(4.0, 1.0, 0.0, 1e-5);
  EXPECT_NEAR(prof->period() / reference, 1.0, 1e-5);
  // Observed closed form, held to the same accuracy.
  EXPECT_NEAR(prof->period(), kPi * 4.0 / 3.0, 1e-6);
}

TEST(Profile, InvariantsAcrossExponents) {
  for (double p : {1.3, 1.5, 2.0, 3.0, 4.0, 5.0}) {
    SCOPED_TRACE(p);
    const auto prof = make(p);
    EXPECT_GT(prof->period(), 0.0);
    EXPECT_TRUE(std::isfinite(prof->period()));
    EXPECT_NEAR(detect_period(*prof), prof->period(), 1e-12);
    EXPECT_GT(prof->orbit_min(), 0.0);
    EXPECT_LT(prof->orbit_max(), 1e6);
    EXPECT_LT(prof->closure_error(), 1e-6);
    EXPECT_LT(std::abs(prof->mean_over_period()), 1e-6);
    EXPECT_LT(prof->max_ode_residual(), 1e-6);
    for (std::size_t i = 0; i < prof->size(); ++i) {
      const double r2 = prof->a()[i] * prof->a()[i] + prof->a_prime()[i] * prof->a_prime()[i];
      ASSERT_GE(r2, prof->orbit_min());
      ASSERT_LE(r2, prof->orbit_max());
    }
  }
}

TEST(Profile, MeanZeroByTrapezoid) {
  const auto prof = make(3.0);
  const std::size_t m = static_cast<std::size_t>(prof->period() / prof->step());
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += 0.5 * prof->step() * (prof->a()[i] + prof->a()[i + 1]);
  const double tail = prof->period() - prof->step() * static_cast<double>(m);
  sum += tail * prof->a()[m];
  EXPECT_LT(std::abs(sum), 1e-5);
}

TEST(Profile, RejectsBadArguments) {
  EXPECT_THROW(integrate_profile(2.0, 0.0, 0.0, 1e-3, 20.0), Error);
  EXPECT_THROW(integrate_profile(1.0, 1.0, 0.0, 1e-3, 20.0), Error);
  EXPECT_THROW(integrate_profile(2.0, 1.0, 0.0, -1e-3, 20.0), Error);
}

TEST(Profile, ShortSpanDoesNotConverge) {
  try {
    integrate_profile(2.0, 1.0, 0.0, 1e-3, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConvergence);
  }
}

TEST(Profile, CsvExport) {
  const auto prof = make(3.0);
  std::ostringstream os;
  write_profile_csv(os, *prof);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# p=3 period=", 0), 0u);
  std::getline(is, line);
  EXPECT_EQ(line, "s,a,a_prime");
  double prev = -1.0;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    const double s = std::stod(line.substr(0, line.find(',')));
    if (rows > 0) ASSERT_NEAR(s - prev, 1e-3, 1e-12);
    prev = s;
    ++rows;
  }
  EXPECT_EQ(rows, prof->size());
}

TEST(Frame, Orthonormal) {
  for (double angle : {0.0, 0.7, 2.0, -3.0}) {
    const auto f = DirectionFrame::from_angle(angle);
    EXPECT_NEAR(norm(f.rho), 1.0, 1e-12);
    EXPECT_NEAR(norm(f.rho_perp), 1.0, 1e-12);
    EXPECT_NEAR(dot(f.rho, f.rho_perp), 0.0, 1e-12);
  }
}

TEST(TestFunction, ValueAndGradientAtOrigin) {
  const auto prof = make(3.0, 0.4, -0.8);
  const double tau = 2.5;
  const auto frame = DirectionFrame::from_angle(1.1);
  const WolffValue w = eval_wolff({frame, tau, 0.0, prof}, {0.0, 0.0});
  EXPECT_NEAR(w.value, 0.4, 1e-14);
  const Vec2 expected = tau * (0.4 * frame.rho + (-0.8) * frame.rho_perp);
  EXPECT_NEAR(w.gradient.x, expected.x, 1e-12);
  EXPECT_NEAR(w.gradient.y, expected.y, 1e-12);
}

TEST(TestFunction, QuadraticCaseIsHarmonicExponential) {
  TestFunctionParams params{DirectionFrame::from_angle(0.0), 3.0, 0.2, make(2.0)};
  for (Vec2 x : {Vec2{0.1, 0.4}, Vec2{-0.3, 0.9}, Vec2{0.5, -2.0}}) {
    const auto w = eval_wolff(params, x);
    EXPECT_NEAR(w.value, std::exp(3.0 * (x.x - 0.2)) * std::cos(3.0 * x.y), 1e-9);
  }
}

TEST(TestFunction, GradientMatchesFiniteDifferences) {
  TestFunctionParams params{DirectionFrame::from_angle(0.4), 2.0, 0.0, make(3.0)};
  const double h = 1e-6;
  for (Vec2 x : {Vec2{0.1, 0.2}, Vec2{-0.4, 0.7}}) {
    const auto w = eval_wolff(params, x);
    const double gx = (eval_wolff(params, x + Vec2{h, 0}).value - eval_wolff(params, x - Vec2{h, 0}).value) / (2 * h);
    const double gy = (eval_wolff(params, x + Vec2{0, h}).value - eval_wolff(params, x - Vec2{0, h}).value) / (2 * h);
    EXPECT_NEAR(w.gradient.x, gx, 1e-7);
    EXPECT_NEAR(w.gradient.y, gy, 1e-7);
  }
}

TEST(TestFunction, NormalizedGradientStaysInOrbitBand) {
  const auto prof = make(1.5);
  TestFunctionParams params{DirectionFrame::from_angle(0.9), 6.0, 0.0, prof};
  for (int i = -20; i <= 20; ++i) {
    for (int j = -20; j <= 20; ++j) {
      const Vec2 x{0.05 * i, 0.05 * j};
      const auto w = eval_wolff(params, x);
      const double scale = params.tau * std::exp(params.tau * dot(x, params.frame.rho));
      const double q = norm2(w.gradient) / (scale * scale);
      ASSERT_GT(q, prof->orbit_min() * (1 - 1e-6));
      ASSERT_LT(q, prof->orbit_max() * (1 + 1e-6));
    }
  }
}

TEST(TestFunction, PeriodicExtension) {
  const auto prof = make(3.0);
  const double lam = prof->period();
  for (double s : {0.3, 1.7}) {
    EXPECT_NEAR(prof->state(s + 3 * lam).a, prof->state(s).a, 1e-9);
    EXPECT_NEAR(prof->state(s - 2 * lam).a_prime, prof->state(s).a_prime, 1e-9);
  }
}

TEST(TestFunction, OverflowGuard) {
  TestFunctionParams params{DirectionFrame::from_angle(0.0), 1000.0, 0.0, make(2.0)};
  try {
    eval_wolff(params, {1.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Overflow);
  }
}

TEST(Residual, HarmonicExponentialSecondOrder) {
  const Box window{0.0, 1.0, 0.0, 1.0};
  auto u = [](Vec2 x) { return std::exp(x.x) * std::cos(x.y); };
  const double coarse = pharmonic_residual_of(u, 2.0, 0.05, window);
  const double fine = pharmonic_residual_of(u, 2.0, 0.025, window);
  EXPECT_GE(std::log2(coarse / fine), 1.9);
}

TEST(Residual, ConstantFunctionIsExactlyZero) {
  for (double p : {1.5, 2.0, 3.0}) {
    EXPECT_EQ(pharmonic_residual_of([](Vec2) { return 4.2; }, p, 0.1, Box{0, 1, 0, 1}), 0.0);
  }
}

TEST(Residual, WolffFunctionsConvergeAtSecondOrder) {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    SCOPED_TRACE(p);
    EXPECT_GE(residual_order(p), 1.9);
  }
}

TEST(Residual, CubicFactorUnderHalving) {
  const double ratio = std::exp2(residual_order(3.0));
  EXPECT_NEAR(ratio, 4.0, 0.4);
}

TEST(Residual, ResolutionGuard) {
  TestFunctionParams params{DirectionFrame::from_angle(0.0), 5.0, 0.0, make(3.0)};
  try {
    pharmonic_residual(params, 0.05, Box{0, 1, 0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Resolution);
  }
}
