#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

#include "oracles.hpp"
#include "penclose/solver.hpp"
#include "penclose/wolff.hpp"

using namespace penclose;

namespace {

const Shape kUnitSquare = Shape::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});

std::vector<double> trace_of(const Mesh& m, const std::function<double(Vec2)>& f) {
  std::vector<double> out;
  for (int b : m.boundary_nodes()) out.push_back(f(m.vertices()[b]));
  return out;
}

TestFunctionParams wolff_params(double p, double tau, double angle = 0.0) {
  const Vec2 rho = unit_from_angle(angle);
  return {DirectionFrame::from_rho(rho), tau, support_function(kUnitSquare, rho),
          std::make_shared<const WolffProfile>(integrate_profile(p, 1.0, 0.0, 1e-3, 40.0))};
}

double gradient_error(const Mesh& m, const DiscreteField& u, const TestFunctionParams& params, double p) {
  const auto g = p1_gradient(m, u);
  double sum = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    sum += m.area(t) * std::pow(norm(g[t] - eval_wolff(params, m.centroid(t)).gradient), p);
  }
  return std::pow(sum, 1.0 / p);
}

}  // namespace

TEST(Energy, Examples) {
  const Mesh m = generate_mesh(kUnitSquare, 0.1);
  const auto sigma = ConductivityField::constant(m, 1.0);
  DiscreteField x1, c, twice;
  for (const Vec2& v : m.vertices()) {
    x1.values.push_back(v.x);
    c.values.push_back(3.0);
    twice.values.push_back(2 * std::sin(v.x + 2 * v.y));
  }
  EXPECT_NEAR(dirichlet_energy(m, sigma, x1, 2.0, 0.0), 1.0, 1e-12);
  EXPECT_EQ(dirichlet_energy(m, sigma, c, 2.5, 0.0), 0.0);
  DiscreteField half = twice;
  for (double& v : half.values) v *= 0.5;
  for (double p : {1.5, 3.0}) {
    EXPECT_NEAR(dirichlet_energy(m, sigma, twice, p, 0.0) / dirichlet_energy(m, sigma, half, p, 0.0), std::pow(2, p),
                1e-12);
  }
  EXPECT_THROW(dirichlet_energy(m, sigma, x1, 2.0, -1.0), Error);
}

TEST(Forward, QuadraticReproducesAffine) {
  const Mesh m = generate_mesh(kUnitSquare, 1.0 / 16);
  const auto sol = solve_forward(m, ConductivityField::constant(m, 1.0),
                                 trace_of(m, [](Vec2 x) { return x.x; }), 2.0, 1e-9);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) ASSERT_NEAR(sol.field.values[v], m.vertices()[v].x, 1e-10);
  EXPECT_LE(sol.report.optimality_residual, 1e-9);
}

TEST(Forward, AffineReproducedForEveryExponent) {
  const Mesh m = generate_mesh(kUnitSquare, 1.0 / 12);
  for (double p : {1.3, 2.0, 4.0}) {
    const auto sol = solve_forward(m, ConductivityField::constant(m, 1.0),
                                   trace_of(m, [](Vec2 x) { return 0.3 * x.x - 1.2 * x.y + 0.5; }), p, 1e-9);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      ASSERT_NEAR(sol.field.values[v], 0.3 * m.vertices()[v].x - 1.2 * m.vertices()[v].y + 0.5, 1e-8);
    }
  }
}

TEST(Forward, ConstantDataGivesConstantField) {
  const Mesh m = generate_mesh(Shape::disk({0, 0}, 0.6), 0.1);
  for (double p : {1.5, 3.0}) {
    const auto sol = solve_forward(m, ConductivityField::constant(m, 1.0), trace_of(m, [](Vec2) { return 2.5; }), p, 1e-9);
    for (double v : sol.field.values) ASSERT_NEAR(v, 2.5, 1e-12);
    EXPECT_NEAR(sol.report.energy, 0.0, 1e-20);
  }
}

TEST(Forward, QuadraticMatchesDirectLinearSolve) {
  const Mesh m = generate_mesh(Shape::disk({0.1, 0}, 0.6), 0.05);
  const auto sigma = assign_conductivity(m, Shape::disk({0.2, 0.1}, 0.25), 2.0);
  const auto params = wolff_params(2.0, 3.0, 0.7);
  const auto f = trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; });
  const auto sol = solve_forward(m, sigma, f, 2.0, 1e-9);
  const auto direct = oracle::linear_dirichlet_solve(m, sigma.values, f);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) ASSERT_NEAR(sol.field.values[v], direct[v], 1e-9);
  EXPECT_LE(sol.report.iterations, 2);
}

TEST(Forward, WolffDataConvergesUnderRefinement) {
  const double p = 3.0;
  const auto params = wolff_params(p, 4.0);
  std::vector<double> errors;
  for (double h : {1.0 / 32, 1.0 / 64}) {
    const Mesh m = generate_mesh(kUnitSquare, h);
    ASSERT_LE(params.tau * m.h_max(), kResolution);
    const auto sol = solve_forward(m, ConductivityField::constant(m, 1.0),
                                   trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; }), p, 1e-9);
    errors.push_back(gradient_error(m, sol.field, params, p));
  }
  EXPECT_GE(errors[0] / errors[1], 1.8);
}

TEST(Forward, EnergyDescentAndMaximumPrinciple) {
  const Mesh m = generate_mesh(kUnitSquare, 1.0 / 24);
  const auto sigma = assign_conductivity(m, Shape::disk({0.4, 0.6}, 0.2), 3.0);
  for (double p : {1.3, 3.0, 5.0}) {
    SCOPED_TRACE(p);
    const auto params = wolff_params(p, 3.0, 2.2);
    const auto f = trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; });
    const auto sol = solve_forward(m, sigma, f, p, 1e-9);
    const auto& hist = sol.report.energy_history;
    ASSERT_GE(hist.size(), 2u);
    for (std::size_t i = 1; i < hist.size(); ++i) ASSERT_LE(hist[i], hist[i - 1] * (1 + 1e-14));
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    for (double v : sol.field.values) {
      ASSERT_GE(v, *lo - 1e-8);
      ASSERT_LE(v, *hi + 1e-8);
    }
    EXPECT_LE(sol.report.optimality_residual, 1e-9);
    EXPECT_EQ(sol.report.epsilon_final, 1e-8);
  }
}

TEST(Forward, MinimizerBeatsCompetitors) {
  const Mesh m = generate_mesh(kUnitSquare, 1.0 / 16);
  const auto sigma = ConductivityField::constant(m, 1.0);
  const auto params = wolff_params(3.0, 2.0);
  const auto f = trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; });
  const auto sol = solve_forward(m, sigma, f, 3.0, 1e-9);
  DiscreteField competitor;
  for (const Vec2& v : m.vertices()) competitor.values.push_back(eval_wolff(params, v).value);
  EXPECT_LE(sol.report.energy, dirichlet_energy(m, sigma, competitor, 3.0, 0.0));
}

TEST(Forward, RejectsBadArguments) {
  const Mesh m = generate_mesh(kUnitSquare, 0.25);
  const auto sigma = ConductivityField::constant(m, 1.0);
  const auto f = trace_of(m, [](Vec2 x) { return x.x; });
  EXPECT_THROW(solve_forward(m, sigma, f, 1.0, 1e-9), Error);
  EXPECT_THROW(solve_forward(m, sigma, f, 2.0, 0.0), Error);
}

TEST(Forward, IterationCapIsNonConvergence) {
  const Mesh m = generate_mesh(kUnitSquare, 1.0 / 16);
  SolverOptions options;
  options.max_iterations = 1;
  const auto params = wolff_params(4.0, 3.0);
  try {
    solve_forward(m, ConductivityField::constant(m, 1.0),
                  trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; }), 4.0, options);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConvergence);
  }
}

TEST(Pairing, Examples) {
  const Mesh m = generate_mesh(kUnitSquare, 1.0 / 8);
  const auto one = ConductivityField::constant(m, 1.0);
  const auto f = trace_of(m, [](Vec2 x) { return x.x; });
  EXPECT_NEAR(dn_pairing(m, one, f, 2.0, 1e-9), 1.0, 1e-12);

  const auto params = wolff_params(3.0, 2.0);
  const auto g = trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; });
  const double base = dn_pairing(m, one, g, 3.0, 1e-9);
  EXPECT_NEAR(dn_pairing(m, ConductivityField::constant(m, 2.5), g, 3.0, 1e-9) / base, 2.5, 1e-8);
}

TEST(Pairing, Homogeneity) {
  const Mesh m = generate_mesh(Shape::disk({0, 0}, 0.6), 0.05);
  const auto sigma = assign_conductivity(m, Shape::disk({0.2, 0.1}, 0.3), 1.0);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto params = wolff_params(p, 3.0, 0.5);
    const auto f = trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; });
    const double base = dn_pairing(m, sigma, f, p, 1e-9);
    for (double k : {0.5, 2.0, 10.0}) {
      std::vector<double> kf = f;
      for (double& v : kf) v *= k;
      EXPECT_NEAR(dn_pairing(m, sigma, kf, p, 1e-9) / (std::pow(k, p) * base), 1.0, 1e-6) << p << " " << k;
    }
  }
}

TEST(Pairing, ComparisonMatchesSeparateSolves) {
  const Mesh m = generate_mesh(Shape::disk({0, 0}, 0.6), 0.05);
  const auto one = ConductivityField::constant(m, 1.0);
  const auto sigma = assign_conductivity(m, Shape::disk({0.2, 0.1}, 0.3), 1.0);
  for (double p : {1.5, 3.0}) {
    const auto params = wolff_params(p, 3.0, 0.0);
    const auto f = trace_of(m, [&](Vec2 x) { return eval_wolff(params, x).value; });
    const auto cmp = compare_pairings(m, one, sigma, f, p);
    const double separate = dn_pairing(m, sigma, f, p) - dn_pairing(m, one, f, p);
    EXPECT_NEAR(cmp.difference, separate, 1e-9 * dn_pairing(m, one, f, p));
    EXPECT_GT(cmp.difference, 0.0);
    EXPECT_EQ(cmp.pairing1, cmp.pairing0 + cmp.difference);
    EXPECT_GE(cmp.error_estimate, 0.0);
  }
}

TEST(Pairing, SolutionCsv) {
  const Mesh m = generate_mesh(kUnitSquare, 0.5);
  DiscreteField u{std::vector<double>(m.num_vertices(), 0.25)};
  std::ostringstream os;
  write_solution_csv(os, m, u);
  EXPECT_EQ(os.str().rfind("x,y,u\n0,0,0.25\n", 0), 0u);
}
