// Reference computations used only by the tests. They deliberately avoid
// the library's own numerics so agreement is evidence, not tautology.

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <vector>

#include "penclose/core.hpp"
#include "penclose/mesh.hpp"

namespace oracle {

using penclose::Vec2;

/// Period of the profile ODE from a plain RK4 run: time at which the
/// unwrapped phase angle of (a, a') first decreases by 2 pi.
inline double profile_period(double p, double a0, double b0, double step) {
  auto rhs = [p](double a, double b, double& da, double& db) {
    const double v = ((2 * p - 3) * b * b + (p - 1) * a * a) / ((p - 1) * b * b + a * a);
    da = b;
    db = -v * a;
  };
  double a = a0, b = b0, s = 0.0;
  double angle = std::atan2(b, a);
  const double start = angle;
  for (;;) {
    double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
    rhs(a, b, k1a, k1b);
    rhs(a + 0.5 * step * k1a, b + 0.5 * step * k1b, k2a, k2b);
    rhs(a + 0.5 * step * k2a, b + 0.5 * step * k2b, k3a, k3b);
    rhs(a + step * k3a, b + step * k3b, k4a, k4b);
    const double na = a + step / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
    const double nb = b + step / 6 * (k1b + 2 * k2b + 2 * k3b + k4b);
    double d = std::atan2(nb, na) - std::atan2(b, a);
    while (d > M_PI) d -= 2 * M_PI;
    while (d < -M_PI) d += 2 * M_PI;
    const double next = angle + d;
    if (start - next >= 2 * M_PI) {
      const double frac = (start - 2 * M_PI - angle) / (next - angle);
      return s + frac * step;
    }
    a = na;
    b = nb;
    angle = next;
    s += step;
  }
}

inline double point_to_polygon_boundary(Vec2 x, const std::vector<Vec2>& poly) {
  double best = INFINITY;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const Vec2 ab = b - a;
    double t = penclose::dot(x - a, ab) / penclose::dot(ab, ab);
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, penclose::norm(x - (a + t * ab)));
  }
  return best;
}

inline bool inside_convex(Vec2 x, const std::vector<Vec2>& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (penclose::cross(poly[(i + 1) % poly.size()] - poly[i], x - poly[i]) < 0) return false;
  }
  return true;
}

/// Hausdorff distance of two convex regions from dense boundary samples.
inline double sampled_hausdorff(const std::vector<Vec2>& A, const std::vector<Vec2>& B, int per_edge) {
  auto one_way = [per_edge](const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
    double worst = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
      const Vec2 a = from[i], b = from[(i + 1) % from.size()];
      for (int k = 0; k <= per_edge; ++k) {
        const Vec2 x = a + (static_cast<double>(k) / per_edge) * (b - a);
        const double d = inside_convex(x, to) ? 0.0 : point_to_polygon_boundary(x, to);
        worst = std::max(worst, d);
      }
    }
    return worst;
  };
  return std::max(one_way(A, B), one_way(B, A));
}

/// P1 solution of div(sigma grad u) = 0 by one sparse LU solve, assembled
/// from vertex coordinates with the cotangent formula.
inline std::vector<double> linear_dirichlet_solve(const penclose::Mesh& mesh, const std::vector<double>& sigma,
                                                  const std::vector<double>& boundary_values) {
  const std::size_t n = mesh.num_vertices();
  std::vector<double> u(n, 0.0);
  std::vector<int> dof(n, -1);
  std::vector<bool> fixed(n, false);
  for (std::size_t k = 0; k < mesh.boundary_nodes().size(); ++k) {
    fixed[mesh.boundary_nodes()[k]] = true;
    u[mesh.boundary_nodes()[k]] = boundary_values[k];
  }
  int m = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!fixed[v]) dof[v] = m++;
  }
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    for (int e = 0; e < 3; ++e) {
      // Edge (i, j) opposite vertex k gets weight cot(angle at k) / 2.
      const int i = tri[(e + 1) % 3], j = tri[(e + 2) % 3], k = tri[e];
      const Vec2 a = mesh.vertices()[i] - mesh.vertices()[k];
      const Vec2 b = mesh.vertices()[j] - mesh.vertices()[k];
      const double w = 0.5 * sigma[t] * penclose::dot(a, b) / std::abs(penclose::cross(a, b));
      auto add = [&](int r, int c, double val) {
        if (fixed[r]) return;
        if (fixed[c]) rhs[dof[r]] -= val * u[c];
        else trip.emplace_back(dof[r], dof[c], val);
      };
      add(i, i, w);
      add(j, j, w);
      add(i, j, -w);
      add(j, i, -w);
    }
  }
  Eigen::SparseMatrix<double> K(m, m);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
  const Eigen::VectorXd x = lu.solve(rhs);
  for (std::size_t v = 0; v < n; ++v) {
    if (!fixed[v]) u[v] = x[dof[v]];
  }
  return u;
}

}  // namespace oracle
