// Weighted p-Laplace Dirichlet problem by minimisation of the discrete
// p-Dirichlet energy, and the DN pairing (Lambda_sigma f, f) it induces.
//
// The energy sum_T |T| sigma_T (|grad v|_T^2 + eps^2)^(p/2) is minimised over
// interior nodal values by damped Newton with Armijo backtracking, under a
// continuation schedule eps = 1e-1 ... 1e-8. Iterates are kept as a fixed
// base field plus an interior increment, and energy changes are evaluated
// per triangle from the increment, so differences of nearly equal energies
// never go through a subtraction of two large sums.

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "penclose/core.hpp"
#include "penclose/mesh.hpp"

namespace penclose {

struct SolverOptions {
  /// Max-norm of the energy gradient over interior nodes at termination.
  double tol = 1e-9;
  std::vector<double> eps_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  int max_iterations = 400;
  double armijo = 1e-4;
  /// Full nodal starting guess; boundary entries are replaced by the data.
  std::optional<std::vector<double>> initial_guess;
};

struct SolveReport {
  double energy = 0.0;
  double optimality_residual = 0.0;
  int iterations = 0;
  double epsilon_final = 0.0;
  /// Half the squared Newton decrement at the final iterate.
  double energy_error_estimate = 0.0;
  /// Regularised energy after every accepted iterate (and at each stage start).
  std::vector<double> energy_history;
};

struct ForwardSolution {
  DiscreteField field;
  SolveReport report;
};

/// sum_T |T| sigma_T (|grad v|_T^2 + eps^2)^(p/2)
inline double dirichlet_energy(const Mesh& mesh, const ConductivityField& sigma, const DiscreteField& v, double p,
                               double eps) {
  require(eps >= 0.0, ErrorCode::InvalidArgument, "eps must be nonnegative");
  require(v.values.size() == mesh.num_vertices(), ErrorCode::InvalidArgument, "field length mismatch");
  require(sigma.values.size() == mesh.num_triangles(), ErrorCode::InvalidArgument, "conductivity length mismatch");
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 g = triangle_gradient(mesh, t, v.values);
    sum += mesh.area(t) * sigma.values[t] * std::pow(norm2(g) + eps * eps, 0.5 * p);
  }
  return sum;
}

namespace detail {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Cholesky = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

/// Interior numbering: dof[v] >= 0 for interior vertices, -1 on the boundary.
struct DofMap {
  std::vector<int> dof;
  std::vector<int> vertex;

  explicit DofMap(const Mesh& mesh) : dof(mesh.num_vertices(), -1) {
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      if (!mesh.is_boundary(v)) {
        dof[v] = static_cast<int>(vertex.size());
        vertex.push_back(static_cast<int>(v));
      }
    }
  }
  std::size_t size() const { return vertex.size(); }
};

inline std::vector<double> with_boundary(const Mesh& mesh, const std::vector<double>& boundary_values,
                                         std::vector<double> full) {
  require(boundary_values.size() == mesh.boundary_nodes().size(), ErrorCode::InvalidArgument,
          "boundary data length does not match the boundary node count");
  full.resize(mesh.num_vertices(), 0.0);
  for (std::size_t k = 0; k < boundary_values.size(); ++k) {
    require(std::isfinite(boundary_values[k]), ErrorCode::InvalidArgument, "boundary data must be finite");
    full[mesh.boundary_nodes()[k]] = boundary_values[k];
  }
  return full;
}

/// sigma-weighted discrete harmonic extension of the boundary data.
inline std::vector<double> harmonic_extension(const Mesh& mesh, const ConductivityField& sigma,
                                              const std::vector<double>& boundary_values) {
  std::vector<double> full = with_boundary(mesh, boundary_values, std::vector<double>(mesh.num_vertices(), 0.0));
  const DofMap map(mesh);
  if (map.size() == 0) return full;
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(map.size()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& g = mesh.basis_gradients(t);
    const double w = mesh.area(t) * sigma.values[t];
    for (int i = 0; i < 3; ++i) {
      const int di = map.dof[tri[i]];
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const double k = w * dot(g[i], g[j]);
        const int dj = map.dof[tri[j]];
        if (dj >= 0) {
          triplets.emplace_back(di, dj, k);
        } else {
          rhs[di] -= k * full[tri[j]];
        }
      }
    }
  }
  SparseMatrix K(static_cast<Eigen::Index>(map.size()), static_cast<Eigen::Index>(map.size()));
  K.setFromTriplets(triplets.begin(), triplets.end());
  Cholesky chol(K);
  require(chol.info() == Eigen::Success, ErrorCode::NonConvergence, "stiffness matrix factorisation failed");
  const Eigen::VectorXd x = chol.solve(rhs);
  for (std::size_t i = 0; i < map.size(); ++i) full[map.vertex[i]] = x[static_cast<Eigen::Index>(i)];
  return full;
}

/// Minimises the regularised energy of base + increment over interior
/// increments. Owns all of its state.
class EnergyMinimizer {
 public:
  EnergyMinimizer(const Mesh& mesh, const ConductivityField& sigma, std::vector<double> base, double p)
      : mesh_(mesh), sigma_(sigma.values), base_(std::move(base)), p_(p), map_(mesh) {
    require(p > 1.0 && std::isfinite(p), ErrorCode::InvalidArgument, "exponent p must satisfy 1 < p < inf");
    require(sigma_.size() == mesh.num_triangles(), ErrorCode::InvalidArgument, "conductivity length mismatch");
    for (double s : sigma_) require(s > 0.0, ErrorCode::Positivity, "conductivity must be positive");
    base_grad_.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) base_grad_[t] = triangle_gradient(mesh, t, base_);
    inc_grad_.assign(mesh.num_triangles(), Vec2{});
    delta_.assign(map_.size(), 0.0);
  }

  void run(const std::vector<double>& schedule, const SolverOptions& options, SolveReport& report) {
    require(!schedule.empty(), ErrorCode::InvalidArgument, "empty regularisation schedule");
    require(options.tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
    const auto n = static_cast<Eigen::Index>(map_.size());
    report.iterations = 0;
    report.energy_history.clear();
    if (n == 0) {
      report.epsilon_final = schedule.back();
      report.energy = energy(0.0);
      return;
    }
    bool analysed = false;
    for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
      const double eps = schedule[stage];
      const bool last = stage + 1 == schedule.size();
      double current = energy(eps);
      report.energy_history.push_back(current);
      for (;;) {
        Eigen::VectorXd g = gradient(eps);
        const double residual = g.lpNorm<Eigen::Infinity>();
        report.optimality_residual = residual;
        if (!last && residual <= options.tol) break;
        if (report.iterations >= options.max_iterations) {
          throw Error(ErrorCode::NonConvergence, "no convergence after " + std::to_string(report.iterations) +
                                                     " iterations; last residual " + std::to_string(residual));
        }
        const SparseMatrix H = hessian(eps);
        if (!analysed) {
          chol_.analyzePattern(H);
          analysed = true;
        }
        chol_.factorize(H);
        Eigen::VectorXd d;
        if (chol_.info() == Eigen::Success) d = -chol_.solve(g);
        double slope = d.size() == n ? g.dot(d) : 0.0;
        if (!(slope < 0.0) || !std::isfinite(slope)) {
          d = -g;
          slope = -g.squaredNorm();
        }
        const double decrement = -slope;

        if (last && residual <= options.tol) {
          report.energy_error_estimate = 0.5 * decrement;
          const double change = energy_change(d, 1.0, eps);
          if (change <= 0.0) {
            apply(d, 1.0);
            current += change;
            report.energy_history.push_back(current);
            report.optimality_residual = gradient(eps).lpNorm<Eigen::Infinity>();
          }
          break;
        }

        double alpha = 1.0;
        double change = energy_change(d, alpha, eps);
        while (!(change <= options.armijo * alpha * slope)) {
          alpha *= 0.5;
          if (alpha < 1e-12) break;
          change = energy_change(d, alpha, eps);
        }
        if (alpha < 1e-12) {
          // The decrease is below what the energy can resolve.
          if (decrement <= 1e-13 * std::max(1.0, std::abs(current))) {
            if (last) report.energy_error_estimate = 0.5 * decrement;
            break;
          }
          throw Error(ErrorCode::LineSearchFailure,
                      "backtracking failed with Newton decrement " + std::to_string(decrement));
        }
        apply(d, alpha);
        current += change;
        ++report.iterations;
        report.energy_history.push_back(current);
      }
    }
    report.epsilon_final = schedule.back();
    report.energy = energy(0.0);
  }

  std::vector<double> field() const {
    std::vector<double> out = base_;
    for (std::size_t i = 0; i < map_.size(); ++i) out[map_.vertex[i]] += delta_[i];
    return out;
  }

  const std::vector<Vec2>& base_gradients() const { return base_grad_; }
  const std::vector<Vec2>& increment_gradients() const { return inc_grad_; }

  /// Regularised energy of base + increment.
  double energy(double eps) const {
    double sum = 0.0;
    const double e2 = eps * eps;
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
      const Vec2 g = base_grad_[t] + inc_grad_[t];
      sum += mesh_.area(t) * sigma_[t] * std::pow(norm2(g) + e2, 0.5 * p_);
    }
    return sum;
  }

 private:
  Vec2 direction_gradient(std::size_t t, const Eigen::VectorXd& d) const {
    const auto& tri = mesh_.triangles()[t];
    const auto& gr = mesh_.basis_gradients(t);
    Vec2 out;
    for (int i = 0; i < 3; ++i) {
      const int k = map_.dof[tri[i]];
      if (k >= 0) out += d[k] * gr[i];
    }
    return out;
  }

  Eigen::VectorXd gradient(double eps) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(map_.size()));
    const double e2 = eps * eps;
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
      const Vec2 G = base_grad_[t] + inc_grad_[t];
      const double w = norm2(G) + e2;
      if (w == 0.0) continue;
      const double coef = mesh_.area(t) * sigma_[t] * p_ * std::pow(w, 0.5 * p_ - 1.0);
      const auto& tri = mesh_.triangles()[t];
      const auto& gr = mesh_.basis_gradients(t);
      for (int i = 0; i < 3; ++i) {
        const int k = map_.dof[tri[i]];
        if (k >= 0) g[k] += coef * dot(G, gr[i]);
      }
    }
    return g;
  }

  SparseMatrix hessian(double eps) const {
    const auto n = static_cast<Eigen::Index>(map_.size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(9 * mesh_.num_triangles());
    const double e2 = eps * eps;
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
      const Vec2 G = base_grad_[t] + inc_grad_[t];
      const double w = norm2(G) + e2;
      if (w == 0.0) continue;
      const double scale = mesh_.area(t) * sigma_[t] * p_;
      const double iso = scale * std::pow(w, 0.5 * p_ - 1.0);
      const double aniso = scale * (p_ - 2.0) * std::pow(w, 0.5 * p_ - 2.0);
      const auto& tri = mesh_.triangles()[t];
      const auto& gr = mesh_.basis_gradients(t);
      double proj[3];
      for (int i = 0; i < 3; ++i) proj[i] = dot(G, gr[i]);
      for (int i = 0; i < 3; ++i) {
        const int ki = map_.dof[tri[i]];
        if (ki < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const int kj = map_.dof[tri[j]];
          if (kj < 0 || kj > ki) continue;
          triplets.emplace_back(ki, kj, iso * dot(gr[i], gr[j]) + aniso * proj[i] * proj[j]);
        }
      }
    }
    SparseMatrix H(n, n);
    H.setFromTriplets(triplets.begin(), triplets.end());
    return H;
  }

  /// E(x + alpha d) - E(x), summed per triangle without cancellation.
  double energy_change(const Eigen::VectorXd& d, double alpha, double eps) const {
    double sum = 0.0;
    const double e2 = eps * eps;
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
      const Vec2 s = alpha * direction_gradient(t, d);
      if (s.x == 0.0 && s.y == 0.0) continue;
      const Vec2 G = base_grad_[t] + inc_grad_[t];
      const double a = norm2(G) + e2;
      sum += mesh_.area(t) * sigma_[t] * pow_difference(a, dot(s, 2.0 * G + s), 0.5 * p_);
    }
    return sum;
  }

  void apply(const Eigen::VectorXd& d, double alpha) {
    for (std::size_t i = 0; i < map_.size(); ++i) delta_[i] += alpha * d[static_cast<Eigen::Index>(i)];
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) inc_grad_[t] += alpha * direction_gradient(t, d);
  }

  const Mesh& mesh_;
  std::vector<double> sigma_;
  std::vector<double> base_;
  double p_;
  DofMap map_;
  std::vector<Vec2> base_grad_;
  std::vector<Vec2> inc_grad_;
  std::vector<double> delta_;
  Cholesky chol_;
};

}  // namespace detail

/// Minimiser of the regularised energy with the given boundary trace
/// (ordered as mesh.boundary_nodes()). The default starting guess is the
/// sigma-weighted discrete harmonic extension.
inline ForwardSolution solve_forward(const Mesh& mesh, const ConductivityField& sigma,
                                     const std::vector<double>& boundary_values, double p,
                                     const SolverOptions& options = {}) {
  require(p > 1.0 && std::isfinite(p), ErrorCode::InvalidArgument, "exponent p must satisfy 1 < p < inf");
  require(options.tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
  std::vector<double> start = options.initial_guess
                                  ? detail::with_boundary(mesh, boundary_values, *options.initial_guess)
                                  : detail::harmonic_extension(mesh, sigma, boundary_values);
  detail::EnergyMinimizer minimizer(mesh, sigma, std::move(start), p);
  ForwardSolution out;
  minimizer.run(options.eps_schedule, options, out.report);
  out.field.values = minimizer.field();
  return out;
}

inline ForwardSolution solve_forward(const Mesh& mesh, const ConductivityField& sigma,
                                     const std::vector<double>& boundary_values, double p, double tol) {
  SolverOptions options;
  options.tol = tol;
  return solve_forward(mesh, sigma, boundary_values, p, options);
}

/// (Lambda_sigma f, f): the unregularised energy of the computed minimiser.
inline double dn_pairing(const Mesh& mesh, const ConductivityField& sigma, const std::vector<double>& boundary_values,
                         double p, const SolverOptions& options = {}) {
  return solve_forward(mesh, sigma, boundary_values, p, options).report.energy;
}

inline double dn_pairing(const Mesh& mesh, const ConductivityField& sigma, const std::vector<double>& boundary_values,
                         double p, double tol) {
  SolverOptions options;
  options.tol = tol;
  return dn_pairing(mesh, sigma, boundary_values, p, options);
}

/// Both pairings for one boundary datum and two conductivities.
struct PairingComparison {
  double pairing0 = 0.0;
  double pairing1 = 0.0;
  /// ((Lambda_sigma1 - Lambda_sigma0) f, f), evaluated without cancellation.
  double difference = 0.0;
  /// Bound on the error of `difference` propagated from the solver.
  double error_estimate = 0.0;
  SolveReport report0;
  SolveReport report1;
  /// Solution for sigma0 and its per-triangle gradient.
  DiscreteField u0;
  std::vector<Vec2> grad_u0;
};

/// Solves for sigma0 with the full continuation schedule, then for sigma1
/// starting from that solution at the final regularisation. The difference
/// of pairings is assembled per triangle as
///   (sigma1 - sigma0) |grad u0|^p + sigma1 (|grad u1|^p - |grad u0|^p),
/// with the second term formed from grad(u1 - u0) directly.
inline PairingComparison compare_pairings(const Mesh& mesh, const ConductivityField& sigma0,
                                          const ConductivityField& sigma1,
                                          const std::vector<double>& boundary_values, double p,
                                          const SolverOptions& options = {}) {
  require(sigma1.values.size() == mesh.num_triangles(), ErrorCode::InvalidArgument, "conductivity length mismatch");
  PairingComparison out;
  ForwardSolution first = solve_forward(mesh, sigma0, boundary_values, p, options);
  out.report0 = first.report;
  out.pairing0 = first.report.energy;
  out.u0 = std::move(first.field);

  if (sigma1.values == sigma0.values) {
    // Identical problems share the minimiser.
    out.grad_u0 = p1_gradient(mesh, out.u0);
    out.report1 = out.report0;
    out.pairing1 = out.pairing0;
    out.error_estimate = out.report0.energy_error_estimate;
    return out;
  }

  detail::EnergyMinimizer second(mesh, sigma1, out.u0.values, p);
  second.run({options.eps_schedule.back()}, options, out.report1);

  const auto& g0 = second.base_gradients();
  const auto& dg = second.increment_gradients();
  out.grad_u0 = g0;
  const double q = 0.5 * p;
  double diff = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double a = norm2(g0[t]);
    const double s1 = sigma1.values[t];
    const double s0 = sigma0.values[t];
    double term = 0.0;
    if (s1 != s0) term += (s1 - s0) * std::pow(a, q);
    if (dg[t].x != 0.0 || dg[t].y != 0.0) term += s1 * pow_difference(a, dot(dg[t], 2.0 * g0[t] + dg[t]), q);
    diff += mesh.area(t) * term;
  }
  out.difference = diff;
  out.pairing1 = out.pairing0 + diff;
  out.error_estimate = out.report0.energy_error_estimate + out.report1.energy_error_estimate;
  return out;
}

inline void write_solution_csv(std::ostream& os, const Mesh& mesh, const DiscreteField& field) {
  os << "x,y,u\n";
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    os << format_double(mesh.vertices()[v].x) << ',' << format_double(mesh.vertices()[v].y) << ','
       << format_double(field.values[v]) << '\n';
  }
}

}  // namespace penclose
