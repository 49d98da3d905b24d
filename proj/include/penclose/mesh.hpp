// Structured P1 triangulations of the domain, conductivity tagging and the
// piecewise-constant gradient of nodal fields.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "penclose/core.hpp"
#include "penclose/geometry.hpp"
#include "penclose/io.hpp"

namespace penclose {

inline constexpr std::size_t kDefaultMaxVertices = 250000;

/// Lower bound on admissible conductivity values.
inline constexpr double kMinConductivity = 1e-3;

/// Meshes used at growth rate tau satisfy tau * h_max <= kResolution.
inline constexpr double kResolution = 0.2;

class Mesh {
 public:
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles, std::vector<int> boundary_nodes)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_nodes_(std::move(boundary_nodes)) {
    is_boundary_.assign(vertices_.size(), false);
    for (int b : boundary_nodes_) {
      require(b >= 0 && static_cast<std::size_t>(b) < vertices_.size(), ErrorCode::InvalidArgument,
              "boundary node index out of range");
      is_boundary_[b] = true;
    }
    area_.resize(triangles_.size());
    grad_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      for (int v : tri) {
        require(v >= 0 && static_cast<std::size_t>(v) < vertices_.size(), ErrorCode::InvalidArgument,
                "triangle vertex index out of range");
      }
      const Vec2 x0 = vertices_[tri[0]], x1 = vertices_[tri[1]], x2 = vertices_[tri[2]];
      const double twice = cross(x1 - x0, x2 - x0);
      require(twice > 0.0, ErrorCode::InvalidArgument,
              "triangle " + std::to_string(t) + " is not counterclockwise with positive area");
      area_[t] = 0.5 * twice;
      // grad phi_i = perp(x_k - x_j) / (2A) for (i, j, k) cyclic
      grad_[t][0] = (1.0 / twice) * Vec2{x1.y - x2.y, x2.x - x1.x};
      grad_[t][1] = (1.0 / twice) * Vec2{x2.y - x0.y, x0.x - x2.x};
      grad_[t][2] = (1.0 / twice) * Vec2{x0.y - x1.y, x1.x - x0.x};
      h_max_ = std::max({h_max_, norm(x1 - x0), norm(x2 - x1), norm(x0 - x2)});
    }
  }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  bool is_boundary(std::size_t v) const { return is_boundary_[v]; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  /// Longest edge length.
  double h_max() const { return h_max_; }
  double area(std::size_t t) const { return area_[t]; }
  /// Gradients of the three barycentric basis functions on triangle t.
  const std::array<Vec2, 3>& basis_gradients(std::size_t t) const { return grad_[t]; }

  Vec2 centroid(std::size_t t) const {
    const auto& tri = triangles_[t];
    return (1.0 / 3.0) * (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]);
  }

  double total_area() const {
    double sum = 0.0;
    for (double a : area_) sum += a;
    return sum;
  }

 private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<int> boundary_nodes_;
  std::vector<bool> is_boundary_;
  std::vector<double> area_;
  std::vector<std::array<Vec2, 3>> grad_;
  double h_max_ = 0.0;
};

/// Nodal values of a P1 function, one per mesh vertex.
struct DiscreteField {
  std::vector<double> values;
};

namespace detail {

inline bool axis_aligned_rectangle(const ConvexPolygon& poly, Box& box) {
  if (poly.vertices.size() != 4) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 e = poly.vertices[(i + 1) % 4] - poly.vertices[i];
    if (e.x != 0.0 && e.y != 0.0) return false;
  }
  box = Box{poly.vertices[0].x, poly.vertices[0].x, poly.vertices[0].y, poly.vertices[0].y};
  for (const Vec2& v : poly.vertices) {
    box.x_min = std::min(box.x_min, v.x);
    box.x_max = std::max(box.x_max, v.x);
    box.y_min = std::min(box.y_min, v.y);
    box.y_max = std::max(box.y_max, v.y);
  }
  return true;
}

inline Mesh rectangle_mesh(const Box& box, double target_h, std::size_t max_vertices) {
  const auto nx = static_cast<std::size_t>(std::ceil((box.x_max - box.x_min) / target_h - 1e-9));
  const auto ny = static_cast<std::size_t>(std::ceil((box.y_max - box.y_min) / target_h - 1e-9));
  const std::size_t count = (nx + 1) * (ny + 1);
  if (count > max_vertices) {
    throw Error(ErrorCode::Budget, "mesh needs " + std::to_string(count) + " vertices, cap is " +
                                       std::to_string(max_vertices));
  }
  const double dx = (box.x_max - box.x_min) / static_cast<double>(nx);
  const double dy = (box.y_max - box.y_min) / static_cast<double>(ny);
  std::vector<Vec2> vertices;
  std::vector<int> boundary;
  vertices.reserve(count);
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) {
      const double x = i == nx ? box.x_max : box.x_min + dx * static_cast<double>(i);
      const double y = j == ny ? box.y_max : box.y_min + dy * static_cast<double>(j);
      if (i == 0 || j == 0 || i == nx || j == ny) boundary.push_back(static_cast<int>(vertices.size()));
      vertices.push_back({x, y});
    }
  }
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(2 * nx * ny);
  auto id = [nx](std::size_t i, std::size_t j) { return static_cast<int>(j * (nx + 1) + i); };
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

// Concentric rings, ring k carrying 6k nodes, zipped together by angle.
inline Mesh disk_mesh(const Disk& disk, std::size_t rings) {
  const double radius = disk.radius;
  std::vector<Vec2> vertices{disk.center};
  std::vector<std::size_t> ring_start{0};
  for (std::size_t k = 1; k <= rings; ++k) {
    ring_start.push_back(vertices.size());
    const std::size_t n = 6 * k;
    const double r = k == rings ? radius : radius * static_cast<double>(k) / static_cast<double>(rings);
    for (std::size_t j = 0; j < n; ++j) {
      const double angle = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
      vertices.push_back(disk.center + r * unit_from_angle(angle));
    }
  }
  std::vector<std::array<int, 3>> triangles;
  auto oriented = [&](int a, int b, int c) -> std::array<int, 3> {
    if (cross(vertices[b] - vertices[a], vertices[c] - vertices[a]) < 0.0) return {a, c, b};
    return {a, b, c};
  };
  for (std::size_t j = 0; j < 6; ++j) {
    triangles.push_back(oriented(0, static_cast<int>(1 + j), static_cast<int>(1 + (j + 1) % 6)));
  }
  for (std::size_t k = 1; k < rings; ++k) {
    const std::size_t n1 = 6 * k, n2 = 6 * (k + 1);
    const std::size_t s1 = ring_start[k], s2 = ring_start[k + 1];
    std::size_t i = 0, j = 0;
    while (i < n1 || j < n2) {
      const int a = static_cast<int>(s1 + i % n1);
      const int b = static_cast<int>(s2 + j % n2);
      const int next_a = static_cast<int>(s1 + (i + 1) % n1);
      const int next_b = static_cast<int>(s2 + (j + 1) % n2);
      // advance on the side that closes the shorter diagonal
      const bool inner_first = norm(vertices[next_a] - vertices[b]) <= norm(vertices[a] - vertices[next_b]);
      if (i < n1 && (j >= n2 || inner_first)) {
        triangles.push_back(oriented(a, b, next_a));
        ++i;
      } else {
        triangles.push_back(oriented(a, b, next_b));
        ++j;
      }
    }
  }
  std::vector<int> boundary;
  for (std::size_t v = ring_start[rings]; v < vertices.size(); ++v) boundary.push_back(static_cast<int>(v));
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

}  // namespace detail

/// Structured triangulation of a disk or an axis-aligned rectangle.
///
/// Rectangles are cut into a uniform grid whose cell sides do not exceed
/// target_h, each cell split into two right triangles. Disks get a polar
/// ring mesh whose longest edge does not exceed target_h.
inline Mesh generate_mesh(const Shape& omega, double target_h, std::size_t max_vertices = kDefaultMaxVertices) {
  require(target_h > 0.0 && std::isfinite(target_h), ErrorCode::InvalidArgument, "target_h must be positive");
  require(omega.parts().size() == 1, ErrorCode::InvalidArgument, "domain must be a single disk or rectangle");
  const ShapePart& part = omega.parts().front();
  if (const auto* disk = std::get_if<Disk>(&part)) {
    auto rings = static_cast<std::size_t>(std::ceil(disk->radius / target_h - 1e-9));
    rings = std::max<std::size_t>(rings, 1);
    for (;;) {
      const std::size_t count = 1 + 3 * rings * (rings + 1);
      if (count > max_vertices) {
        throw Error(ErrorCode::Budget, "mesh needs " + std::to_string(count) + " vertices, cap is " +
                                           std::to_string(max_vertices));
      }
      Mesh mesh = detail::disk_mesh(*disk, rings);
      if (mesh.h_max() <= target_h) return mesh;
      rings = std::max(rings + 1, static_cast<std::size_t>(std::ceil(rings * mesh.h_max() / target_h)));
    }
  }
  Box box;
  require(detail::axis_aligned_rectangle(std::get<ConvexPolygon>(part), box), ErrorCode::InvalidArgument,
          "polygonal domains must be axis-aligned rectangles");
  return detail::rectangle_mesh(box, target_h, max_vertices);
}

/// Mesh whose longest edge does not exceed max_edge.
inline Mesh generate_mesh_for_edge(const Shape& omega, double max_edge, std::size_t max_vertices = kDefaultMaxVertices) {
  require(omega.parts().size() == 1, ErrorCode::InvalidArgument, "domain must be a single disk or rectangle");
  const bool is_disk = std::holds_alternative<Disk>(omega.parts().front());
  // Grid cells are split along a diagonal, so the longest edge is the diagonal.
  double target = is_disk ? max_edge : max_edge / std::sqrt(2.0);
  for (;;) {
    Mesh mesh = generate_mesh(omega, target, max_vertices);
    if (mesh.h_max() <= max_edge * (1.0 + 1e-12)) return mesh;
    target *= 0.98;
  }
}

/// Per-triangle conductivity.
struct ConductivityField {
  std::vector<double> values;
  double background = 1.0;
  double contrast = 0.0;

  static ConductivityField constant(const Mesh& mesh, double value) {
    require(value >= kMinConductivity, ErrorCode::Positivity, "conductivity must be positive");
    ConductivityField f;
    f.values.assign(mesh.num_triangles(), value);
    f.background = value;
    return f;
  }
};

/// sigma_T = 1 + sigma_D when the triangle centroid lies in D, 1 otherwise.
inline ConductivityField assign_conductivity(const Mesh& mesh, const Shape& inclusion, double sigma_d) {
  if (!(1.0 + sigma_d > kMinConductivity) || !std::isfinite(sigma_d)) {
    throw Error(ErrorCode::Positivity, "1 + sigma_D = " + std::to_string(1.0 + sigma_d) +
                                           " must exceed " + std::to_string(kMinConductivity));
  }
  ConductivityField f;
  f.background = 1.0;
  f.contrast = sigma_d;
  f.values.resize(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    f.values[t] = contains(inclusion, mesh.centroid(t)) ? 1.0 + sigma_d : 1.0;
  }
  return f;
}

inline Vec2 triangle_gradient(const Mesh& mesh, std::size_t t, const std::vector<double>& values) {
  const auto& tri = mesh.triangles()[t];
  const auto& g = mesh.basis_gradients(t);
  return values[tri[0]] * g[0] + values[tri[1]] * g[1] + values[tri[2]] * g[2];
}

/// Constant gradient of the piecewise-linear interpolant on every triangle.
inline std::vector<Vec2> p1_gradient(const Mesh& mesh, const DiscreteField& field) {
  require(field.values.size() == mesh.num_vertices(), ErrorCode::InvalidArgument,
          "field length does not match the vertex count");
  std::vector<Vec2> out(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) out[t] = triangle_gradient(mesh, t, field.values);
  return out;
}

inline void write_mesh_csv(std::ostream& vertices_out, std::ostream& triangles_out, const Mesh& mesh,
                           const ConductivityField* sigma = nullptr) {
  vertices_out << "index,x,y,boundary\n";
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    vertices_out << v << ',' << format_double(mesh.vertices()[v].x) << ',' << format_double(mesh.vertices()[v].y)
                 << ',' << (mesh.is_boundary(v) ? 1 : 0) << '\n';
  }
  triangles_out << "index,v0,v1,v2" << (sigma ? ",sigma\n" : "\n");
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    triangles_out << t << ',' << tri[0] << ',' << tri[1] << ',' << tri[2];
    if (sigma) triangles_out << ',' << format_double(sigma->values[t]);
    triangles_out << '\n';
  }
}

}  // namespace penclose
