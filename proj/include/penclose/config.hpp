// Flat JSON run configuration shared by every CLI subcommand.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "penclose/core.hpp"
#include "penclose/geometry.hpp"
#include "penclose/mesh.hpp"

namespace penclose {

using Json = nlohmann::json;

struct RunConfig {
  double p = 3.0;
  Shape domain = Shape::disk({0.0, 0.0}, 0.6);
  Shape inclusion = Shape::disk({0.2, 0.1}, 0.3);
  double sigma_D = 1.0;
  std::size_t directions = 16;
  std::vector<double> taus{4.0, 6.0, 8.0, 10.0, 12.0, 14.0};
  std::size_t mesh_budget = kDefaultMaxVertices;
  double tol = 1e-9;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  /// 0 selects the available hardware parallelism.
  unsigned workers = 0;

  double a0 = 1.0;
  double b0 = 0.0;
  double step = 1e-3;
  double span = 40.0;

  /// Direction of the forward and sweep subcommands, radians.
  double rho_angle = 0.0;
  /// Level offset; unset means the domain's support value in direction rho.
  std::optional<double> t;
  /// Growth rate of the forward subcommand.
  double tau = 4.0;

  std::vector<double> exponents{1.3, 1.5, 2.0, 3.0, 5.0};
  std::size_t cases_per_exponent = 50;
  double monotonicity_mesh_h = 1.0 / 24.0;
};

inline Error config_error(const std::string& field, const std::string& message) {
  return Error(ErrorCode::Config, field + ": " + message);
}

namespace detail {

inline Json vec_to_json(Vec2 v) { return Json::array({v.x, v.y}); }

inline Json part_to_json(const ShapePart& part) {
  if (const auto* d = std::get_if<Disk>(&part)) {
    return Json{{"type", "disk"}, {"center", vec_to_json(d->center)}, {"radius", d->radius}};
  }
  Json vertices = Json::array();
  for (const Vec2& v : std::get<ConvexPolygon>(part).vertices) vertices.push_back(vec_to_json(v));
  return Json{{"type", "polygon"}, {"vertices", vertices}};
}

inline Vec2 vec_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw config_error(field, "expected a two-element numeric array");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline Json shape_to_json(const Shape& shape) {
  if (shape.empty()) return nullptr;
  if (shape.parts().size() == 1) return detail::part_to_json(shape.parts().front());
  Json members = Json::array();
  for (const ShapePart& part : shape.parts()) members.push_back(detail::part_to_json(part));
  return Json{{"type", "union"}, {"members", members}};
}

inline Shape shape_from_json(const Json& j, const std::string& field) {
  if (j.is_null()) return Shape{};
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw config_error(field, "expected null or an object with a string \"type\"");
  }
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "disk") {
      if (!j.contains("radius") || !j["radius"].is_number()) throw config_error(field + ".radius", "missing number");
      return Shape::disk(detail::vec_from_json(j.value("center", Json()), field + ".center"),
                         j["radius"].get<double>());
    }
    if (type == "polygon") {
      if (!j.contains("vertices") || !j["vertices"].is_array()) throw config_error(field + ".vertices", "missing array");
      std::vector<Vec2> vertices;
      for (const Json& v : j["vertices"]) vertices.push_back(detail::vec_from_json(v, field + ".vertices"));
      return Shape::polygon(std::move(vertices));
    }
    if (type == "union") {
      if (!j.contains("members") || !j["members"].is_array()) throw config_error(field + ".members", "missing array");
      std::vector<Shape> members;
      for (const Json& m : j["members"]) members.push_back(shape_from_json(m, field + ".members"));
      return Shape::union_of(members);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw config_error(field, e.what());
  }
  throw config_error(field + ".type", "unknown shape type \"" + type + "\"");
}

inline Json to_json(const RunConfig& c) {
  Json j;
  j["p"] = c.p;
  j["domain"] = shape_to_json(c.domain);
  j["inclusion"] = shape_to_json(c.inclusion);
  j["sigma_D"] = c.sigma_D;
  j["directions"] = c.directions;
  j["taus"] = c.taus;
  j["mesh_budget"] = c.mesh_budget;
  j["tol"] = c.tol;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["a0"] = c.a0;
  j["b0"] = c.b0;
  j["step"] = c.step;
  j["span"] = c.span;
  j["rho_angle"] = c.rho_angle;
  j["t"] = c.t ? Json(*c.t) : Json(nullptr);
  j["tau"] = c.tau;
  j["exponents"] = c.exponents;
  j["cases_per_exponent"] = c.cases_per_exponent;
  j["monotonicity_mesh_h"] = c.monotonicity_mesh_h;
  return j;
}

/// Range checks; each failure names its field.
inline void validate(const RunConfig& c) {
  auto exponent_ok = [](double p) { return std::isfinite(p) && p > 1.0; };
  if (!exponent_ok(c.p)) throw config_error("p", "must satisfy 1 < p < inf");
  if (c.domain.parts().size() != 1) throw config_error("domain", "must be a single disk or rectangle");
  if (const auto* poly = std::get_if<ConvexPolygon>(&c.domain.parts().front())) {
    Box box;
    if (!detail::axis_aligned_rectangle(*poly, box)) throw config_error("domain", "polygons must be axis-aligned rectangles");
  }
  if (!std::isfinite(c.sigma_D)) throw config_error("sigma_D", "must be finite");
  if (!(1.0 + c.sigma_D > kMinConductivity)) {
    throw config_error("sigma_D", "positivity violated: 1 + sigma_D must exceed " + std::to_string(kMinConductivity));
  }
  if (c.directions < 8) throw config_error("directions", "need at least 8");
  if (c.taus.empty()) throw config_error("taus", "must be nonempty");
  for (std::size_t i = 0; i < c.taus.size(); ++i) {
    if (!std::isfinite(c.taus[i]) || c.taus[i] <= 0.0) throw config_error("taus", "entries must be positive");
    if (i > 0 && c.taus[i] <= c.taus[i - 1]) throw config_error("taus", "must be strictly increasing");
  }
  if (c.mesh_budget < 9) throw config_error("mesh_budget", "must be at least 9");
  if (!std::isfinite(c.tol) || c.tol <= 0.0) throw config_error("tol", "must be positive");
  if (c.out_dir.empty()) throw config_error("out_dir", "must be nonempty");
  if (!std::isfinite(c.a0) || !std::isfinite(c.b0) || (c.a0 == 0.0 && c.b0 == 0.0)) {
    throw config_error("a0", "initial conditions (a0, b0) must be finite and not both zero");
  }
  if (!std::isfinite(c.step) || c.step <= 0.0 || c.step > 0.1) throw config_error("step", "must lie in (0, 0.1]");
  if (!std::isfinite(c.span) || c.span <= 0.0) throw config_error("span", "must be positive");
  if (!std::isfinite(c.rho_angle)) throw config_error("rho_angle", "must be finite");
  if (c.t && !std::isfinite(*c.t)) throw config_error("t", "must be finite or null");
  if (!std::isfinite(c.tau) || c.tau <= 0.0) throw config_error("tau", "must be positive");
  if (c.exponents.empty()) throw config_error("exponents", "must be nonempty");
  for (double p : c.exponents) {
    if (!exponent_ok(p)) throw config_error("exponents", "entries must satisfy 1 < p < inf");
  }
  if (c.cases_per_exponent < 1) throw config_error("cases_per_exponent", "must be at least 1");
  if (!std::isfinite(c.monotonicity_mesh_h) || c.monotonicity_mesh_h <= 0.0 || c.monotonicity_mesh_h > 0.5) {
    throw config_error("monotonicity_mesh_h", "must lie in (0, 0.5]");
  }
}

namespace detail {

template <class T>
T read_field(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error(key, "has the wrong type");
  }
}

inline std::size_t read_count(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw config_error(key, "must be a nonnegative integer");
  return v.get<std::size_t>();
}

}  // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw config_error("<root>", "config must be a JSON object");
  RunConfig c;
  static const std::vector<std::string> known{
      "p",   "domain", "inclusion", "sigma_D",  "directions", "taus",      "mesh_budget", "tol",
      "out_dir", "seed", "workers", "a0",       "b0",         "step",      "span",        "rho_angle",
      "t",   "tau",    "exponents", "cases_per_exponent", "monotonicity_mesh_h"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) throw config_error(it.key(), "unknown field");
  }
  using detail::read_count;
  using detail::read_field;
  if (j.contains("p")) c.p = read_field<double>(j, "p");
  if (j.contains("domain")) c.domain = shape_from_json(j["domain"], "domain");
  if (j.contains("inclusion")) c.inclusion = shape_from_json(j["inclusion"], "inclusion");
  if (j.contains("sigma_D")) c.sigma_D = read_field<double>(j, "sigma_D");
  if (j.contains("directions")) c.directions = read_count(j, "directions");
  if (j.contains("taus")) c.taus = read_field<std::vector<double>>(j, "taus");
  if (j.contains("mesh_budget")) c.mesh_budget = read_count(j, "mesh_budget");
  if (j.contains("tol")) c.tol = read_field<double>(j, "tol");
  if (j.contains("out_dir")) c.out_dir = read_field<std::string>(j, "out_dir");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw config_error("seed", "must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("workers")) c.workers = static_cast<unsigned>(read_count(j, "workers"));
  if (j.contains("a0")) c.a0 = read_field<double>(j, "a0");
  if (j.contains("b0")) c.b0 = read_field<double>(j, "b0");
  if (j.contains("step")) c.step = read_field<double>(j, "step");
  if (j.contains("span")) c.span = read_field<double>(j, "span");
  if (j.contains("rho_angle")) c.rho_angle = read_field<double>(j, "rho_angle");
  if (j.contains("t")) {
    if (j["t"].is_null()) c.t.reset();
    else c.t = read_field<double>(j, "t");
  }
  if (j.contains("tau")) c.tau = read_field<double>(j, "tau");
  if (j.contains("exponents")) c.exponents = read_field<std::vector<double>>(j, "exponents");
  if (j.contains("cases_per_exponent")) c.cases_per_exponent = read_count(j, "cases_per_exponent");
  if (j.contains("monotonicity_mesh_h")) c.monotonicity_mesh_h = read_field<double>(j, "monotonicity_mesh_h");
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("<root>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("--config", "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace penclose
