// p_enclose: configuration-driven front end for the enclosure pipeline.

#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "penclose/config.hpp"
#include "penclose/indicator.hpp"
#include "penclose/io.hpp"
#include "penclose/monotonicity.hpp"

namespace fs = std::filesystem;
using namespace penclose;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
  std::optional<double> p, a0, b0, step, span;
};

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.out) c.out_dir = *o.out;
  if (o.workers) c.workers = *o.workers;
  if (o.seed) c.seed = *o.seed;
  if (o.p) c.p = *o.p;
  if (o.a0) c.a0 = *o.a0;
  if (o.b0) c.b0 = *o.b0;
  if (o.step) c.step = *o.step;
  if (o.span) c.span = *o.span;
  validate(c);
  return c;
}

unsigned workers_of(const RunConfig& c) { return c.workers == 0 ? default_workers() : c.workers; }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::shared_ptr<const WolffProfile> profile_of(const RunConfig& c) {
  return std::make_shared<const WolffProfile>(integrate_profile(c.p, c.a0, c.b0, c.step, c.span));
}

Json sweep_json(const SweepResult& s) {
  return Json{{"slope", s.slope},          {"fit_residual", s.fit_residual}, {"fitted", s.fitted},
              {"sign", s.sign},            {"usable", s.usable},             {"noise_limited", s.noise_limited}};
}

int cmd_wolff(const RunConfig& c) {
  const auto profile = profile_of(c);
  const fs::path out(c.out_dir);
  std::ostringstream csv;
  write_profile_csv(csv, *profile);
  write_file_atomic(out / "profile.csv", csv.str());
  const Json summary{{"p", c.p},
                     {"a0", c.a0},
                     {"b0", c.b0},
                     {"step", c.step},
                     {"span", profile->span()},
                     {"period", profile->period()},
                     {"orbit_min", profile->orbit_min()},
                     {"orbit_max", profile->orbit_max()},
                     {"mean", profile->mean_over_period()},
                     {"closure_error", profile->closure_error()},
                     {"max_ode_residual", profile->max_ode_residual()}};
  write_file_atomic(out / "wolff_summary.json", dump(summary));
  std::cout << "period " << format_double(profile->period()) << "\n";
  return 0;
}

int cmd_forward(const RunConfig& c) {
  const auto profile = profile_of(c);
  const Vec2 rho = unit_from_angle(c.rho_angle);
  const double t = c.t.value_or(support_function(c.domain, rho));
  const Mesh mesh = generate_mesh_for_edge(c.domain, kResolution / c.tau, c.mesh_budget);
  const ConductivityField sigma = assign_conductivity(mesh, c.inclusion, c.sigma_D);
  TestFunctionParams params{DirectionFrame::from_rho(rho), c.tau, t, profile};
  SolverOptions options;
  options.tol = c.tol;
  options.initial_guess = wolff_nodal(mesh, params);
  const ForwardSolution sol = solve_forward(mesh, sigma, wolff_trace(mesh, params), c.p, options);

  const fs::path out(c.out_dir);
  std::ostringstream sol_csv, v_csv, t_csv;
  write_solution_csv(sol_csv, mesh, sol.field);
  write_mesh_csv(v_csv, t_csv, mesh, &sigma);
  write_file_atomic(out / "solution.csv", sol_csv.str());
  write_file_atomic(out / "mesh_vertices.csv", v_csv.str());
  write_file_atomic(out / "mesh_triangles.csv", t_csv.str());
  const Json summary{{"p", c.p},
                     {"tau", c.tau},
                     {"t", t},
                     {"rho", {rho.x, rho.y}},
                     {"vertices", mesh.num_vertices()},
                     {"h_max", mesh.h_max()},
                     {"pairing", sol.report.energy},
                     {"optimality_residual", sol.report.optimality_residual},
                     {"iterations", sol.report.iterations},
                     {"epsilon_final", sol.report.epsilon_final}};
  write_file_atomic(out / "forward_summary.json", dump(summary));
  std::cout << "pairing " << format_double(sol.report.energy) << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& c) {
  const auto profile = profile_of(c);
  const Vec2 rho = unit_from_angle(c.rho_angle);
  const double t = c.t.value_or(support_function(c.domain, rho));
  const auto levels = build_levels(c.domain, c.inclusion, c.sigma_D, c.taus, c.mesh_budget);
  SolverOptions options;
  options.tol = c.tol;
  const SweepResult s = sweep(levels, profile, rho, t, c.p, options, workers_of(c));

  const fs::path out(c.out_dir);
  std::ostringstream csv;
  write_sweep_csv_header(csv);
  write_sweep_csv_rows(csv, s);
  write_file_atomic(out / "sweep.csv", csv.str());
  Json summary = sweep_json(s);
  summary["rho"] = {rho.x, rho.y};
  summary["t"] = t;
  summary["h_hat"] = nullptr;
  try {
    summary["h_hat"] = estimate_support(s, t, c.p).h_hat;
  } catch (const Error& e) {
    summary["estimate_failure"] = e.what();
  }
  write_file_atomic(out / "sweep_summary.json", dump(summary));
  std::cout << "slope " << format_double(s.slope) << " sign " << s.sign << "\n";
  return 0;
}

int cmd_reconstruct(const RunConfig& c) {
  ReconstructionConfig rc;
  rc.omega = c.domain;
  rc.inclusion = c.inclusion;
  rc.sigma_d = c.sigma_D;
  rc.p = c.p;
  rc.directions = c.directions;
  rc.taus = c.taus;
  rc.mesh_budget = c.mesh_budget;
  rc.tol = c.tol;
  rc.workers = workers_of(c);
  rc.a0 = c.a0;
  rc.b0 = c.b0;
  rc.step = c.step;
  rc.span = c.span;
  const auto started = std::chrono::steady_clock::now();
  const ReconstructionResult r = reconstruct_hull(rc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path out(c.out_dir);
  std::ostringstream csv;
  write_sweep_csv_header(csv);
  Json dirs = Json::array();
  for (const auto& d : r.directions) {
    write_sweep_csv_rows(csv, d.sweep);
    Json entry = sweep_json(d.sweep);
    entry["rho"] = {d.rho.x, d.rho.y};
    entry["t"] = d.t;
    entry["h_hat"] = d.estimate ? Json(d.estimate->h_hat) : Json(nullptr);
    entry["failure"] = d.failure;
    dirs.push_back(entry);
  }
  write_file_atomic(out / "sweeps.csv", csv.str());

  Json hull = nullptr;
  if (r.hull) {
    Json vertices = Json::array(), used = Json::array();
    std::ostringstream hcsv;
    hcsv << "x,y\n";
    for (const Vec2& v : r.hull->vertices) {
      vertices.push_back({v.x, v.y});
      hcsv << format_double(v.x) << ',' << format_double(v.y) << '\n';
    }
    for (const Vec2& u : r.hull->directions_used) used.push_back({u.x, u.y});
    hull = Json{{"vertices", vertices}, {"directions_used", used}};
    write_file_atomic(out / "hull.csv", hcsv.str());
  }
  // Placement and parallelism do not influence results, so they stay out.
  Json echoed = to_json(c);
  echoed.erase("out_dir");
  echoed.erase("workers");
  const Json report{{"config", echoed},
                    {"inclusion_detected", r.inclusion_detected},
                    {"summary", r.summary},
                    {"directions", dirs},
                    {"hull", hull}};
  write_file_atomic(out / "reconstruction.json", dump(report));

  std::ostringstream text;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  text << "finished " << stamp << " in " << seconds << " s\n" << r.summary << "\n";
  if (r.hull && !c.inclusion.empty()) {
    text << "hausdorff distance to the configured inclusion hull: "
         << format_double(hausdorff_to_hull(r.hull->vertices, c.inclusion)) << "\n";
  }
  write_file_atomic(out / "summary.txt", text.str());
  std::cout << text.str();
  return 0;
}

int cmd_monotonicity(const RunConfig& c) {
  MonotonicitySuiteConfig mc;
  mc.exponents = c.exponents;
  mc.cases_per_exponent = c.cases_per_exponent;
  mc.seed = c.seed;
  mc.mesh_h = c.monotonicity_mesh_h;
  mc.tol = c.tol;
  mc.workers = workers_of(c);
  const auto results = run_monotonicity_suite(mc);
  std::string lines;
  std::size_t failures = 0;
  for (const auto& r : results) {
    const auto& s = r.spec;
    Json line{{"case", s.index},
              {"seed", mc.seed},
              {"p", s.p},
              {"center", {s.center.x, s.center.y}},
              {"radius", s.radius},
              {"contrast", s.contrast},
              {"boundary", s.boundary == BoundaryKind::Wolff ? "wolff" : "affine"},
              {"lower", r.report.lower},
              {"middle", r.report.middle},
              {"upper", r.report.upper},
              {"slack_lower", r.report.slack_lower},
              {"slack_upper", r.report.slack_upper},
              {"tol", r.report.tol},
              {"verdict", r.report.pass ? "pass" : "fail"}};
    if (s.boundary == BoundaryKind::Wolff) {
      line["tau"] = s.tau;
      line["angle"] = s.angle;
    } else {
      line["slope"] = {s.slope.x, s.slope.y};
      line["offset"] = s.offset;
    }
    lines += line.dump() + "\n";
    if (!r.report.pass) ++failures;
  }
  write_file_atomic(fs::path(c.out_dir) / "monotonicity.jsonl", lines);
  std::cout << results.size() - failures << " of " << results.size() << " cases pass\n";
  if (failures > 0) {
    std::cerr << "p_enclose: " << failures << " monotonicity case(s) violate the chain\n";
    return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enclosure-method toolkit for the weighted p-Laplace equation"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "JSON run configuration");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--workers", o.workers, "worker threads (0 = all cores)");
  app.add_option("--seed", o.seed, "random seed");

  auto* wolff = app.add_subcommand("wolff", "integrate a Wolff profile")->fallthrough();
  wolff->add_option("--p", o.p, "exponent");
  wolff->add_option("--a0", o.a0, "initial a");
  wolff->add_option("--b0", o.b0, "initial a'");
  wolff->add_option("--step", o.step, "integration step");
  wolff->add_option("--span", o.span, "integration span");
  auto* forward = app.add_subcommand("forward", "solve one forward problem with Wolff data")->fallthrough();
  auto* sweep_cmd = app.add_subcommand("sweep", "indicator over the tau list in one direction")->fallthrough();
  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct the convex hull")->fallthrough();
  auto* mono = app.add_subcommand("monotonicity", "randomized monotonicity suite")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const RunConfig config = resolve(o);
    log(LogLevel::Info, "writing outputs to " + config.out_dir);
    if (wolff->parsed()) return cmd_wolff(config);
    if (forward->parsed()) return cmd_forward(config);
    if (sweep_cmd->parsed()) return cmd_sweep(config);
    if (reconstruct->parsed()) return cmd_reconstruct(config);
    if (mono->parsed()) return cmd_monotonicity(config);
  } catch (const Error& e) {
    std::cerr << "p_enclose: " << e.what() << "\n";
    return e.code() == ErrorCode::Config ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "p_enclose: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
