// Adaptive driver: run configuration (config file + command-line flags),
// Dörfler marking, the adaptive refinement loop, and CSV emission.
#pragma once

#include <cctype>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <planelast/benchmarks.hpp>
#include <planelast/estimator.hpp>
#include <planelast/recovery.hpp>

namespace planelast {

struct RunConfig {
  std::string benchmark = "cook";  // cook | manufactured-smooth | manufactured-divfree | patch-test
  std::string mesh_path;           // optional mesh file; empty = the benchmark's built-in mesh
  std::string out_path;            // optional CSV destination; empty = no file output
  double mu = 1.0;
  // At most one of nu / lambda / lambda_inv; setting one clears the others.
  std::optional<double> nu;
  std::optional<double> lambda;
  std::optional<double> lambda_inv;
  double theta = 0.5;  // marking parameter; >= 1 switches to uniform refinement
  int steps = 17;
  int korn_degree = 6;
  double korn_safety = 1.1;
  std::optional<double> korn_override;  // user-supplied Korn constant
  double stop_tolerance = 1e-9;         // stop when bound <= tol * (1 + max |sigma_h|)
};

// --- configuration parsing ---------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  require(pos == value.size() && !value.empty(),
          "config: value '" + value + "' for '" + key + "' is not a number");
  return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  require(pos == value.size() && !value.empty(),
          "config: value '" + value + "' for '" + key + "' is not an integer");
  return v;
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto set_parameter = [&](std::optional<double> RunConfig::* field) {
    cfg.nu.reset();
    cfg.lambda.reset();
    cfg.lambda_inv.reset();
    cfg.*field = detail::parse_double(key, value);
  };
  if (key == "benchmark")
    cfg.benchmark = value;
  else if (key == "mesh")
    cfg.mesh_path = value;
  else if (key == "out")
    cfg.out_path = value;
  else if (key == "mu")
    cfg.mu = detail::parse_double(key, value);
  else if (key == "nu")
    set_parameter(&RunConfig::nu);
  else if (key == "lambda")
    set_parameter(&RunConfig::lambda);
  else if (key == "lambda_inv")
    set_parameter(&RunConfig::lambda_inv);
  else if (key == "theta")
    cfg.theta = detail::parse_double(key, value);
  else if (key == "steps")
    cfg.steps = detail::parse_int(key, value);
  else if (key == "korn_degree")
    cfg.korn_degree = detail::parse_int(key, value);
  else if (key == "korn_safety")
    cfg.korn_safety = detail::parse_double(key, value);
  else if (key == "korn_override")
    cfg.korn_override = detail::parse_double(key, value);
  else if (key == "stop_tolerance")
    cfg.stop_tolerance = detail::parse_double(key, value);
  else
    require(false, "config: unknown key '" + key + "'");
}

// key=value lines; '#' starts a comment; blank lines ignored.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos,
            "config: line " + std::to_string(line_no) + " is not key=value");
    apply_config_entry(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");
  return parse_config(in, std::move(base));
}

// Flags take precedence over the config file, which overrides the defaults.
inline RunConfig parse_cli(const std::vector<std::string>& args) {
  RunConfig cfg;
  for (std::size_t i = 0; i < args.size(); ++i)
    if (args[i] == "--config") {
      require(i + 1 < args.size(), "cli: --config needs a path");
      cfg = load_config_file(args[i + 1], std::move(cfg));
      ++i;
    }
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& flag = args[i];
    if (flag == "--config") {
      ++i;
      continue;
    }
    require(flag.size() > 2 && flag.rfind("--", 0) == 0, "cli: unknown argument '" + flag + "'");
    const std::string key = flag.substr(2);
    require(key == "benchmark" || key == "nu" || key == "theta" || key == "steps" ||
                key == "mesh" || key == "out",
            "cli: unknown flag '" + flag + "'");
    require(i + 1 < args.size(), "cli: " + flag + " needs a value");
    apply_config_entry(cfg, key, args[i + 1]);
    ++i;
  }
  return cfg;
}

// --- benchmark resolution -----------------------------------------------------

inline BenchmarkSetup setup_from_config(const RunConfig& cfg) {
  const int given =
      (cfg.nu.has_value() ? 1 : 0) + (cfg.lambda.has_value() ? 1 : 0) +
      (cfg.lambda_inv.has_value() ? 1 : 0);
  require(given <= 1, "config: give at most one of nu, lambda, lambda_inv");
  require(cfg.mu > 0.0, "config: mu must be positive");
  std::optional<double> lambda_inv;
  if (cfg.nu) lambda_inv = lambda_inv_from_poisson(*cfg.nu, cfg.mu);
  if (cfg.lambda) {
    require(*cfg.lambda > 0.0, "config: lambda must be positive");
    lambda_inv = 1.0 / *cfg.lambda;
  }
  if (cfg.lambda_inv) {
    require(*cfg.lambda_inv >= 0.0, "config: lambda_inv must be nonnegative");
    lambda_inv = *cfg.lambda_inv;
  }

  BenchmarkSetup setup;
  if (cfg.benchmark == "cook") {
    // The Cook data (f = 0, unit shear) does not depend on lambda, so the
    // resolved value can be installed directly.
    setup = cook_setup(0.29, cfg.mu);
    if (lambda_inv) setup.lambda_inv = *lambda_inv;
  } else if (cfg.benchmark == "manufactured-smooth") {
    setup = manufactured_smooth_setup(lambda_inv.value_or(1.0 / 49.0), cfg.mu);
  } else if (cfg.benchmark == "manufactured-divfree") {
    setup = manufactured_divfree_setup(lambda_inv.value_or(0.5), cfg.mu);
  } else if (cfg.benchmark == "patch-test") {
    setup = patch_test_setup(lambda_inv.value_or(0.25), cfg.mu);
  } else {
    require(false, "config: unknown benchmark '" + cfg.benchmark + "'");
  }
  if (!cfg.mesh_path.empty()) setup.initial_mesh = load_mesh(cfg.mesh_path);
  return setup;
}

// --- marking -------------------------------------------------------------------

// Greedy Dörfler marking: sort indicators descending (ties by element index)
// and take the shortest prefix whose squared sum reaches theta^2 times the
// total.  All-zero indicators yield an empty set.
inline std::vector<int> dorfler_mark(const std::vector<double>& eta, double theta) {
  require(theta > 0.0 && theta <= 1.0, "dorfler_mark: theta must lie in (0, 1]");
  std::vector<int> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (eta[a] != eta[b]) return eta[a] > eta[b];
    return a < b;
  });
  // Accumulate the total in the same sorted order as the prefix sums, so
  // theta = 1 terminates exactly when every positive indicator is taken.
  double total_sq = 0.0;
  for (int t : order) total_sq += eta[t] * eta[t];
  if (total_sq <= 0.0) return {};
  const double target = theta * theta * total_sq;
  std::vector<int> marks;
  double prefix_sq = 0.0;
  for (int t : order) {
    if (prefix_sq >= target || eta[t] <= 0.0) break;
    marks.push_back(t);
    prefix_sq += eta[t] * eta[t];
  }
  std::sort(marks.begin(), marks.end());
  return marks;
}

// --- adaptive loop --------------------------------------------------------------

struct StepRecord {
  int step = 0;
  int n_elem = 0;
  int n_dof = 0;
  double eta_R = 0.0, eta_C = 0.0, eta_S = 0.0;
  double bound = 0.0;
  double osc = 0.0;
  std::optional<double> energy_err;
  std::optional<double> eff_index;
};

struct ConvergenceRecord {
  std::vector<StepRecord> rows;
  std::optional<double> slope;  // log(bound) vs log(n_dof) over the final rows
};

// Least-squares slope of log(bound) against log(n_dof) over the last
// `window` rows (needs at least two).
inline std::optional<double> fitted_slope(const ConvergenceRecord& record, int window = 6) {
  const int n = static_cast<int>(record.rows.size());
  const int use = std::min(window, n);
  if (use < 2) return std::nullopt;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = n - use; i < n; ++i) {
    const double x = std::log(static_cast<double>(record.rows[i].n_dof));
    const double y = std::log(record.rows[i].bound);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = use * sxx - sx * sx;
  if (denom <= 0.0) return std::nullopt;
  return (use * sxy - sx * sy) / denom;
}

inline void emit_csv(const ConvergenceRecord& record, std::ostream& os) {
  os << "step,n_elem,n_dof,eta_R,eta_C,eta_S,bound,osc,energy_err,eff_index\n";
  const auto num = [](double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(12) << v;
    return s.str();
  };
  for (const StepRecord& r : record.rows) {
    os << r.step << ',' << r.n_elem << ',' << r.n_dof << ',' << num(r.eta_R) << ','
       << num(r.eta_C) << ',' << num(r.eta_S) << ',' << num(r.bound) << ',' << num(r.osc) << ','
       << (r.energy_err ? num(*r.energy_err) : std::string()) << ','
       << (r.eff_index ? num(*r.eff_index) : std::string()) << '\n';
  }
}

inline void emit_csv(const ConvergenceRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "emit_csv: cannot open '" + path + "'");
  emit_csv(record, out);
  out.flush();
  require(out.good(), "emit_csv: write to '" + path + "' failed");
}

inline ConvergenceRecord run_adaptive(const RunConfig& cfg) {
  require(cfg.steps >= 1, "run_adaptive: need at least one step");
  require(cfg.theta > 0.0, "run_adaptive: theta must be positive");
  const BenchmarkSetup setup = setup_from_config(cfg);
  Mesh mesh = setup.initial_mesh;
  ConvergenceRecord record;

  for (int step = 0; step < cfg.steps; ++step) {
    const auto stage = [&](const char* name, auto&& fn) {
      try {
        return fn();
      } catch (const std::exception& e) {
        throw std::runtime_error("run_adaptive: step " + std::to_string(step) + ", stage " +
                                 name + ": " + e.what());
      }
    };

    const ElasticityProblem problem = setup.problem_on(mesh);
    const ProjectedData data = stage("project", [&] { return make_projected_data(problem); });
    const DiscreteSolution sol =
        stage("solve", [&] { return solve_elasticity(problem, data); });
    const ReconstructedStress rec =
        stage("reconstruct", [&] { return reconstruct(sol, problem, data); });
    const SymmetrizedStress sym =
        stage("symmetrize", [&] { return apply_symmetry_correction(rec, mesh); });
    const ConformingRecovery recov =
        stage("recover", [&] { return recover_conforming(sol.u, mesh); });
    const KornConstants korn = stage("korn", [&] {
      return cfg.korn_override ? korn_constants_fixed(mesh, *cfg.korn_override)
                               : korn_constants(mesh, cfg.korn_degree, cfg.korn_safety);
    });
    const EstimatorReport report = stage(
        "estimate", [&] { return compute_estimators(sol, sym, recov.u_c, problem, korn); });
    const OscillationReport osc =
        stage("oscillation", [&] { return oscillation(problem, data); });

    StepRecord row;
    row.step = step;
    row.n_elem = mesh.n_triangles();
    row.n_dof = sol.layout.m_offset() + static_cast<int>(sol.multipliers.size());
    row.eta_R = report.eta_R;
    row.eta_C = report.eta_C;
    row.eta_S = report.eta_S;
    row.bound = report.bound;
    row.osc = osc.total;
    if (setup.has_exact) {
      const double err = stage("energy error", [&] {
        return energy_error(sol, problem, setup.exact_grad_u, setup.exact_p);
      });
      row.energy_err = err;
      if (err > 0.0) row.eff_index = report.bound / err;
    }
    record.rows.push_back(row);
    record.slope = fitted_slope(record);
    if (!cfg.out_path.empty()) emit_csv(record, cfg.out_path);

    const double scale = 1.0 + broken_stress(sol, problem).coeffs.cwiseAbs().maxCoeff();
    if (report.bound <= cfg.stop_tolerance * scale) break;
    if (step + 1 >= cfg.steps) break;

    if (cfg.theta >= 1.0) {
      mesh = stage("refine", [&] { return refine_uniform(mesh); });
    } else {
      const std::vector<int> marks =
          stage("mark", [&] { return dorfler_mark(report.eta_T, cfg.theta); });
      if (marks.empty()) break;
      mesh = stage("refine", [&] { return refine(mesh, marks); });
    }
  }
  return record;
}

}  // namespace planelast
