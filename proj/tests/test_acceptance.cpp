// Acceptance suite for the adaptive equilibrated-stress elasticity library.
//
// Each numbered check prints exactly one PASS/FAIL line with the measured
// quantities.  The exit code is the number of failed checks.  Tolerances are
// fixed constants in this file; nothing is derived from the data under test.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <planelast/benchmarks.hpp>
#include <planelast/driver.hpp>

using namespace planelast;

namespace {

int g_failures = 0;

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

void emit(int id, const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++g_failures;
  std::ostringstream os;
  os << (ok ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << name;
  if (!detail.empty()) os << "  [" << detail << "]";
  std::cout << os.str() << "\n" << std::flush;
}

void run_check(int id, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    emit(id, name, ok, detail);
  } catch (const std::exception& e) {
    emit(id, name, false, std::string("exception: ") + e.what());
  }
}

double maxabs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Shared solve suite: every benchmark family at two refinement levels, with
// the full pipeline (solve, reconstruct, symmetrize, recover, estimate).
// ---------------------------------------------------------------------------

struct Pipeline {
  std::string label;
  BenchmarkSetup setup;
  Mesh mesh;
  ElasticityProblem problem;
  ProjectedData data;
  DiscreteSolution sol;
  FeField sigma_h;
  double stress_scale = 1.0;
  ReconstructedStress rec;
  SymmetrizedStress sym;
  ConformingRecovery recovery;
  KornConstants korn;
  EstimatorReport report;
};

std::unique_ptr<Pipeline> make_pipeline(BenchmarkSetup setup, int refines) {
  auto pl = std::make_unique<Pipeline>();
  pl->setup = std::move(setup);
  pl->label = pl->setup.name + " L" + std::to_string(refines);
  pl->mesh = pl->setup.initial_mesh;
  for (int i = 0; i < refines; ++i) pl->mesh = refine_uniform(pl->mesh);
  pl->problem = pl->setup.problem_on(pl->mesh);
  pl->data = make_projected_data(pl->problem);
  pl->sol = solve_elasticity(pl->problem, pl->data);
  pl->sigma_h = broken_stress(pl->sol, pl->problem);
  pl->stress_scale = 1.0 + maxabs(pl->sigma_h.coeffs);
  pl->rec = reconstruct(pl->sol, pl->problem, pl->data);
  pl->sym = apply_symmetry_correction(pl->rec, pl->mesh);
  pl->recovery = recover_conforming(pl->sol.u, pl->mesh);
  pl->korn = korn_constants(pl->mesh);
  pl->report = compute_estimators(pl->sol, pl->sym, pl->recovery.u_c, pl->problem, pl->korn);
  return pl;
}

std::vector<std::unique_ptr<Pipeline>> build_suite() {
  std::vector<std::unique_ptr<Pipeline>> suite;
  for (int refines : {0, 1}) {
    suite.push_back(make_pipeline(cook_setup(0.29), refines));
    suite.push_back(make_pipeline(cook_setup(0.49), refines));
    suite.push_back(make_pipeline(cook_setup(0.5), refines));
    suite.push_back(make_pipeline(manufactured_smooth_setup(1.0 / 49.0), refines));
    suite.push_back(make_pipeline(manufactured_divfree_setup(0.5), refines));
    suite.push_back(make_pipeline(manufactured_divfree_setup(0.0), refines));
    suite.push_back(make_pipeline(patch_test_setup(0.25), refines));
  }
  return suite;
}

// ---------------------------------------------------------------------------
// Small meshes and generic data for the oracle-equivalence checks.
// ---------------------------------------------------------------------------

Mesh single_triangle_mesh() {
  const std::vector<Vec2> v = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  const std::vector<std::array<int, 3>> tris = {{0, 1, 2}};
  const std::vector<BoundaryEdgeSpec> boundary = {
      {0, 1, BoundaryLabel::dirichlet}, {1, 2, BoundaryLabel::neumann},
      {2, 0, BoundaryLabel::neumann}};
  return build_mesh(v, tris, boundary);
}

Mesh cook_quad_mesh() {
  const std::vector<Vec2> v = {cook_chart(0.0, 0.0), cook_chart(1.0, 0.0),
                               cook_chart(1.0, 1.0), cook_chart(0.0, 1.0),
                               cook_chart(0.5, 0.5)};
  const std::vector<std::array<int, 3>> tris = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  const std::vector<BoundaryEdgeSpec> boundary = {{0, 1, BoundaryLabel::neumann},
                                                  {1, 2, BoundaryLabel::neumann},
                                                  {2, 3, BoundaryLabel::neumann},
                                                  {0, 3, BoundaryLabel::dirichlet}};
  return build_mesh(v, tris, boundary);
}

ElasticityProblem generic_problem(const Mesh& mesh) {
  ElasticityProblem p;
  p.mesh = &mesh;
  p.mu = 1.0;
  p.lambda_inv = 0.3;
  p.body_force = [](const Vec2& x) {
    return Vec2(std::sin(x.x() + 2.0 * x.y()), std::cos(3.0 * x.x() - x.y()));
  };
  p.traction = [](const Vec2& x, const Vec2& n) {
    return Vec2(0.1 + 0.2 * x.y() + 0.05 * n.x(), 0.1 * n.y() - 0.3 * x.x());
  };
  return p;
}

// Global dof index of local basis j (0..7) of tensor row r on element t.
int rt1_global_dof(const Mesh& mesh, int t, int r, int j) {
  if (j < 6) return rt1_edge_dof(mesh.tri_edges[t][j / 2], r, j % 2);
  return rt1_interior_dof(mesh, t, r, j - 6);
}

}  // namespace

int main() {
  std::cout << "acceptance suite\n";

  // -------------------------------------------------------------------------
  // 1. Adaptive convergence rate on the Cook membrane.
  // -------------------------------------------------------------------------
  run_check(1, "cook membrane: slope of log(bound) vs log(n_dof) in [-1.20, -0.85]", [] {
    const double lo = -1.20, hi = -0.85;
    const int steps = 22;  // >= 12 adaptive steps; slope fitted over the final 6
    bool ok = true;
    std::ostringstream detail;
    double max_seconds = 0.0;
    for (const double nu : {0.29, 0.49, 0.5}) {
      RunConfig cfg;
      cfg.benchmark = "cook";
      cfg.nu = nu;
      cfg.theta = 0.5;
      cfg.steps = steps;
      const auto t0 = std::chrono::steady_clock::now();
      const ConvergenceRecord record = run_adaptive(cfg);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      max_seconds = std::max(max_seconds, seconds);
      const bool this_ok = record.rows.size() >= 12 && record.slope.has_value() &&
                           *record.slope >= lo && *record.slope <= hi && seconds < 300.0;
      ok = ok && this_ok;
      detail << "nu=" << fmt(nu) << ": slope " << (record.slope ? fmt(*record.slope) : "n/a")
             << "; ";
    }
    detail << steps << " steps each, max " << fmt(max_seconds, 2) << " s";
    return std::make_pair(ok, detail.str());
  });

  // Shared pipelines for checks 2-6.
  std::vector<std::unique_ptr<Pipeline>> suite;
  try {
    suite = build_suite();
  } catch (const std::exception& e) {
    std::cout << "FAIL  --  shared solve suite could not be built [" << e.what() << "]\n";
    g_failures += 5;
  }

  // -------------------------------------------------------------------------
  // 2. Exact equilibration of the reconstructed stress.
  // -------------------------------------------------------------------------
  if (!suite.empty()) {
    run_check(2, "equilibration: max_T ||div(sigma_R) + f_h||_T <= 1e-10 * (1+|sigma_h|)", [&] {
      const QuadratureRule& rule = volume_rule();
      double worst = 0.0;
      std::string worst_label;
      for (const auto& pl : suite) {
        for (int t = 0; t < pl->mesh.n_triangles(); ++t) {
          const ElementGeometry geom = pl->mesh.geometry(t);
          double sq = 0.0;
          for (std::size_t q = 0; q < rule.bary.size(); ++q) {
            const double w = rule.weights[q] * 2.0 * geom.area;
            const Vec2 x = geom.point(rule.bary[q]);
            const Vec2 resid = div_stress(pl->rec, pl->mesh, t, x) +
                               eval_p1disc_vector(pl->data.f_p1, t, rule.bary[q]);
            sq += w * resid.squaredNorm();
          }
          const double rel = std::sqrt(sq) / pl->stress_scale;
          if (rel > worst) {
            worst = rel;
            worst_label = pl->label;
          }
        }
      }
      return std::make_pair(worst <= 1e-10,
                            "max residual " + fmt(worst) + " (" + worst_label + "), " +
                                std::to_string(suite.size()) + " solves");
    });

    // -----------------------------------------------------------------------
    // 3. Element-average symmetry of the corrected stress.
    // -----------------------------------------------------------------------
    run_check(3, "average symmetry: max_T |int_T (sigma_S_01 - sigma_S_10)| <= 1e-10 * scale", [&] {
      const QuadratureRule& rule = volume_rule();
      double worst = 0.0;
      std::string worst_label;
      for (const auto& pl : suite) {
        for (int t = 0; t < pl->mesh.n_triangles(); ++t) {
          const ElementGeometry geom = pl->mesh.geometry(t);
          double integral = 0.0;
          for (std::size_t q = 0; q < rule.bary.size(); ++q) {
            const double w = rule.weights[q] * 2.0 * geom.area;
            const Mat2 s = eval_stress(pl->sym, pl->mesh, t, geom.point(rule.bary[q]));
            integral += w * (s(0, 1) - s(1, 0));
          }
          const double rel = std::abs(integral) / pl->stress_scale;
          if (rel > worst) {
            worst = rel;
            worst_label = pl->label;
          }
        }
      }
      return std::make_pair(worst <= 1e-10,
                            "max |average| " + fmt(worst) + " (" + worst_label + ")");
    });

    // -----------------------------------------------------------------------
    // 4. Divergence-constrained conformity of the recovered displacement.
    // -----------------------------------------------------------------------
    run_check(4, "recovery: mean-div match 1e-10; continuity and Dirichlet zero 1e-12", [&] {
      const QuadratureRule& rule = volume_rule();
      double worst_div = 0.0, worst_jump = 0.0, worst_bc = 0.0;
      for (const auto& pl : suite) {
        const double u_scale = 1.0 + maxabs(pl->recovery.u_c.coeffs);
        for (int t = 0; t < pl->mesh.n_triangles(); ++t) {
          const ElementGeometry geom = pl->mesh.geometry(t);
          double integral = 0.0;
          for (std::size_t q = 0; q < rule.bary.size(); ++q) {
            const double w = rule.weights[q] * 2.0 * geom.area;
            integral += w * (trace2(grad_p3conf(pl->recovery.u_c, t, geom, rule.bary[q])) -
                             trace2(grad_broken_p2(pl->sol.u, t, geom, rule.bary[q])));
          }
          worst_div = std::max(worst_div, std::abs(integral) / u_scale);
        }
        // A cubic edge trace vanishing at four distinct points vanishes
        // identically, so four samples per edge decide both properties.
        const double samples[4] = {-0.9, -0.25, 0.4, 0.95};
        const double end_samples[4] = {-1.0, -0.4, 0.5, 1.0};
        for (int e = 0; e < pl->mesh.n_edges(); ++e) {
          const MeshEdge& edge = pl->mesh.edges[e];
          if (edge.interior()) {
            const ElementGeometry gm = pl->mesh.geometry(edge.tri_minus);
            const ElementGeometry gp = pl->mesh.geometry(edge.tri_plus);
            for (const double s : samples) {
              const Vec2 x = pl->mesh.edge_point(e, s);
              const Vec2 um = eval_p3conf(pl->recovery.u_c, edge.tri_minus, gm.barycentric(x));
              const Vec2 up = eval_p3conf(pl->recovery.u_c, edge.tri_plus, gp.barycentric(x));
              worst_jump = std::max(worst_jump, (um - up).norm() / u_scale);
            }
          } else if (edge.dirichlet()) {
            const ElementGeometry gm = pl->mesh.geometry(edge.tri_minus);
            for (const double s : end_samples) {
              const Vec2 x = pl->mesh.edge_point(e, s);
              const Vec2 u = eval_p3conf(pl->recovery.u_c, edge.tri_minus, gm.barycentric(x));
              worst_bc = std::max(worst_bc, u.norm() / u_scale);
            }
          }
        }
      }
      const bool ok = worst_div <= 1e-10 && worst_jump <= 1e-12 && worst_bc <= 1e-12;
      return std::make_pair(ok, "max mean-div " + fmt(worst_div) + ", max jump " +
                                    fmt(worst_jump) + ", max Dirichlet value " + fmt(worst_bc));
    });

    // -----------------------------------------------------------------------
    // 5. Discrete incompressibility identity.
    // -----------------------------------------------------------------------
    run_check(5, "div(u_h) = lambda_inv * p_h as elementwise linears (1e-10 relative)", [&] {
      const std::array<Vec3, 3> corners = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
      const QuadratureRule& rule = volume_rule();
      double worst_identity = 0.0, worst_ratio = 0.0;
      for (const auto& pl : suite) {
        const double li = pl->setup.lambda_inv;
        if (li > 0.0) {
          double scale = 1.0, worst = 0.0;
          for (int t = 0; t < pl->mesh.n_triangles(); ++t) {
            const ElementGeometry geom = pl->mesh.geometry(t);
            for (const Vec3& c : corners) {
              const double d = trace2(grad_broken_p2(pl->sol.u, t, geom, c));
              const double lp = li * eval_p1disc_scalar(pl->sol.p, t, c);
              scale = std::max({scale, std::abs(d), std::abs(lp)});
              worst = std::max(worst, std::abs(d - lp));
            }
          }
          worst_identity = std::max(worst_identity, worst / scale);
        } else {
          double div_sq = 0.0, grad_sq = 0.0;
          for (int t = 0; t < pl->mesh.n_triangles(); ++t) {
            const ElementGeometry geom = pl->mesh.geometry(t);
            for (std::size_t q = 0; q < rule.bary.size(); ++q) {
              const double w = rule.weights[q] * 2.0 * geom.area;
              const Mat2 g = grad_broken_p2(pl->sol.u, t, geom, rule.bary[q]);
              div_sq += w * trace2(g) * trace2(g);
              grad_sq += w * g.squaredNorm();
            }
          }
          worst_ratio = std::max(worst_ratio, std::sqrt(div_sq) / std::sqrt(grad_sq));
        }
      }
      const bool ok = worst_identity <= 1e-10 && worst_ratio <= 1e-10;
      return std::make_pair(ok, "max identity gap " + fmt(worst_identity) +
                                    ", max ||div u||/||grad u|| at lambda_inv=0 " +
                                    fmt(worst_ratio));
    });

    // -----------------------------------------------------------------------
    // 6. Estimator ordering invariant.
    // -----------------------------------------------------------------------
    run_check(6, "ordering: eta_S <= eta_R on every solve (1e-12 relative slack)", [&] {
      double worst_excess = -std::numeric_limits<double>::infinity();
      for (const auto& pl : suite) {
        const double denom = std::max(pl->report.eta_R, 1e-300);
        worst_excess = std::max(worst_excess, (pl->report.eta_S - pl->report.eta_R) / denom);
      }
      // compute_estimators() additionally enforces this on every run made by
      // the other checks; a violation anywhere would surface as an exception.
      return std::make_pair(worst_excess <= 1e-12,
                            "max (eta_S - eta_R)/eta_R = " + fmt(worst_excess));
    });
  }

  // -------------------------------------------------------------------------
  // 7. Reliability: bound >= energy error on uniform and adaptive runs.
  // -------------------------------------------------------------------------
  run_check(7, "reliability: bound >= energy error, uniform x4 and adaptive x10", [] {
    struct Config {
      std::string benchmark;
      std::optional<double> lambda;
      std::optional<double> lambda_inv;
    };
    std::vector<Config> configs;
    // The smooth family's exact pressure is lambda * div(u), so it is defined
    // for finite lambda only; the divergence-free family covers the
    // incompressible limit.
    for (const double lambda : {1.381, 49.0, 1e4}) {
      configs.push_back({"manufactured-smooth", lambda, {}});
      configs.push_back({"manufactured-divfree", lambda, {}});
    }
    configs.push_back({"manufactured-divfree", {}, 0.0});

    bool ok = true;
    double min_eff = std::numeric_limits<double>::infinity();
    int n_meshes = 0;
    for (const Config& c : configs) {
      for (const bool uniform : {true, false}) {
        RunConfig cfg;
        cfg.benchmark = c.benchmark;
        cfg.lambda = c.lambda;
        cfg.lambda_inv = c.lambda_inv;
        cfg.theta = uniform ? 1.0 : 0.5;
        cfg.steps = uniform ? 4 : 10;
        const ConvergenceRecord record = run_adaptive(cfg);
        for (const StepRecord& row : record.rows) {
          if (!row.energy_err) return std::make_pair(false, std::string("missing energy error"));
          ++n_meshes;
          if (*row.energy_err > 0.0) min_eff = std::min(min_eff, row.bound / *row.energy_err);
          ok = ok && row.bound >= *row.energy_err * (1.0 - 1e-9);
        }
      }
    }
    return std::make_pair(ok, "min effectivity " + fmt(min_eff) + " over " +
                                  std::to_string(n_meshes) +
                                  " meshes, lambda in {1.381, 49, 1e4, inf}");
  });

  // -------------------------------------------------------------------------
  // 8. Oracle equivalence on all meshes with at most four elements.
  // -------------------------------------------------------------------------
  run_check(8, "oracles: reconstruction 1e-10, sparse-vs-dense 1e-9, patches 1e-10", [] {
    struct Small {
      std::string label;
      Mesh mesh;
    };
    std::vector<Small> meshes;
    meshes.push_back({"tri1", single_triangle_mesh()});
    meshes.push_back({"tri2", unit_square_two_triangles()});
    meshes.push_back({"criss4", unit_square_criss(1)});
    meshes.push_back({"cook4", cook_quad_mesh()});

    double worst_rec = 0.0, worst_saddle = 0.0, worst_patch = 0.0;
    int n_patches = 0, n_saddles = 0;
    std::string notes;

    for (const Small& small : meshes) {
      const Mesh& mesh = small.mesh;
      const ElasticityProblem problem = generic_problem(mesh);
      const ProjectedData data = make_projected_data(problem);
      const ElasticityLayout layout = elasticity_layout(mesh);
      const SparseSystem system = assemble_elasticity(problem, data, layout);

      // (b) the displacement-pressure saddle: sparse LU vs dense full-pivot LU.
      {
        const Eigen::VectorXd xs = solve(system);
        const Eigen::MatrixXd dense = Eigen::MatrixXd(system.matrix());
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
        require(lu.isInvertible(), "dense elasticity oracle singular on " + small.label);
        const Eigen::VectorXd xd = lu.solve(system.effective_rhs());
        worst_saddle = std::max(worst_saddle, maxabs(xs - xd) / (1.0 + maxabs(xd)));
        ++n_saddles;
      }

      const DiscreteSolution sol = solve_elasticity(problem, data);
      const FeField sigma_h = broken_stress(sol, problem);
      EdgeTraceData traces = average_normal_traces(sigma_h, mesh, data.g);
      impose_equilibrated_means(traces, mesh, sol);
      const ReconstructedStress rec = reconstruct(sol, problem, data);

      // (a) reconstruction: stack every defining condition (both sides of
      // every edge moment, and the two interior equilibrium tests per element
      // row) into one global least-squares system over all coefficients.
      {
        const int n_dof = int(rec.field.coeffs.size());
        const int n_rows = 16 * mesh.n_triangles();
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_rows, n_dof);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n_rows);
        const QuadratureRule& erule = boundary_rule();
        const QuadratureRule& vrule = volume_rule();
        int row_index = 0;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
          const Rt1Cell cell = build_rt1_cell(mesh, t);
          const ElementGeometry geom = mesh.geometry(t);
          for (int r = 0; r < 2; ++r) {
            for (int k = 0; k < 3; ++k) {
              const int e = mesh.tri_edges[t][k];
              const MeshEdge& edge = mesh.edges[e];
              for (int m = 0; m < 2; ++m) {
                for (std::size_t q = 0; q < erule.s.size(); ++q) {
                  const double s = erule.s[q];
                  const double w = erule.weights[q] * 0.5 * edge.length;
                  const Vec2 x = mesh.edge_point(e, s);
                  const double sm = (m == 0) ? 1.0 : s;
                  for (int j = 0; j < 8; ++j)
                    a(row_index, rt1_global_dof(mesh, t, r, j)) +=
                        w * sm * cell.basis(j, x).dot(edge.normal);
                }
                b(row_index) = traces.moments[e][m](r);
                ++row_index;
              }
            }
            for (int i = 0; i < 2; ++i) {
              for (std::size_t q = 0; q < vrule.bary.size(); ++q) {
                const double w = vrule.weights[q] * 2.0 * geom.area;
                const Vec2 x = geom.point(vrule.bary[q]);
                const double qi = vrule.bary[q](1 + i) - 1.0 / 3.0;
                for (int j = 0; j < 8; ++j)
                  a(row_index, rt1_global_dof(mesh, t, r, j)) +=
                      w * qi * cell.basis_div(j, x);
                b(row_index) -= w * qi * eval_p1disc_vector(data.f_p1, t, vrule.bary[q])(r);
              }
              ++row_index;
            }
          }
        }
        const Eigen::VectorXd x = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(a).solve(b);
        worst_rec = std::max(worst_rec,
                             maxabs(x - rec.field.coeffs) / (1.0 + maxabs(x)));
      }

      // (b) continued: the symmetry-correction saddle on the same meshes.
      {
        const SparseSystem kkt = assemble_symmetry_kkt(rec, mesh);
        const Eigen::MatrixXd dense = Eigen::MatrixXd(kkt.matrix());
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
        if (lu.isInvertible()) {
          const Eigen::VectorXd xs = solve(kkt);
          const Eigen::VectorXd xd = lu.solve(kkt.effective_rhs());
          worst_saddle = std::max(worst_saddle, maxabs(xs - xd) / (1.0 + maxabs(xd)));
          ++n_saddles;
        } else {
          notes += " " + small.label + ": symmetry saddle singular, skipped;";
        }
      }

      // (c) every recovery patch vs a basis-probing dense oracle.
      bool partition_ok = true;
      PartitionOfUnity partition;
      try {
        partition = build_partition(mesh);
      } catch (const std::exception&) {
        partition_ok = false;
        notes += " " + small.label + ": no admissible partition, patches skipped;";
      }
      if (partition_ok) {
        const QuadratureRule& rule = volume_rule();
        for (int z = 0; z < mesh.n_vertices(); ++z) {
          if (partition.hats[z].empty()) continue;
          const PatchSolution patch = solve_patch(z, sol.u, partition, mesh);
          const int n_free = int(patch.scalar_nodes.size());
          const int n_mult = int(patch.elements.size());
          const int dim = 2 * n_free + n_mult;
          Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
          Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
          std::vector<FeField> basis;
          for (int i = 0; i < n_free; ++i)
            for (int c = 0; c < 2; ++c) {
              FeField bf(SpaceDescriptor::create(SpaceKind::p3conf_vector, mesh));
              bf.coeffs[p3_dof(patch.scalar_nodes[i], c)] = 1.0;
              basis.push_back(std::move(bf));
            }
          for (int slot = 0; slot < n_mult; ++slot) {
            const int t = patch.elements[slot];
            const ElementGeometry geom = mesh.geometry(t);
            const Vec2 grad_phi = phi_gradient(partition, mesh, z, t, geom);
            for (std::size_t q = 0; q < rule.bary.size(); ++q) {
              const double w = rule.weights[q] * 2.0 * geom.area;
              const double phi = phi_value(partition, mesh, z, t, rule.bary[q]);
              const Vec2 u = eval_broken_p2(sol.u, t, rule.bary[q]);
              const Mat2 grad_u = grad_broken_p2(sol.u, t, geom, rule.bary[q]);
              const Mat2 grad_uz = phi * grad_u + u * grad_phi.transpose();
              std::vector<Mat2> grads(basis.size());
              for (std::size_t g = 0; g < basis.size(); ++g)
                grads[g] = grad_p3conf(basis[g], t, geom, rule.bary[q]);
              for (std::size_t ia = 0; ia < basis.size(); ++ia) {
                for (std::size_t ib = 0; ib < basis.size(); ++ib)
                  kkt(int(ia), int(ib)) += w * (grads[ia].cwiseProduct(grads[ib])).sum();
                rhs(int(ia)) += w * (grads[ia].cwiseProduct(grad_uz)).sum();
                kkt(2 * n_free + slot, int(ia)) += w * trace2(grads[ia]);
                kkt(int(ia), 2 * n_free + slot) += w * trace2(grads[ia]);
              }
              rhs(2 * n_free + slot) += w * (phi * trace2(grad_u) + u.dot(grad_phi));
            }
          }
          if (patch.pinned_element >= 0) {
            const int row = 2 * n_free;
            kkt.row(row).setZero();
            kkt.col(row).setZero();
            kkt(row, row) = 1.0;
            rhs(row) = 0.0;
          }
          const Eigen::VectorXd x = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(kkt).solve(rhs);
          const double scale = 1.0 + maxabs(x);
          worst_patch = std::max(worst_patch,
                                 maxabs(patch.coeffs - x.head(2 * n_free)) / scale);
          worst_patch = std::max(worst_patch,
                                 maxabs(patch.multipliers + x.tail(n_mult)) / scale);
          ++n_patches;
        }
      }
    }
    const bool ok = worst_rec <= 1e-10 && worst_saddle <= 1e-9 && worst_patch <= 1e-10;
    std::string detail = "reconstruction " + fmt(worst_rec) + ", saddles " + fmt(worst_saddle) +
                         " (" + std::to_string(n_saddles) + "), patches " + fmt(worst_patch) +
                         " (" + std::to_string(n_patches) + ")";
    if (!notes.empty()) detail += ";" + notes;
    return std::make_pair(ok, detail);
  });

  // -------------------------------------------------------------------------
  // 9. Energy-error convergence order on the smooth benchmark.
  // -------------------------------------------------------------------------
  run_check(9, "smooth benchmark: energy-error order >= 1.8 over 4 uniform refinements", [] {
    RunConfig cfg;
    cfg.benchmark = "manufactured-smooth";
    cfg.lambda = 49.0;
    cfg.theta = 1.0;  // uniform refinement
    cfg.steps = 5;    // levels 0..4, i.e. four refinements
    const ConvergenceRecord record = run_adaptive(cfg);
    if (record.rows.size() != 5) return std::make_pair(false, std::string("unexpected step count"));
    // Least-squares order: err ~ h^p with h ~ n_elem^(-1/2).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::ostringstream pairs;
    for (std::size_t i = 0; i < record.rows.size(); ++i) {
      if (!record.rows[i].energy_err) return std::make_pair(false, std::string("missing energy error"));
      const double x = std::log(double(record.rows[i].n_elem));
      const double y = std::log(*record.rows[i].energy_err);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      if (i > 0)
        pairs << (i > 1 ? ", " : "")
              << fmt(std::log2(*record.rows[i - 1].energy_err / *record.rows[i].energy_err), 3);
    }
    const double n = double(record.rows.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double order = -2.0 * slope;
    return std::make_pair(order >= 1.8, "fitted order " + fmt(order) + " (per-step: " +
                                            pairs.str() + "), lambda = 49");
  });

  // -------------------------------------------------------------------------
  // 10. Robustness of the estimators in the incompressible limit.
  // -------------------------------------------------------------------------
  run_check(10, "divfree benchmark: eta_R/C/S each change < 5% between lambda=49 and inf", [] {
    Mesh mesh = manufactured_divfree_setup(0.0).initial_mesh;
    double worst = 0.0;
    std::ostringstream per_level;
    for (int level = 0; level < 3; ++level) {
      if (level > 0) mesh = refine_uniform(mesh);
      std::array<EstimatorReport, 2> reports;
      const std::array<double, 2> lambda_inv = {1.0 / 49.0, 0.0};
      for (int i = 0; i < 2; ++i) {
        const BenchmarkSetup setup = manufactured_divfree_setup(lambda_inv[i]);
        const ElasticityProblem problem = setup.problem_on(mesh);
        const ProjectedData data = make_projected_data(problem);
        const DiscreteSolution sol = solve_elasticity(problem, data);
        const ReconstructedStress rec = reconstruct(sol, problem, data);
        const SymmetrizedStress sym = apply_symmetry_correction(rec, mesh);
        const ConformingRecovery recovery = recover_conforming(sol.u, mesh);
        const KornConstants korn = korn_constants(mesh);
        reports[i] = compute_estimators(sol, sym, recovery.u_c, problem, korn);
      }
      const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(a, b); };
      const double level_worst = std::max({rel(reports[0].eta_R, reports[1].eta_R),
                                           rel(reports[0].eta_C, reports[1].eta_C),
                                           rel(reports[0].eta_S, reports[1].eta_S)});
      worst = std::max(worst, level_worst);
      per_level << (level > 0 ? ", " : "") << "L" << level << ": " << fmt(100.0 * level_worst)
                << "%";
    }
    return std::make_pair(worst < 0.05, "max change " + fmt(100.0 * worst) + "% (" +
                                            per_level.str() + ") on identical meshes");
  });

  std::cout << (g_failures == 0 ? "all criteria passed"
                                : std::to_string(g_failures) + " criteria failed")
            << "\n";
  return g_failures;
}
