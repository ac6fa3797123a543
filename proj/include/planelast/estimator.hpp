// Error estimation: compliance-weighted norms, per-element Korn constants,
// the three estimator terms, the guaranteed reliability bound, data
// oscillation, and energy errors against reference solutions.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include <planelast/elasticity.hpp>
#include <planelast/recovery.hpp>
#include <planelast/symmetrize.hpp>

namespace planelast {

// Pointwise density of the compliance norm:
// ||tau||_A^2 = (1/2mu)||dev tau||^2 + (1/(4(mu+lambda)))||tr tau||^2, written
// with lambda_inv = 1/lambda so the incompressible limit lambda_inv = 0 is
// exact (the trace weight vanishes).
inline double a_norm_density(const Mat2& tau, double mu, double lambda_inv) {
  const double tr = trace2(tau);
  const Mat2 dev = tau - 0.5 * tr * Mat2::Identity();
  return frobenius2(dev) / (2.0 * mu) + lambda_inv / (4.0 * (1.0 + mu * lambda_inv)) * tr * tr;
}

using ElementTensorField = std::function<Mat2(int t, const ElementGeometry& geom, const Vec3& bary)>;

inline double a_norm(const ElementTensorField& tau, const Mesh& mesh, double mu, double lambda_inv,
                     const std::vector<int>* region = nullptr) {
  const QuadratureRule& rule = volume_rule();
  double sq = 0.0;
  const auto accumulate = [&](int t) {
    const ElementGeometry geom = mesh.geometry(t);
    for (std::size_t q = 0; q < rule.bary.size(); ++q)
      sq += rule.weights[q] * 2.0 * geom.area *
            a_norm_density(tau(t, geom, rule.bary[q]), mu, lambda_inv);
  };
  if (region)
    for (int t : *region) accumulate(t);
  else
    for (int t = 0; t < mesh.n_triangles(); ++t) accumulate(t);
  return std::sqrt(sq);
}

namespace detail {

// Rayleigh maximum of ||grad v||^2 / ||eps(v)||^2 over vector polynomials of
// degree <= k whose gradient has zero moment against the rotation J (the
// minimizing representative modulo rigid modes), computed as a dense
// generalized eigenproblem in scaled coordinates.  Constant monomials are
// omitted: they span exactly the translations, so the strain Gram restricted
// to the constrained subspace is positive definite.
inline double korn_quotient(const std::array<Vec2, 3>& pts, int degree) {
  require(degree >= 1 && degree <= 6, "korn_quotient: degree must be between 1 and 6");
  std::vector<std::pair<int, int>> mono;
  for (int total = 1; total <= degree; ++total)
    for (int a = total; a >= 0; --a) mono.emplace_back(a, total - a);
  const int m = int(mono.size());
  const int n = 2 * m;

  const Vec2 centroid = (pts[0] + pts[1] + pts[2]) / 3.0;
  const double h = std::max({(pts[1] - pts[0]).norm(), (pts[2] - pts[1]).norm(),
                             (pts[0] - pts[2]).norm()});
  const double area =
      0.5 * std::abs((pts[1] - pts[0]).x() * (pts[2] - pts[0]).y() -
                     (pts[1] - pts[0]).y() * (pts[2] - pts[0]).x());
  require(area > 0.0, "korn_quotient: degenerate triangle");

  Eigen::MatrixXd grad_gram = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd strain_gram = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rotation_moment = Eigen::VectorXd::Zero(n);
  const QuadratureRule rule = triangle_rule(std::max(1, 2 * degree - 2));
  std::vector<Vec2> g(m);
  for (std::size_t q = 0; q < rule.bary.size(); ++q) {
    const double w = rule.weights[q] * 2.0 * area;
    const Vec2 x = rule.bary[q](0) * pts[0] + rule.bary[q](1) * pts[1] + rule.bary[q](2) * pts[2];
    const Vec2 xh = (x - centroid) / h;
    for (int s = 0; s < m; ++s) {
      const auto [a, b] = mono[s];
      const double dx = a == 0 ? 0.0 : a * std::pow(xh.x(), a - 1) * std::pow(xh.y(), b);
      const double dy = b == 0 ? 0.0 : b * std::pow(xh.x(), a) * std::pow(xh.y(), b - 1);
      g[s] = Vec2(dx, dy) / h;
    }
    for (int s1 = 0; s1 < m; ++s1)
      for (int c1 = 0; c1 < 2; ++c1) {
        const int row = 2 * s1 + c1;
        // grad(v) for v = m e_c has row c equal to grad m; (grad v):J moment.
        rotation_moment(row) += w * (c1 == 0 ? g[s1](1) : -g[s1](0));
        for (int s2 = 0; s2 < m; ++s2)
          for (int c2 = 0; c2 < 2; ++c2) {
            const int col = 2 * s2 + c2;
            const double full = (c1 == c2) ? g[s1].dot(g[s2]) : 0.0;
            const double eps = 0.5 * (full + g[s1](c2) * g[s2](c1));
            grad_gram(row, col) += w * full;
            strain_gram(row, col) += w * eps;
          }
      }
  }

  // Restrict to the zero-rotation-moment subspace (this removes the pure
  // rotation, the only strain-free field left in the span).
  const Eigen::MatrixXd null =
      Eigen::FullPivLU<Eigen::MatrixXd>(rotation_moment.transpose()).kernel();
  const Eigen::MatrixXd a_r = null.transpose() * grad_gram * null;
  const Eigen::MatrixXd b_r = null.transpose() * strain_gram * null;
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> pencil(a_r, b_r);
  require(pencil.info() == Eigen::Success, "korn_quotient: generalized eigensolve failed");
  return pencil.eigenvalues().maxCoeff();
}

}  // namespace detail

struct KornConstants {
  std::vector<double> per_element;
  double global = 1.0;
  int degree = 6;
  double safety = 1.1;
};

inline double korn_constant(const Mesh& mesh, int t, int degree = 6, double safety = 1.1) {
  const ElementGeometry geom = mesh.geometry(t);
  const double value = std::sqrt(detail::korn_quotient(geom.p, degree)) * safety;
  require(value >= 1.0, "korn_constant: computed value below the rigid-mode lower bound");
  return value;
}

// Korn constants are similarity invariants, so elements are looked up by
// their sorted side-length ratios.
inline KornConstants korn_constants(const Mesh& mesh, int degree = 6, double safety = 1.1) {
  KornConstants out;
  out.degree = degree;
  out.safety = safety;
  out.per_element.resize(mesh.n_triangles());
  std::map<std::pair<long long, long long>, double> cache;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    std::array<double, 3> len = {(geom.p[1] - geom.p[0]).norm(), (geom.p[2] - geom.p[1]).norm(),
                                 (geom.p[0] - geom.p[2]).norm()};
    std::sort(len.begin(), len.end());
    const auto key = std::make_pair(std::llround(len[0] / len[2] * 1e12),
                                    std::llround(len[1] / len[2] * 1e12));
    const auto hit = cache.find(key);
    if (hit != cache.end()) {
      out.per_element[t] = hit->second;
    } else {
      out.per_element[t] = korn_constant(mesh, t, degree, safety);
      cache.emplace(key, out.per_element[t]);
    }
  }
  out.global = 1.0;
  for (double v : out.per_element) out.global = std::max(out.global, v);
  return out;
}

// User-supplied constant (e.g. from sharper external formulas).
inline KornConstants korn_constants_fixed(const Mesh& mesh, double value) {
  require(value >= 1.0, "korn_constants_fixed: constant must be at least 1");
  KornConstants out;
  out.degree = 0;
  out.safety = 1.0;
  out.per_element.assign(mesh.n_triangles(), value);
  out.global = value;
  return out;
}

struct EstimatorReport {
  std::vector<double> eta_R_T, eta_C_T, eta_S_T;  // per-element terms
  std::vector<double> eta_T;                      // marking indicator
  double eta_R = 0.0, eta_C = 0.0, eta_S = 0.0;
  double korn_global = 1.0;
  double bound = 0.0;  // guaranteed reliability bound at delta = 1/4
};

// The delta-parameterized family behind the bound; delta = 1/4 reproduces
// report.bound.  Read-only diagnostic.
inline double bound_for_delta(const EstimatorReport& r, double delta) {
  require(delta > 0.0 && delta < 0.5, "bound_for_delta: delta must lie in (0, 1/2)");
  const double c2 = r.korn_global * r.korn_global;
  const double sq = (r.eta_R * r.eta_R + (c2 + 2.0 * delta) * r.eta_C * r.eta_C +
                     (c2 / delta) * r.eta_S * r.eta_S) /
                    (1.0 - 2.0 * delta);
  return std::sqrt(sq);
}

inline EstimatorReport compute_estimators(const DiscreteSolution& sol,
                                          const SymmetrizedStress& sym, const FeField& u_c,
                                          const ElasticityProblem& problem,
                                          const KornConstants& korn) {
  const Mesh& mesh = *problem.mesh;
  require(u_c.space.mesh == problem.mesh && sol.u.space.mesh == problem.mesh,
          "compute_estimators: inputs live on different meshes");
  require(int(sym.cells.size()) == mesh.n_triangles() &&
              int(korn.per_element.size()) == mesh.n_triangles(),
          "compute_estimators: inputs live on different meshes");
  const double mu = problem.mu;
  const double lambda_inv = problem.lambda_inv;

  EstimatorReport report;
  report.korn_global = korn.global;
  report.eta_R_T.assign(mesh.n_triangles(), 0.0);
  report.eta_C_T.assign(mesh.n_triangles(), 0.0);
  report.eta_S_T.assign(mesh.n_triangles(), 0.0);
  report.eta_T.assign(mesh.n_triangles(), 0.0);

  const QuadratureRule& rule = volume_rule();
  double sum_R = 0.0, sum_C = 0.0, sum_S = 0.0, sum_marking = 0.0;
  const double c2 = korn.global * korn.global;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    double r_sq = 0.0, c_sq = 0.0, s_sq = 0.0;
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geom.area;
      const Vec2 x = geom.point(rule.bary[q]);
      const Mat2 sigma_s = eval_stress(sym, mesh, t, x);
      const Mat2 sigma_h =
          2.0 * mu * symmetric_part(grad_broken_p2(sol.u, t, geom, rule.bary[q])) +
          eval_p1disc_scalar(sol.p, t, rule.bary[q]) * Mat2::Identity();
      const Mat2 diff = sigma_s - sigma_h;
      r_sq += w * a_norm_density(diff, mu, lambda_inv);
      const Mat2 eps_gap = symmetric_part(grad_p3conf(u_c, t, geom, rule.bary[q])) -
                           symmetric_part(grad_broken_p2(sol.u, t, geom, rule.bary[q]));
      c_sq += w * 2.0 * mu * frobenius2(eps_gap);
      // as sigma_h = 0 exactly (sigma_h is assembled symmetric), so the
      // antisymmetric part of the difference equals that of sigma_s itself;
      // using the difference keeps the eta_S <= eta_R chain exact pointwise.
      const double as = 0.5 * (diff(0, 1) - diff(1, 0));
      s_sq += w * 2.0 * as * as / (2.0 * mu);
    }
    report.eta_R_T[t] = std::sqrt(r_sq);
    report.eta_C_T[t] = std::sqrt(c_sq);
    report.eta_S_T[t] = std::sqrt(s_sq);
    const double marking_sq = 2.0 * r_sq + (2.0 * c2 + 1.0) * c_sq + 8.0 * c2 * s_sq;
    report.eta_T[t] = std::sqrt(marking_sq);
    sum_R += r_sq;
    sum_C += c_sq;
    sum_S += s_sq;
    sum_marking += marking_sq;
  }
  report.eta_R = std::sqrt(sum_R);
  report.eta_C = std::sqrt(sum_C);
  report.eta_S = std::sqrt(sum_S);
  report.bound = std::sqrt(sum_marking);
  // The antisymmetric part of the broken stress vanishes, so the
  // antisymmetric term can never exceed the reconstruction distance.
  require(report.eta_S <= report.eta_R * (1.0 + 1e-12) + 1e-300,
          "compute_estimators: antisymmetry term exceeds the reconstruction term");
  return report;
}

struct OscillationReport {
  std::vector<double> element_sq;  // h_T^2 ||f - P_h f||_T^2
  std::vector<double> edge_sq;     // h_E ||g - P_h g||_E^2 on Neumann edges
  double total = 0.0;
};

inline OscillationReport oscillation(const ElasticityProblem& problem, const ProjectedData& data) {
  const Mesh& mesh = *problem.mesh;
  OscillationReport out;
  out.element_sq.assign(mesh.n_triangles(), 0.0);
  out.edge_sq.assign(mesh.n_edges(), 0.0);
  const QuadratureRule& vrule = volume_rule();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    double sq = 0.0;
    for (std::size_t q = 0; q < vrule.bary.size(); ++q) {
      const double w = vrule.weights[q] * 2.0 * geom.area;
      const Vec2 gap = problem.body_force(geom.point(vrule.bary[q])) -
                       eval_p1disc_vector(data.f_p1, t, vrule.bary[q]);
      sq += w * gap.squaredNorm();
    }
    out.element_sq[t] = geom.diameter * geom.diameter * sq;
    out.total += out.element_sq[t];
  }
  const QuadratureRule& erule = boundary_rule();
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const MeshEdge& edge = mesh.edges[e];
    if (!edge.neumann()) continue;
    double sq = 0.0;
    for (std::size_t q = 0; q < erule.s.size(); ++q) {
      const double w = erule.weights[q] * 0.5 * edge.length;
      const Vec2 gap = problem.traction(mesh.edge_point(e, erule.s[q]), edge.normal) -
                       data.g.value(e, erule.s[q]);
      sq += w * gap.squaredNorm();
    }
    out.edge_sq[e] = edge.length * sq;
    out.total += out.edge_sq[e];
  }
  out.total = std::sqrt(out.total);
  return out;
}

// Energy distance 2mu||eps(u_ref - u_h)||_h^2 + lambda_inv||p_ref - p_h||^2
// against a reference discrete solution on the same mesh.
inline double energy_error(const DiscreteSolution& sol, const DiscreteSolution& ref,
                           const ElasticityProblem& problem) {
  require(sol.u.space.mesh == ref.u.space.mesh && sol.u.space.mesh == problem.mesh,
          "energy_error: solutions live on different meshes");
  const Mesh& mesh = *problem.mesh;
  const QuadratureRule& rule = volume_rule();
  double sq = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geom.area;
      const Mat2 eps_err = symmetric_part(grad_broken_p2(ref.u, t, geom, rule.bary[q])) -
                           symmetric_part(grad_broken_p2(sol.u, t, geom, rule.bary[q]));
      const double p_err =
          eval_p1disc_scalar(ref.p, t, rule.bary[q]) - eval_p1disc_scalar(sol.p, t, rule.bary[q]);
      sq += w * (2.0 * problem.mu * frobenius2(eps_err) +
                 problem.lambda_inv * p_err * p_err);
    }
  }
  return std::sqrt(sq);
}

// Same distance against a reference given by exact-solution callbacks.
inline double energy_error(const DiscreteSolution& sol, const ElasticityProblem& problem,
                           const std::function<Mat2(const Vec2&)>& grad_ref,
                           const std::function<double(const Vec2&)>& p_ref) {
  const Mesh& mesh = *problem.mesh;
  const QuadratureRule& rule = volume_rule();
  double sq = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geom.area;
      const Vec2 x = geom.point(rule.bary[q]);
      const Mat2 eps_err = symmetric_part(grad_ref(x)) -
                           symmetric_part(grad_broken_p2(sol.u, t, geom, rule.bary[q]));
      const double p_err = p_ref(x) - eval_p1disc_scalar(sol.p, t, rule.bary[q]);
      sq += w * (2.0 * problem.mu * frobenius2(eps_err) +
                 problem.lambda_inv * p_err * p_err);
    }
  }
  return std::sqrt(sq);
}

}  // namespace planelast
