// Displacement-pressure saddle problem for planar linear elasticity on the
// nonconforming quadratic element.  The nonconforming space is realized as
// fully discontinuous P2 with Lagrange-multiplier rows enforcing continuity
// of the two lowest trace moments per component across interior edges and
// their vanishing on Dirichlet edges.  Right-hand sides always use the
// projected data (element P1 body force, edge P1 traction).
#pragma once

#include <planelast/projection.hpp>
#include <planelast/sparse.hpp>

namespace planelast {

struct ElasticityProblem {
  const Mesh* mesh = nullptr;
  double mu = 1.0;
  double lambda_inv = 0.0;  // reciprocal of the second Lame parameter; 0 = incompressible limit
  VolumeFunction body_force;
  BoundaryFunction traction;
};

struct ElasticityLayout {
  int n_u = 0;
  int n_p = 0;
  int n_constrained_edges = 0;
  std::vector<int> edge_slot;  // edge id -> multiplier slot, -1 for Neumann edges

  int u_offset() const { return 0; }
  int p_offset() const { return n_u; }
  int m_offset() const { return n_u + n_p; }
  int dim() const { return n_u + n_p + 4 * n_constrained_edges; }
  int multiplier_dof(int slot, int component, int moment) const {
    return m_offset() + 4 * slot + 2 * component + moment;
  }
};

inline ElasticityLayout elasticity_layout(const Mesh& mesh) {
  ElasticityLayout layout;
  layout.n_u = 12 * mesh.n_triangles();
  layout.n_p = 3 * mesh.n_triangles();
  layout.edge_slot.assign(mesh.n_edges(), -1);
  for (int e = 0; e < mesh.n_edges(); ++e)
    if (mesh.edges[e].interior() || mesh.edges[e].dirichlet())
      layout.edge_slot[e] = layout.n_constrained_edges++;
  return layout;
}

struct ProjectedData {
  FeField f_p1;  // element-wise P1 body force
  NeumannTraceData g;
};

inline ProjectedData make_projected_data(const ElasticityProblem& problem) {
  ProjectedData data;
  data.f_p1 = project_volume(problem.body_force, *problem.mesh, VolumeTarget::p1);
  data.g = project_neumann(problem.traction, *problem.mesh);
  return data;
}

inline SparseSystem assemble_elasticity(const ElasticityProblem& problem,
                                        const ProjectedData& data,
                                        const ElasticityLayout& layout) {
  const Mesh& mesh = *problem.mesh;
  SparseSystem system(layout.dim());
  const QuadratureRule& vrule = volume_rule();
  const QuadratureRule& erule = boundary_rule();

  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    Eigen::Matrix<double, 12, 12> a = Eigen::Matrix<double, 12, 12>::Zero();
    Eigen::Matrix<double, 3, 12> b = Eigen::Matrix<double, 3, 12>::Zero();
    Eigen::Matrix3d mass = Eigen::Matrix3d::Zero();
    Eigen::Matrix<double, 12, 1> load = Eigen::Matrix<double, 12, 1>::Zero();

    for (std::size_t q = 0; q < vrule.bary.size(); ++q) {
      const Vec3& l = vrule.bary[q];
      const double w = vrule.weights[q] * 2.0 * geom.area;
      std::array<Vec2, 6> grads;
      std::array<double, 6> vals;
      for (int n = 0; n < 6; ++n) {
        const ShapeValue s = p2_shape(l, n);
        vals[n] = s.value;
        grads[n] = physical_gradient(s, geom.grad_lambda);
      }
      // Strain of local dof (c,n): rows are components, only row c non-zero.
      std::array<Mat2, 12> strain;
      for (int c = 0; c < 2; ++c)
        for (int n = 0; n < 6; ++n) {
          Mat2 g = Mat2::Zero();
          g.row(c) = grads[n].transpose();
          strain[6 * c + n] = symmetric_part(g);
        }
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j)
          a(i, j) += w * 2.0 * problem.mu * strain[i].cwiseProduct(strain[j]).sum();
      for (int m = 0; m < 3; ++m)
        for (int c = 0; c < 2; ++c)
          for (int n = 0; n < 6; ++n) b(m, 6 * c + n) += w * l[m] * grads[n][c];
      for (int m = 0; m < 3; ++m)
        for (int m2 = 0; m2 < 3; ++m2) mass(m, m2) += w * l[m] * l[m2];
      const Vec2 fv = eval_p1disc_vector(data.f_p1, t, l);
      for (int c = 0; c < 2; ++c)
        for (int n = 0; n < 6; ++n) load[6 * c + n] += w * fv[c] * vals[n];
    }

    auto u_dof = [&](int local) { return broken_p2_dof(t, local / 6, local % 6); };
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j)
        if (a(i, j) != 0.0) system.add(u_dof(i), u_dof(j), a(i, j));
      if (load[i] != 0.0) system.add_rhs(u_dof(i), load[i]);
    }
    for (int m = 0; m < 3; ++m) {
      const int pd = layout.p_offset() + p1disc_scalar_dof(t, m);
      for (int j = 0; j < 12; ++j)
        if (b(m, j) != 0.0) {
          system.add(pd, u_dof(j), b(m, j));
          system.add(u_dof(j), pd, b(m, j));
        }
      if (problem.lambda_inv != 0.0)
        for (int m2 = 0; m2 < 3; ++m2)
          system.add(pd, layout.p_offset() + p1disc_scalar_dof(t, m2),
                     -problem.lambda_inv * mass(m, m2));
    }
  }

  // Neumann loads and constraint rows.
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const MeshEdge& edge = mesh.edges[e];
    if (edge.neumann()) {
      const int t = edge.tri_minus;
      const ElementGeometry geom = mesh.geometry(t);
      for (std::size_t q = 0; q < erule.s.size(); ++q) {
        const double s = erule.s[q];
        const double w = erule.weights[q] * 0.5 * edge.length;
        const Vec2 x = mesh.edge_point(e, s);
        const Vec3 l = geom.barycentric(x);
        const Vec2 gv = data.g.value(e, s);
        for (int n = 0; n < 6; ++n) {
          const double v = p2_shape(l, n).value;
          for (int c = 0; c < 2; ++c)
            system.add_rhs(broken_p2_dof(t, c, n), w * gv[c] * v);
        }
      }
      continue;
    }
    const int slot = layout.edge_slot[e];
    const double row_scale = 1.0 / edge.length;  // keeps constraint entries O(1)
    const int sides = edge.interior() ? 2 : 1;
    for (int side = 0; side < sides; ++side) {
      const int t = side == 0 ? edge.tri_minus : edge.tri_plus;
      const double jump_sign = side == 0 ? 1.0 : -1.0;
      const ElementGeometry geom = mesh.geometry(t);
      for (std::size_t q = 0; q < erule.s.size(); ++q) {
        const double s = erule.s[q];
        const double w = erule.weights[q] * 0.5 * edge.length * row_scale;
        const Vec3 l = geom.barycentric(mesh.edge_point(e, s));
        for (int n = 0; n < 6; ++n) {
          const double v = p2_shape(l, n).value;
          if (v == 0.0) continue;
          for (int c = 0; c < 2; ++c) {
            for (int moment = 0; moment < 2; ++moment) {
              const double entry = jump_sign * w * v * (moment == 0 ? 1.0 : s);
              const int row = layout.multiplier_dof(slot, c, moment);
              const int col = broken_p2_dof(t, c, n);
              system.add(row, col, entry);
              system.add(col, row, entry);
            }
          }
        }
      }
    }
  }
  return system;
}

inline SparseSystem assemble_elasticity(const ElasticityProblem& problem) {
  return assemble_elasticity(problem, make_projected_data(problem),
                             elasticity_layout(*problem.mesh));
}

struct DiscreteSolution {
  FeField u;  // broken P2 vector displacement
  FeField p;  // discontinuous P1 pressure
  Eigen::VectorXd multipliers;
  ElasticityLayout layout;
};

inline DiscreteSolution solve_elasticity(const ElasticityProblem& problem,
                                         const ProjectedData& data) {
  const Mesh& mesh = *problem.mesh;
  const ElasticityLayout layout = elasticity_layout(mesh);
  const SparseSystem system = assemble_elasticity(problem, data, layout);
  const Eigen::VectorXd x = solve(system);

  DiscreteSolution sol;
  sol.layout = layout;
  sol.u = FeField(SpaceDescriptor::create(SpaceKind::broken_p2_vector, mesh));
  sol.p = FeField(SpaceDescriptor::create(SpaceKind::p1disc_scalar, mesh));
  sol.u.coeffs = x.segment(layout.u_offset(), layout.n_u);
  sol.p.coeffs = x.segment(layout.p_offset(), layout.n_p);
  sol.multipliers = x.segment(layout.m_offset(), 4 * layout.n_constrained_edges);
  return sol;
}

inline DiscreteSolution solve_elasticity(const ElasticityProblem& problem) {
  return solve_elasticity(problem, make_projected_data(problem));
}

// Broken stress sigma_h = 2 mu eps(u_h) + p_h I, exactly P1 per element.
inline FeField broken_stress(const DiscreteSolution& sol, const ElasticityProblem& problem) {
  const Mesh& mesh = *problem.mesh;
  FeField sigma(SpaceDescriptor::create(SpaceKind::p1disc_tensor, mesh));
  const std::array<Vec3, 3> corners = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    for (int n = 0; n < 3; ++n) {
      const Mat2 eps = symmetric_part(grad_broken_p2(sol.u, t, geom, corners[n]));
      const double p = eval_p1disc_scalar(sol.p, t, corners[n]);
      const Mat2 s = 2.0 * problem.mu * eps + p * Mat2::Identity();
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) sigma.coeffs[p1disc_tensor_dof(t, i, j, n)] = s(i, j);
    }
  }
  return sigma;
}

}  // namespace planelast
