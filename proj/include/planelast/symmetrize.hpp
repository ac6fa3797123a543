// Element-average symmetrization of the reconstructed stress.
//
// A divergence-free correction grad_perp(chi) with chi in the conforming P2
// space vanishing on the Neumann boundary is added to sigma_R so that the
// antisymmetric part of the sum has zero mean on every element.  The
// correction has zero normal trace on the Neumann boundary (chi vanishes
// there, so its tangential derivative does) and zero row-wise divergence,
// hence equilibration and the traction data are untouched.
//
// Convention: grad_perp(psi) = (d2 psi, -d1 psi) applied row-wise, so that
// (as(grad_perp chi), J)_T = -(div chi, 1)_T and the constraint reads
// (div chi, 1)_T = (as sigma_R, J)_T.
#pragma once

#include <vector>

#include <planelast/sparse.hpp>
#include <planelast/stress_reconstruction.hpp>

namespace planelast {

// Integral of the antisymmetric pairing (as tau, J)_T = int_T (tau_12 - tau_21)
// for the RT1 stress on element t (componentwise quadratic integrand).
inline double antisymmetric_average(const ReconstructedStress& s, const Mesh& mesh, int t) {
  const QuadratureRule& rule = volume_rule();
  const ElementGeometry geom = mesh.geometry(t);
  double value = 0.0;
  for (std::size_t q = 0; q < rule.bary.size(); ++q) {
    const double w = rule.weights[q] * 2.0 * geom.area;
    const Mat2 tau = eval_stress(s, mesh, t, geom.point(rule.bary[q]));
    value += w * (tau(0, 1) - tau(1, 0));
  }
  return value;
}

// KKT system for min ||grad chi||^2 subject to (div chi, 1)_T = (as sigma_R, J)_T:
// unknowns are the free P2 scalar-node pairs followed by one multiplier per
// element; the rotation grad -> grad_perp is an isometry, so the quadratic
// form is the plain vector Laplacian.
inline SparseSystem assemble_symmetry_kkt(const ReconstructedStress& sigma_r, const Mesh& mesh) {
  const SpaceDescriptor space = SpaceDescriptor::create(SpaceKind::p2conf_vector_zero_neumann, mesh);
  const int n_chi = space.ndof;
  SparseSystem system(n_chi + mesh.n_triangles());
  const QuadratureRule& rule = volume_rule();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    std::array<int, 6> node;
    for (int n = 0; n < 6; ++n) node[n] = space.scalar_node_map[p2conf_scalar_node(mesh, t, n)];
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geom.area;
      std::array<Vec2, 6> grad;
      for (int n = 0; n < 6; ++n)
        grad[n] = physical_gradient(p2_shape(rule.bary[q], n), geom.grad_lambda);
      for (int i = 0; i < 6; ++i) {
        if (node[i] < 0) continue;
        for (int j = 0; j < 6; ++j) {
          if (node[j] < 0) continue;
          const double a = w * grad[i].dot(grad[j]);
          for (int c = 0; c < 2; ++c) system.add(2 * node[i] + c, 2 * node[j] + c, a);
        }
        // Constraint block: (div chi, 1)_T couples component c with d_c phi_i.
        for (int c = 0; c < 2; ++c) {
          const double b = w * grad[i](c);
          system.add(n_chi + t, 2 * node[i] + c, b);
          system.add(2 * node[i] + c, n_chi + t, b);
        }
      }
    }
    system.add_rhs(n_chi + t, antisymmetric_average(sigma_r, mesh, t));
  }
  return system;
}

struct SymmetrizedStress {
  FeField sigma;               // rt1_tensor: sigma_R + grad_perp(chi)
  FeField correction;          // p1disc_tensor: grad_perp(chi) element-wise
  FeField chi;                 // conforming P2 vector, zero on the Neumann set
  Eigen::VectorXd nu;          // element multipliers
  std::vector<Rt1Cell> cells;  // shared element bases for evaluation
};

inline Mat2 eval_stress(const SymmetrizedStress& s, const Mesh& mesh, int t, const Vec2& x) {
  return eval_rt1(s.sigma, s.cells[t], mesh, t, x);
}

inline Vec2 div_stress(const SymmetrizedStress& s, const Mesh& mesh, int t, const Vec2& x) {
  return div_rt1(s.sigma, s.cells[t], mesh, t, x);
}

// Row-wise grad_perp of the P2 field chi on element t at barycentric l.
inline Mat2 grad_perp(const FeField& chi, int t, const ElementGeometry& geom, const Vec3& bary) {
  const Mat2 g = grad_p2conf(chi, t, geom, bary);
  Mat2 rot;
  rot.col(0) = g.col(1);
  rot.col(1) = -g.col(0);
  return rot;
}

inline SymmetrizedStress apply_symmetry_correction(const ReconstructedStress& sigma_r,
                                                   const Mesh& mesh) {
  const SparseSystem system = assemble_symmetry_kkt(sigma_r, mesh);
  const Eigen::VectorXd x = solve(system);

  SymmetrizedStress out;
  out.chi = FeField(SpaceDescriptor::create(SpaceKind::p2conf_vector_zero_neumann, mesh));
  const int n_chi = out.chi.space.ndof;
  out.chi.coeffs = x.head(n_chi);
  // Stationarity was assembled with +B^T, i.e. grad terms minus (div xi, nu)
  // holds for nu = -x_tail.
  out.nu = -x.tail(mesh.n_triangles());
  out.cells = sigma_r.cells;
  out.sigma = sigma_r.field;
  out.correction = FeField(SpaceDescriptor::create(SpaceKind::p1disc_tensor, mesh));

  // The correction is linear per element and tangentially continuous, so its
  // RT1 moments reproduce it exactly; edge moments are taken from the minus
  // side, which agrees with the plus side along the shared edge.
  const std::array<Vec3, 3> corners = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    for (int n = 0; n < 3; ++n) {
      const Mat2 g = grad_perp(out.chi, t, geom, corners[n]);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          out.correction.coeffs[p1disc_tensor_dof(t, i, j, n)] = g(i, j);
    }
  }
  const QuadratureRule& erule = boundary_rule();
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const MeshEdge& edge = mesh.edges[e];
    const int t = edge.tri_minus;
    const ElementGeometry geom = mesh.geometry(t);
    std::array<Vec2, 2> mom = {Vec2::Zero(), Vec2::Zero()};
    for (std::size_t q = 0; q < erule.s.size(); ++q) {
      const double s = erule.s[q];
      const double w = erule.weights[q] * 0.5 * edge.length;
      const Vec2 x_e = mesh.edge_point(e, s);
      const Vec2 flux = eval_p1disc_tensor(out.correction, t, geom.barycentric(x_e)) * edge.normal;
      mom[0] += w * flux;
      mom[1] += w * s * flux;
    }
    for (int r = 0; r < 2; ++r)
      for (int m = 0; m < 2; ++m) out.sigma.coeffs[rt1_edge_dof(e, r, m)] += mom[m](r);
  }
  const QuadratureRule& vrule = volume_rule();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    Mat2 mom = Mat2::Zero();  // (row, component)
    for (std::size_t q = 0; q < vrule.bary.size(); ++q) {
      const double w = vrule.weights[q] * 2.0 * geom.area;
      mom += w * eval_p1disc_tensor(out.correction, t, vrule.bary[q]);
    }
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) out.sigma.coeffs[rt1_interior_dof(mesh, t, r, c)] += mom(r, c);
  }
  return out;
}

}  // namespace planelast
