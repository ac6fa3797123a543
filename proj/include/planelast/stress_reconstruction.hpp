// H(div)-conforming stress reconstruction in the row-wise RT1 space.
//
// Edge normal moments are prescribed first (Steps 1 and 2), then the four
// interior degrees of freedom per element are chosen so that the divergence
// misfit against the projected body force vanishes (Step 3).
//
// The degree-zero (mean) moments on interior and Dirichlet edges are taken
// from the saddle-point multipliers: the multiplier attached to an edge's
// constant constraint row is exactly the negative mean numerical flux, which
// makes the element-wise balance
//     (div sigma_R + P_h f, 1)_T = 0
// an algebraic identity of the solved system.  Averaging the one-sided
// traces instead would leave a data-dependent defect of the size of the
// interior load oscillation (it vanishes only for element-wise constant
// body force), so the multiplier sourcing is what keeps the equilibration
// residual at solver precision.  The degree-one moments, which do not enter
// the balance, use the arithmetic average of the element traces (one-sided
// on Dirichlet edges); Neumann edges take both moments from the projected
// traction, which pins sigma_R * n to it exactly.
#pragma once

#include <array>
#include <vector>

#include <planelast/elasticity.hpp>
#include <planelast/spaces.hpp>

namespace planelast {

// Per-edge normal-trace moments: moments[e][m](r) = integral over E of
// (sigma * n_E)_r s^m ds, m in {0,1}, with the global edge parameter s.
struct EdgeTraceData {
  std::vector<std::array<Vec2, 2>> moments;
};

// Three-case averaged traces: projected traction on Neumann edges, one-sided
// trace on Dirichlet edges, arithmetic mean across interior edges.
inline EdgeTraceData average_normal_traces(const FeField& sigma_h, const Mesh& mesh,
                                           const NeumannTraceData& g) {
  EdgeTraceData data;
  data.moments.assign(mesh.n_edges(), {Vec2::Zero(), Vec2::Zero()});
  const QuadratureRule& rule = boundary_rule();
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const MeshEdge& edge = mesh.edges[e];
    for (std::size_t q = 0; q < rule.s.size(); ++q) {
      const double s = rule.s[q];
      const double w = rule.weights[q] * 0.5 * edge.length;
      const Vec2 x = mesh.edge_point(e, s);
      Vec2 flux;
      if (edge.neumann()) {
        flux = g.value(e, s);
      } else {
        flux = eval_p1disc_tensor(sigma_h, edge.tri_minus,
                                  mesh.geometry(edge.tri_minus).barycentric(x)) *
               edge.normal;
        if (edge.interior()) {
          flux += eval_p1disc_tensor(sigma_h, edge.tri_plus,
                                     mesh.geometry(edge.tri_plus).barycentric(x)) *
                  edge.normal;
          flux *= 0.5;
        }
      }
      data.moments[e][0] += w * flux;
      data.moments[e][1] += w * s * flux;
    }
  }
  return data;
}

// Overwrite the mean moments on constrained (interior and Dirichlet) edges
// with the negative constant-constraint multipliers of the saddle solve.
inline void impose_equilibrated_means(EdgeTraceData& data, const Mesh& mesh,
                                      const DiscreteSolution& sol) {
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const int slot = sol.layout.edge_slot[e];
    if (slot < 0) continue;
    for (int r = 0; r < 2; ++r)
      data.moments[e][0](r) =
          -sol.multipliers[sol.layout.multiplier_dof(slot, r, 0) - sol.layout.m_offset()];
  }
}

// Steps 1 and 2: an RT1 field whose edge moments match the given data and
// whose interior dofs are zero.
inline FeField steps_1_2(const EdgeTraceData& data, const Mesh& mesh) {
  FeField out(SpaceDescriptor::create(SpaceKind::rt1_tensor, mesh));
  for (int e = 0; e < mesh.n_edges(); ++e)
    for (int r = 0; r < 2; ++r)
      for (int m = 0; m < 2; ++m)
        out.coeffs[rt1_edge_dof(e, r, m)] = data.moments[e][m](r);
  return out;
}

struct ReconstructedStress {
  FeField field;               // rt1_tensor coefficients
  std::vector<Rt1Cell> cells;  // per-element basis for evaluation
};

inline Mat2 eval_stress(const ReconstructedStress& s, const Mesh& mesh, int t, const Vec2& x) {
  return eval_rt1(s.field, s.cells[t], mesh, t, x);
}

inline Vec2 div_stress(const ReconstructedStress& s, const Mesh& mesh, int t, const Vec2& x) {
  return div_rt1(s.field, s.cells[t], mesh, t, x);
}

// Step 3: fix the interior dofs so that (div sigma_R + P_h f, q)_T = 0 for
// every mean-zero linear q.  The zero-normal-trace RT1 bubbles map
// bijectively onto mean-zero linears under the divergence, so the local
// 2x2 system (shared by both tensor rows) is always solvable.
inline void step_3(FeField& field, std::vector<Rt1Cell>& cells, const Mesh& mesh,
                   const FeField& f_p1) {
  const QuadratureRule& rule = volume_rule();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const Rt1Cell& cell = cells[t];
    const ElementGeometry geom = mesh.geometry(t);
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d rhs = Eigen::Matrix2d::Zero();  // columns: tensor rows
    const auto c0 = rt1_row_coeffs(field, mesh, t, 0);
    const auto c1 = rt1_row_coeffs(field, mesh, t, 1);
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geom.area;
      const Vec2 x = geom.point(rule.bary[q]);
      const double qform[2] = {rule.bary[q](1) - 1.0 / 3.0, rule.bary[q](2) - 1.0 / 3.0};
      double div_partial[2] = {0.0, 0.0};
      for (int j = 0; j < 6; ++j) {
        const double d = cell.basis_div(j, x);
        div_partial[0] += c0[j] * d;
        div_partial[1] += c1[j] * d;
      }
      const Vec2 fv = eval_p1disc_vector(f_p1, t, rule.bary[q]);
      const double bubble_div[2] = {cell.basis_div(6, x), cell.basis_div(7, x)};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) m(i, j) += w * qform[i] * bubble_div[j];
        for (int r = 0; r < 2; ++r)
          rhs(i, r) -= w * qform[i] * (div_partial[r] + fv(r));
      }
    }
    const Eigen::FullPivLU<Eigen::Matrix2d> lu(m);
    require(lu.isInvertible(), "step_3: singular interior system on triangle " +
                                   std::to_string(t));
    const Eigen::Matrix2d corr = lu.solve(rhs);  // (interior dof, tensor row)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        field.coeffs[rt1_interior_dof(mesh, t, r, c)] = corr(c, r);
  }
}

inline ReconstructedStress reconstruct(const DiscreteSolution& sol,
                                       const ElasticityProblem& problem,
                                       const ProjectedData& data) {
  const Mesh& mesh = *problem.mesh;
  const FeField sigma_h = broken_stress(sol, problem);
  EdgeTraceData traces = average_normal_traces(sigma_h, mesh, data.g);
  impose_equilibrated_means(traces, mesh, sol);
  ReconstructedStress out;
  out.field = steps_1_2(traces, mesh);
  out.cells.reserve(mesh.n_triangles());
  for (int t = 0; t < mesh.n_triangles(); ++t) out.cells.push_back(build_rt1_cell(mesh, t));
  step_3(out.field, out.cells, mesh, data.f_p1);
  return out;
}

}  // namespace planelast
