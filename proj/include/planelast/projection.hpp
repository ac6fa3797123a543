// L2 projections of problem data: element-wise onto P1 or P0 (body force)
// and edge-wise onto P1 on the Neumann boundary (traction).
#pragma once

#include <functional>

#include <planelast/spaces.hpp>

namespace planelast {

using VolumeFunction = std::function<Vec2(const Vec2&)>;
// Traction callback receives the point and the outward unit normal.
using BoundaryFunction = std::function<Vec2(const Vec2&, const Vec2&)>;

enum class VolumeTarget { p1, p0 };

inline FeField project_volume(const VolumeFunction& f, const Mesh& mesh, VolumeTarget target) {
  const QuadratureRule& rule = volume_rule();
  if (target == VolumeTarget::p0) {
    FeField out(SpaceDescriptor::create(SpaceKind::p0_vector, mesh));
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      const ElementGeometry geom = mesh.geometry(t);
      Vec2 mean = Vec2::Zero();
      for (std::size_t q = 0; q < rule.bary.size(); ++q)
        mean += rule.weights[q] * 2.0 * f(geom.point(rule.bary[q]));
      // Reference weights sum to 1/2, so this is the plain average.
      out.coeffs[p0_vector_dof(t, 0)] = mean.x();
      out.coeffs[p0_vector_dof(t, 1)] = mean.y();
    }
    return out;
  }
  FeField out(SpaceDescriptor::create(SpaceKind::p1disc_vector, mesh));
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.geometry(t);
    Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
    Eigen::Matrix<double, 3, 2> rhs = Eigen::Matrix<double, 3, 2>::Zero();
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const Vec3& l = rule.bary[q];
      const double w = rule.weights[q] * 2.0 * geom.area;
      const Vec2 fv = f(geom.point(l));
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) gram(i, j) += w * l[i] * l[j];
        rhs(i, 0) += w * l[i] * fv.x();
        rhs(i, 1) += w * l[i] * fv.y();
      }
    }
    const Eigen::Matrix<double, 3, 2> sol = gram.ldlt().solve(rhs);
    for (int n = 0; n < 3; ++n) {
      out.coeffs[p1disc_vector_dof(t, 0, n)] = sol(n, 0);
      out.coeffs[p1disc_vector_dof(t, 1, n)] = sol(n, 1);
    }
  }
  return out;
}

// Per-Neumann-edge P1 traction data: value(e, s) = coef[e][0] + s * coef[e][1]
// in the global edge parameter s in [-1, 1].
struct NeumannTraceData {
  std::vector<std::array<Vec2, 2>> coef;  // indexed by edge id; zero elsewhere
  std::vector<char> is_neumann;

  Vec2 value(int e, double s) const { return coef[e][0] + s * coef[e][1]; }
};

inline NeumannTraceData project_neumann(const BoundaryFunction& g, const Mesh& mesh) {
  NeumannTraceData data;
  data.coef.assign(mesh.n_edges(), {Vec2::Zero(), Vec2::Zero()});
  data.is_neumann.assign(mesh.n_edges(), 0);
  const QuadratureRule& rule = boundary_rule();
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const MeshEdge& edge = mesh.edges[e];
    if (!edge.neumann()) continue;
    data.is_neumann[e] = 1;
    Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d rhs = Eigen::Matrix2d::Zero();  // rows basis {1,s}, cols components
    for (std::size_t q = 0; q < rule.s.size(); ++q) {
      const double s = rule.s[q];
      const double w = rule.weights[q] * 0.5 * edge.length;
      const Vec2 gv = g(mesh.edge_point(e, s), edge.normal);
      const double basis[2] = {1.0, s};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) gram(i, j) += w * basis[i] * basis[j];
        rhs.row(i) += w * basis[i] * gv.transpose();
      }
    }
    const Eigen::Matrix2d sol = gram.ldlt().solve(rhs);
    data.coef[e][0] = sol.row(0).transpose();
    data.coef[e][1] = sol.row(1).transpose();
  }
  return data;
}

}  // namespace planelast
