// Finite element spaces as flat coefficient layouts over a mesh, plus field
// evaluation.  All degree-of-freedom orderings are deterministic functions of
// the mesh; shared (conforming) dofs use global edge orientation so adjacent
// elements agree without sign flips.
#pragma once

#include <array>
#include <vector>

#include <planelast/mesh.hpp>
#include <planelast/quadrature.hpp>
#include <planelast/shape.hpp>

namespace planelast {

enum class SpaceKind {
  broken_p2_vector,            // 12 dofs / element: 2 components x 6 P2 nodes
  p1disc_scalar,               // 3 dofs / element
  p1disc_vector,               // 6 dofs / element
  p1disc_tensor,               // 12 dofs / element: 4 components x 3 nodes
  p0_vector,                   // 2 dofs / element
  p2conf_vector_zero_neumann,  // continuous P2, zero trace on the Neumann set
  p3conf_vector,               // continuous P3
  rt1_tensor                   // row-wise Raviart-Thomas of degree 1
};

struct SpaceDescriptor {
  SpaceKind kind;
  const Mesh* mesh = nullptr;
  int ndof = 0;
  // p2conf_vector_zero_neumann only: scalar node (vertices then edge
  // midpoints) -> free scalar-node index, or -1 when constrained to zero.
  std::vector<int> scalar_node_map;

  static SpaceDescriptor create(SpaceKind kind, const Mesh& mesh) {
    SpaceDescriptor s;
    s.kind = kind;
    s.mesh = &mesh;
    const int nv = mesh.n_vertices();
    const int ne = mesh.n_edges();
    const int nt = mesh.n_triangles();
    switch (kind) {
      case SpaceKind::broken_p2_vector: s.ndof = 12 * nt; break;
      case SpaceKind::p1disc_scalar: s.ndof = 3 * nt; break;
      case SpaceKind::p1disc_vector: s.ndof = 6 * nt; break;
      case SpaceKind::p1disc_tensor: s.ndof = 12 * nt; break;
      case SpaceKind::p0_vector: s.ndof = 2 * nt; break;
      case SpaceKind::p2conf_vector_zero_neumann: {
        std::vector<char> constrained(nv + ne, 0);
        for (int e = 0; e < ne; ++e)
          if (mesh.edges[e].neumann()) {
            constrained[mesh.edges[e].v0] = 1;
            constrained[mesh.edges[e].v1] = 1;
            constrained[nv + e] = 1;
          }
        s.scalar_node_map.assign(nv + ne, -1);
        int free = 0;
        for (int n = 0; n < nv + ne; ++n)
          if (!constrained[n]) s.scalar_node_map[n] = free++;
        s.ndof = 2 * free;
        break;
      }
      case SpaceKind::p3conf_vector: s.ndof = 2 * (nv + 2 * ne + nt); break;
      case SpaceKind::rt1_tensor: s.ndof = 4 * ne + 4 * nt; break;
    }
    return s;
  }
};

struct FeField {
  SpaceDescriptor space;
  Eigen::VectorXd coeffs;

  FeField() = default;
  explicit FeField(SpaceDescriptor s) : space(std::move(s)) {
    coeffs = Eigen::VectorXd::Zero(space.ndof);
  }
};

// ---------------------------------------------------------------------------
// Dof numbering helpers.
// ---------------------------------------------------------------------------

// Broken P2 vector: component c in {0,1}, local P2 node n in {0..5}.
inline int broken_p2_dof(int t, int c, int n) { return 12 * t + 6 * c + n; }
inline int p1disc_scalar_dof(int t, int n) { return 3 * t + n; }
inline int p1disc_vector_dof(int t, int c, int n) { return 6 * t + 3 * c + n; }
inline int p1disc_tensor_dof(int t, int i, int j, int n) { return 12 * t + 3 * (2 * i + j) + n; }
inline int p0_vector_dof(int t, int c) { return 2 * t + c; }

// P3 conforming scalar nodes: vertices, then 2 per edge (side 0 nearer the
// edge's lower vertex), then element centers.
inline int p3_scalar_node_vertex(const Mesh&, int v) { return v; }
inline int p3_scalar_node_edge(const Mesh& mesh, int e, int side) {
  return mesh.n_vertices() + 2 * e + side;
}
inline int p3_scalar_node_center(const Mesh& mesh, int t) {
  return mesh.n_vertices() + 2 * mesh.n_edges() + t;
}
inline int p3_dof(int scalar_node, int c) { return 2 * scalar_node + c; }

// RT1 tensor: per edge 2 rows x 2 moments, per element 2 rows x 2 constants.
inline int rt1_edge_dof(int e, int row, int moment) { return 4 * e + 2 * row + moment; }
inline int rt1_interior_dof(const Mesh& mesh, int t, int row, int comp) {
  return 4 * mesh.n_edges() + 4 * t + 2 * row + comp;
}

// ---------------------------------------------------------------------------
// Field evaluation.
// ---------------------------------------------------------------------------

inline Vec2 eval_broken_p2(const FeField& f, int t, const Vec3& bary) {
  Vec2 u = Vec2::Zero();
  for (int n = 0; n < 6; ++n) {
    const double v = p2_shape(bary, n).value;
    u.x() += f.coeffs[broken_p2_dof(t, 0, n)] * v;
    u.y() += f.coeffs[broken_p2_dof(t, 1, n)] * v;
  }
  return u;
}

// Gradient with rows = components: (grad u)_{cj} = du_c / dx_j.
inline Mat2 grad_broken_p2(const FeField& f, int t, const ElementGeometry& geom,
                           const Vec3& bary) {
  Mat2 g = Mat2::Zero();
  for (int n = 0; n < 6; ++n) {
    const Vec2 gn = physical_gradient(p2_shape(bary, n), geom.grad_lambda);
    g.row(0) += f.coeffs[broken_p2_dof(t, 0, n)] * gn.transpose();
    g.row(1) += f.coeffs[broken_p2_dof(t, 1, n)] * gn.transpose();
  }
  return g;
}

inline double eval_p1disc_scalar(const FeField& f, int t, const Vec3& bary) {
  double v = 0.0;
  for (int n = 0; n < 3; ++n) v += f.coeffs[p1disc_scalar_dof(t, n)] * bary[n];
  return v;
}

inline Vec2 eval_p1disc_vector(const FeField& f, int t, const Vec3& bary) {
  Vec2 v = Vec2::Zero();
  for (int n = 0; n < 3; ++n) {
    v.x() += f.coeffs[p1disc_vector_dof(t, 0, n)] * bary[n];
    v.y() += f.coeffs[p1disc_vector_dof(t, 1, n)] * bary[n];
  }
  return v;
}

inline Mat2 eval_p1disc_tensor(const FeField& f, int t, const Vec3& bary) {
  Mat2 m = Mat2::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int n = 0; n < 3; ++n) m(i, j) += f.coeffs[p1disc_tensor_dof(t, i, j, n)] * bary[n];
  return m;
}

inline Vec2 eval_p0_vector(const FeField& f, int t) {
  return Vec2(f.coeffs[p0_vector_dof(t, 0)], f.coeffs[p0_vector_dof(t, 1)]);
}

// --- conforming P2 with zero Neumann trace ----------------------------------

inline int p2conf_scalar_node(const Mesh& mesh, int t, int local_node) {
  if (local_node < 3) return mesh.tris[t][local_node];
  return mesh.n_vertices() + mesh.tri_edges[t][local_node - 3];
}

inline Vec2 eval_p2conf(const FeField& f, int t, const Vec3& bary) {
  const auto& space = f.space;
  Vec2 u = Vec2::Zero();
  for (int n = 0; n < 6; ++n) {
    const int node = space.scalar_node_map[p2conf_scalar_node(*space.mesh, t, n)];
    if (node < 0) continue;
    const double v = p2_shape(bary, n).value;
    u.x() += f.coeffs[2 * node + 0] * v;
    u.y() += f.coeffs[2 * node + 1] * v;
  }
  return u;
}

inline Mat2 grad_p2conf(const FeField& f, int t, const ElementGeometry& geom, const Vec3& bary) {
  const auto& space = f.space;
  Mat2 g = Mat2::Zero();
  for (int n = 0; n < 6; ++n) {
    const int node = space.scalar_node_map[p2conf_scalar_node(*space.mesh, t, n)];
    if (node < 0) continue;
    const Vec2 gn = physical_gradient(p2_shape(bary, n), geom.grad_lambda);
    g.row(0) += f.coeffs[2 * node + 0] * gn.transpose();
    g.row(1) += f.coeffs[2 * node + 1] * gn.transpose();
  }
  return g;
}

// --- conforming P3 -----------------------------------------------------------

// Local P3 nodes per element: 0..2 vertices, then for each local edge k
// (opposite vertex k) the two edge nodes in global order (side 0 first), then
// the center node.  Returns the matching global scalar node and shape value.
struct P3LocalNode {
  int scalar_node = -1;
  ShapeValue shape;
};

inline std::array<P3LocalNode, 10> p3_local_nodes(const Mesh& mesh, int t, const Vec3& bary) {
  std::array<P3LocalNode, 10> out;
  for (int i = 0; i < 3; ++i) {
    out[i].scalar_node = p3_scalar_node_vertex(mesh, mesh.tris[t][i]);
    out[i].shape = p3_vertex_shape(bary, i);
  }
  for (int k = 0; k < 3; ++k) {
    const int e = mesh.tri_edges[t][k];
    const int a = (k + 1) % 3;  // local endpoints of edge k
    const int b = (k + 2) % 3;
    const int ga = mesh.tris[t][a];
    // side 0 is the node nearer the edge's lower global vertex.
    const int near_lower = mesh.edges[e].v0 == ga ? a : b;
    const int near_upper = near_lower == a ? b : a;
    out[3 + 2 * k].scalar_node = p3_scalar_node_edge(mesh, e, 0);
    out[3 + 2 * k].shape = p3_edge_shape(bary, near_lower, near_upper);
    out[3 + 2 * k + 1].scalar_node = p3_scalar_node_edge(mesh, e, 1);
    out[3 + 2 * k + 1].shape = p3_edge_shape(bary, near_upper, near_lower);
  }
  out[9].scalar_node = p3_scalar_node_center(mesh, t);
  out[9].shape = p3_center_shape(bary);
  return out;
}

inline Vec2 eval_p3conf(const FeField& f, int t, const Vec3& bary) {
  const Mesh& mesh = *f.space.mesh;
  Vec2 u = Vec2::Zero();
  for (const auto& node : p3_local_nodes(mesh, t, bary)) {
    u.x() += f.coeffs[p3_dof(node.scalar_node, 0)] * node.shape.value;
    u.y() += f.coeffs[p3_dof(node.scalar_node, 1)] * node.shape.value;
  }
  return u;
}

inline Mat2 grad_p3conf(const FeField& f, int t, const ElementGeometry& geom, const Vec3& bary) {
  const Mesh& mesh = *f.space.mesh;
  Mat2 g = Mat2::Zero();
  for (const auto& node : p3_local_nodes(mesh, t, bary)) {
    const Vec2 gn = physical_gradient(node.shape, geom.grad_lambda);
    g.row(0) += f.coeffs[p3_dof(node.scalar_node, 0)] * gn.transpose();
    g.row(1) += f.coeffs[p3_dof(node.scalar_node, 1)] * gn.transpose();
  }
  return g;
}

// --- RT1 ---------------------------------------------------------------------

// Per-element RT1 vector basis (shared by both tensor rows): eight fields
// dual to the six edge-moment functionals (global normal and global edge
// parameter) and the two interior constant-moment functionals.
struct Rt1Cell {
  Vec2 centroid = Vec2::Zero();
  double h = 1.0;
  Eigen::Matrix<double, 8, 8> coef;  // column j: monomial coefficients of basis j
  std::array<int, 3> edge_ids{};

  // Monomials in scaled coordinates xh = (x - centroid)/h:
  // (1,0),(xh,0),(yh,0),(0,1),(0,xh),(0,yh), xh*(xh,yh), yh*(xh,yh).
  Vec2 monomial(int m, const Vec2& x) const {
    const Vec2 xh = (x - centroid) / h;
    switch (m) {
      case 0: return Vec2(1.0, 0.0);
      case 1: return Vec2(xh.x(), 0.0);
      case 2: return Vec2(xh.y(), 0.0);
      case 3: return Vec2(0.0, 1.0);
      case 4: return Vec2(0.0, xh.x());
      case 5: return Vec2(0.0, xh.y());
      case 6: return xh.x() * xh;
      default: return xh.y() * xh;
    }
  }
  double monomial_div(int m, const Vec2& x) const {
    const Vec2 xh = (x - centroid) / h;
    switch (m) {
      case 1: return 1.0 / h;
      case 5: return 1.0 / h;
      case 6: return 3.0 * xh.x() / h;
      case 7: return 3.0 * xh.y() / h;
      default: return 0.0;
    }
  }
  Vec2 basis(int j, const Vec2& x) const {
    Vec2 v = Vec2::Zero();
    for (int m = 0; m < 8; ++m) v += coef(m, j) * monomial(m, x);
    return v;
  }
  double basis_div(int j, const Vec2& x) const {
    double d = 0.0;
    for (int m = 0; m < 8; ++m) d += coef(m, j) * monomial_div(m, x);
    return d;
  }
};

// Local dof order within Rt1Cell: edge k moment m -> 2k+m (k = local edge
// index, opposite vertex k), interior component c -> 6+c.
inline Rt1Cell build_rt1_cell(const Mesh& mesh, int t) {
  Rt1Cell cell;
  const ElementGeometry geom = mesh.geometry(t);
  cell.centroid = (geom.p[0] + geom.p[1] + geom.p[2]) / 3.0;
  cell.h = geom.diameter;
  cell.edge_ids = mesh.tri_edges[t];

  Eigen::Matrix<double, 8, 8> dof_matrix = Eigen::Matrix<double, 8, 8>::Zero();
  const QuadratureRule& erule = boundary_rule();
  for (int k = 0; k < 3; ++k) {
    const int e = mesh.tri_edges[t][k];
    const MeshEdge& edge = mesh.edges[e];
    for (std::size_t q = 0; q < erule.s.size(); ++q) {
      const double s = erule.s[q];
      const double w = erule.weights[q] * 0.5 * edge.length;
      const Vec2 x = mesh.edge_point(e, s);
      for (int m = 0; m < 8; ++m) {
        const double vn = cell.monomial(m, x).dot(edge.normal);
        dof_matrix(2 * k + 0, m) += w * vn;
        dof_matrix(2 * k + 1, m) += w * vn * s;
      }
    }
  }
  const QuadratureRule& vrule = volume_rule();
  for (std::size_t q = 0; q < vrule.bary.size(); ++q) {
    const Vec2 x = geom.point(vrule.bary[q]);
    const double w = vrule.weights[q] * 2.0 * geom.area;
    for (int m = 0; m < 8; ++m) {
      const Vec2 v = cell.monomial(m, x);
      dof_matrix(6, m) += w * v.x();
      dof_matrix(7, m) += w * v.y();
    }
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(dof_matrix);
  require(lu.isInvertible(), "build_rt1_cell: degenerate dof matrix on triangle " +
                                 std::to_string(t));
  cell.coef = lu.inverse();
  return cell;
}

// Gather the 8 global coefficients of one tensor row on element t.
inline Eigen::Matrix<double, 8, 1> rt1_row_coeffs(const FeField& f, const Mesh& mesh, int t,
                                                  int row) {
  Eigen::Matrix<double, 8, 1> c;
  for (int k = 0; k < 3; ++k) {
    const int e = mesh.tri_edges[t][k];
    c[2 * k + 0] = f.coeffs[rt1_edge_dof(e, row, 0)];
    c[2 * k + 1] = f.coeffs[rt1_edge_dof(e, row, 1)];
  }
  c[6] = f.coeffs[rt1_interior_dof(mesh, t, row, 0)];
  c[7] = f.coeffs[rt1_interior_dof(mesh, t, row, 1)];
  return c;
}

inline Mat2 eval_rt1(const FeField& f, const Rt1Cell& cell, const Mesh& mesh, int t,
                     const Vec2& x) {
  Mat2 sigma = Mat2::Zero();
  for (int row = 0; row < 2; ++row) {
    const auto c = rt1_row_coeffs(f, mesh, t, row);
    Vec2 v = Vec2::Zero();
    for (int j = 0; j < 8; ++j)
      if (c[j] != 0.0) v += c[j] * cell.basis(j, x);
    sigma.row(row) = v.transpose();
  }
  return sigma;
}

inline Vec2 div_rt1(const FeField& f, const Rt1Cell& cell, const Mesh& mesh, int t,
                    const Vec2& x) {
  Vec2 d = Vec2::Zero();
  for (int row = 0; row < 2; ++row) {
    const auto c = rt1_row_coeffs(f, mesh, t, row);
    for (int j = 0; j < 8; ++j)
      if (c[j] != 0.0) d[row] += c[j] * cell.basis_div(j, x);
  }
  return d;
}

}  // namespace planelast
