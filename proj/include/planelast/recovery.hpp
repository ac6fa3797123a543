// Divergence-constrained conforming recovery of the broken displacement.
//
// The broken field is split by a piecewise-linear partition of unity indexed
// by the vertices away from the Dirichlet boundary.  Hats of Dirichlet
// vertices are absorbed into the weight of one interior-edge neighbor (the
// lowest-index one), which makes that weight constant along the connecting
// edge and keeps the sum identically one.  Each weighted piece is then
// projected onto conforming cubics on the (possibly extended) vertex patch,
// vanishing on all edges not adjacent to the patch's hat vertices and on the
// Dirichlet boundary, minimizing the gradient distance subject to matching
// element-mean divergence.  The sum of the local solutions matches the mean
// divergence of the broken field element by element.
#pragma once

#include <algorithm>
#include <vector>

#include <planelast/elasticity.hpp>
#include <planelast/spaces.hpp>

namespace planelast {

struct PartitionOfUnity {
  // owner[v] = vertex whose weight carries the standard hat of v.  Vertices
  // away from the Dirichlet boundary own themselves; Dirichlet vertices are
  // absorbed.  hats[z] lists the vertices owned by z (empty when z is not in
  // the index set).
  std::vector<int> owner;
  std::vector<std::vector<int>> hats;
  std::vector<char> dirichlet_vertex;
};

inline PartitionOfUnity build_partition(const Mesh& mesh) {
  PartitionOfUnity p;
  const int nv = mesh.n_vertices();
  p.owner.assign(nv, -1);
  p.hats.assign(nv, {});
  p.dirichlet_vertex.assign(nv, 0);
  for (const MeshEdge& edge : mesh.edges)
    if (edge.dirichlet()) {
      p.dirichlet_vertex[edge.v0] = 1;
      p.dirichlet_vertex[edge.v1] = 1;
    }
  for (int v = 0; v < nv; ++v)
    if (!p.dirichlet_vertex[v]) p.owner[v] = v;
  for (int v = 0; v < nv; ++v) {
    if (!p.dirichlet_vertex[v]) continue;
    int best = -1;
    for (const MeshEdge& edge : mesh.edges) {
      if (!edge.interior()) continue;
      const int other = edge.v0 == v ? edge.v1 : (edge.v1 == v ? edge.v0 : -1);
      if (other < 0 || p.dirichlet_vertex[other]) continue;
      if (best < 0 || other < best) best = other;
    }
    require(best >= 0, "build_partition: Dirichlet vertex " + std::to_string(v) +
                           " has no interior-edge neighbor away from the Dirichlet boundary");
    p.owner[v] = best;
  }
  for (int v = 0; v < nv; ++v) p.hats[p.owner[v]].push_back(v);
  return p;
}

// Weight phi_z and its (element-wise constant) gradient on element t.
inline double phi_value(const PartitionOfUnity& p, const Mesh& mesh, int z, int t,
                        const Vec3& bary) {
  double value = 0.0;
  for (int n = 0; n < 3; ++n)
    if (p.owner[mesh.tris[t][n]] == z) value += bary[n];
  return value;
}

inline Vec2 phi_gradient(const PartitionOfUnity& p, const Mesh& mesh, int z, int t,
                         const ElementGeometry& geom) {
  Vec2 g = Vec2::Zero();
  for (int n = 0; n < 3; ++n)
    if (p.owner[mesh.tris[t][n]] == z) g += geom.grad_lambda[n];
  return g;
}

struct PatchSolution {
  int z = -1;
  std::vector<int> elements;      // patch elements, ascending
  std::vector<int> scalar_nodes;  // free P3 scalar nodes, ascending
  Eigen::VectorXd coeffs;         // 2 per scalar node (x then y interleaved)
  Eigen::VectorXd multipliers;    // one per patch element
  int pinned_element = -1;        // element whose multiplier was pinned, or -1
  double kkt_residual = 0.0;
};

inline PatchSolution solve_patch(int z, const FeField& u_h, const PartitionOfUnity& partition,
                                 const Mesh& mesh) {
  require(!partition.hats[z].empty(), "solve_patch: vertex carries no weight");
  PatchSolution out;
  out.z = z;

  const auto owned = [&](int v) { return partition.owner[v] == z; };
  for (int t = 0; t < mesh.n_triangles(); ++t)
    if (owned(mesh.tris[t][0]) || owned(mesh.tris[t][1]) || owned(mesh.tris[t][2]))
      out.elements.push_back(t);

  // Free scalar nodes: the vertex z itself, both nodes of every non-Dirichlet
  // edge touching a hat vertex, and the patch element centers.
  out.scalar_nodes.push_back(p3_scalar_node_vertex(mesh, z));
  bool has_free_neumann_edge = false;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const MeshEdge& edge = mesh.edges[e];
    if (edge.dirichlet()) continue;
    if (!owned(edge.v0) && !owned(edge.v1)) continue;
    if (edge.neumann()) has_free_neumann_edge = true;
    out.scalar_nodes.push_back(p3_scalar_node_edge(mesh, e, 0));
    out.scalar_nodes.push_back(p3_scalar_node_edge(mesh, e, 1));
  }
  for (int t : out.elements) out.scalar_nodes.push_back(p3_scalar_node_center(mesh, t));
  std::sort(out.scalar_nodes.begin(), out.scalar_nodes.end());

  std::vector<int> local_of;  // global scalar node -> local index
  local_of.assign(mesh.n_vertices() + 2 * mesh.n_edges() + mesh.n_triangles(), -1);
  for (std::size_t i = 0; i < out.scalar_nodes.size(); ++i) local_of[out.scalar_nodes[i]] = int(i);

  const int n_free = int(out.scalar_nodes.size());
  const int n_mult = int(out.elements.size());
  const int dim = 2 * n_free + n_mult;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

  const QuadratureRule& rule = volume_rule();
  for (int slot = 0; slot < n_mult; ++slot) {
    const int t = out.elements[slot];
    const ElementGeometry geom = mesh.geometry(t);
    const Vec2 grad_phi = phi_gradient(partition, mesh, z, t, geom);
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geom.area;
      const auto nodes = p3_local_nodes(mesh, t, rule.bary[q]);
      const double phi = phi_value(partition, mesh, z, t, rule.bary[q]);
      const Vec2 u = eval_broken_p2(u_h, t, rule.bary[q]);
      const Mat2 grad_u = grad_broken_p2(u_h, t, geom, rule.bary[q]);
      const Mat2 grad_uz = phi * grad_u + u * grad_phi.transpose();

      std::array<int, 10> local{};
      std::array<Vec2, 10> grad{};
      for (int n = 0; n < 10; ++n) {
        local[n] = local_of[nodes[n].scalar_node];
        grad[n] = physical_gradient(nodes[n].shape, geom.grad_lambda);
      }
      for (int i = 0; i < 10; ++i) {
        if (local[i] < 0) continue;
        for (int j = 0; j < 10; ++j) {
          if (local[j] < 0) continue;
          const double a = w * grad[i].dot(grad[j]);
          for (int c = 0; c < 2; ++c) kkt(2 * local[i] + c, 2 * local[j] + c) += a;
        }
        for (int c = 0; c < 2; ++c) {
          rhs(2 * local[i] + c) += w * (grad_uz(c, 0) * grad[i](0) + grad_uz(c, 1) * grad[i](1));
          const double b = w * grad[i](c);
          kkt(2 * n_free + slot, 2 * local[i] + c) += b;
          kkt(2 * local[i] + c, 2 * n_free + slot) += b;
        }
      }
      rhs(2 * n_free + slot) += w * (phi * trace2(grad_u) + u.dot(grad_phi));
    }
  }

  // Without a free Neumann edge every admissible field has zero total
  // boundary flux, so the constraints sum to zero and one multiplier must be
  // pinned to remove the constant nullspace.  The dropped constraint row is
  // implied by the remaining ones.
  if (!has_free_neumann_edge) {
    out.pinned_element = out.elements.front();
    const int row = 2 * n_free + 0;
    kkt.row(row).setZero();
    kkt.col(row).setZero();
    kkt(row, row) = 1.0;
    rhs(row) = 0.0;
  }

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  require(lu.isInvertible(),
          "solve_patch: singular saddle system at vertex " + std::to_string(z));
  const Eigen::VectorXd x = lu.solve(rhs);
  out.kkt_residual = (kkt * x - rhs).norm();
  require(out.kkt_residual <= 1e-10 * (1.0 + rhs.norm()),
          "solve_patch: saddle solve residual too large at vertex " + std::to_string(z));
  out.coeffs = x.head(2 * n_free);
  out.multipliers = -x.tail(n_mult);
  return out;
}

struct ConformingRecovery {
  FeField u_c;  // conforming cubic vector field, zero on the Dirichlet set
  PartitionOfUnity partition;
  std::vector<PatchSolution> patches;
};

inline ConformingRecovery recover_conforming(const FeField& u_h, const Mesh& mesh) {
  ConformingRecovery out;
  out.partition = build_partition(mesh);
  out.u_c = FeField(SpaceDescriptor::create(SpaceKind::p3conf_vector, mesh));
  for (int z = 0; z < mesh.n_vertices(); ++z) {
    if (out.partition.hats[z].empty()) continue;
    PatchSolution patch = solve_patch(z, u_h, out.partition, mesh);
    for (std::size_t i = 0; i < patch.scalar_nodes.size(); ++i)
      for (int c = 0; c < 2; ++c)
        out.u_c.coeffs[p3_dof(patch.scalar_nodes[i], c)] += patch.coeffs[2 * i + c];
    out.patches.push_back(std::move(patch));
  }
  return out;
}

}  // namespace planelast
