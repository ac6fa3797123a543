// Conforming triangle meshes with labeled boundary, newest-vertex bisection
// refinement with recursive conforming closure, and a small text file format.
//
// Conventions fixed here and relied on by every downstream module:
//  * triangles are stored counter-clockwise with the refinement edge
//    (v0, v1) opposite the peak vertex v2 (the newest vertex);
//  * edges store ascending vertex indices, the tangent points from the lower
//    to the higher vertex index;
//  * the stored edge normal is the outward normal of tri_minus, where
//    tri_minus is the lower-indexed adjacent triangle (the unique one on the
//    boundary), so interior normals point from lower to higher triangle index.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include <planelast/geometry.hpp>

namespace planelast {

enum class BoundaryLabel : int { dirichlet = 0, neumann = 1 };

struct BoundaryEdgeSpec {
  int v0 = -1;
  int v1 = -1;
  BoundaryLabel label = BoundaryLabel::neumann;
};

struct MeshEdge {
  int v0 = -1;             // lower vertex index
  int v1 = -1;             // higher vertex index
  int tri_minus = -1;      // triangle the stored normal exits
  int tri_plus = -1;       // triangle the stored normal enters (-1 on boundary)
  Vec2 tangent = Vec2::Zero();  // unit, points v0 -> v1
  Vec2 normal = Vec2::Zero();   // unit, outward from tri_minus
  double length = 0.0;
  int label = -1;          // -1 interior, else BoundaryLabel value

  bool interior() const { return tri_plus >= 0; }
  bool dirichlet() const { return label == static_cast<int>(BoundaryLabel::dirichlet); }
  bool neumann() const { return label == static_cast<int>(BoundaryLabel::neumann); }
};

struct ElementGeometry {
  std::array<Vec2, 3> p;
  double area = 0.0;
  double diameter = 0.0;
  std::array<Vec2, 3> grad_lambda;

  Vec2 point(const Vec3& bary) const {
    return bary[0] * p[0] + bary[1] * p[1] + bary[2] * p[2];
  }
  Vec3 barycentric(const Vec2& x) const {
    const double l1 = triangle_area(p[0], x, p[2]) / area;
    const double l2 = triangle_area(p[0], p[1], x) / area;
    return Vec3(1.0 - l1 - l2, l1, l2);
  }
};

class Mesh {
 public:
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> tris;  // CCW, refinement edge (v0,v1), peak v2
  std::vector<MeshEdge> edges;
  std::vector<std::array<int, 3>> tri_edges;  // entry k: edge opposite local vertex k
  std::vector<double> tri_area;
  std::vector<double> tri_diameter;
  std::vector<std::vector<int>> vertex_tris;
  std::vector<std::vector<int>> vertex_edges;
  std::vector<char> vertex_on_dirichlet;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(tris.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  ElementGeometry geometry(int t) const {
    const auto& tri = tris[t];
    ElementGeometry g;
    g.p = {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
    g.area = tri_area[t];
    g.diameter = tri_diameter[t];
    const double inv2a = 1.0 / (2.0 * g.area);
    for (int i = 0; i < 3; ++i) {
      const Vec2 d = g.p[(i + 2) % 3] - g.p[(i + 1) % 3];
      g.grad_lambda[i] = Vec2(-d.y(), d.x()) * inv2a;
    }
    return g;
  }

  // Physical point on an edge at parameter s in [-1,1] (s=-1 at v0).
  Vec2 edge_point(int e, double s) const {
    const auto& ed = edges[e];
    const Vec2 mid = 0.5 * (vertices[ed.v0] + vertices[ed.v1]);
    return mid + 0.5 * s * ed.length * ed.tangent;
  }

  // +1 if the global edge normal is outward for triangle t, else -1.
  double normal_sign(int t, int e) const { return edges[e].tri_minus == t ? 1.0 : -1.0; }

  // Local index (0..2) of edge e within triangle t.
  int local_edge_index(int t, int e) const {
    for (int k = 0; k < 3; ++k)
      if (tri_edges[t][k] == e) return k;
    throw std::runtime_error("local_edge_index: edge " + std::to_string(e) +
                             " not part of triangle " + std::to_string(t));
  }

  double total_area() const {
    double a = 0.0;
    for (double t : tri_area) a += t;
    return a;
  }

  double min_angle() const {
    double worst = M_PI;
    for (int t = 0; t < n_triangles(); ++t) worst = std::min(worst, min_angle_of(t));
    return worst;
  }

  double min_angle_of(int t) const {
    const auto& tri = tris[t];
    double worst = M_PI;
    for (int i = 0; i < 3; ++i) {
      const Vec2 a = vertices[tri[(i + 1) % 3]] - vertices[tri[i]];
      const Vec2 b = vertices[tri[(i + 2) % 3]] - vertices[tri[i]];
      const double ang = std::atan2(std::abs(cross2(a, b)), a.dot(b));
      worst = std::min(worst, ang);
    }
    return worst;
  }

  // Vertices on the Dirichlet boundary that are not connected to any interior
  // edge.  The conforming-recovery construction requires this list to be
  // empty; callers that need the property check it explicitly.
  std::vector<int> dirichlet_vertices_without_interior_edge() const {
    std::vector<int> bad;
    for (int v = 0; v < n_vertices(); ++v) {
      if (!vertex_on_dirichlet[v]) continue;
      bool has_interior = false;
      for (int e : vertex_edges[v])
        if (edges[e].interior()) { has_interior = true; break; }
      if (!has_interior) bad.push_back(v);
    }
    return bad;
  }
};

namespace detail {

using EdgeKey = std::pair<int, int>;

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Shared connectivity construction.  `rotate_to_longest_edge` selects the
// initial refinement-edge assignment; refined meshes arrive pre-rotated.
inline Mesh finalize_mesh(std::vector<Vec2> vertices,
                          std::vector<std::array<int, 3>> tris,
                          const std::map<EdgeKey, BoundaryLabel>& boundary,
                          bool rotate_to_longest_edge) {
  Mesh mesh;
  const int nv = static_cast<int>(vertices.size());
  const int nt = static_cast<int>(tris.size());
  require(nv >= 3 && nt >= 1, "build_mesh: need at least one triangle");
  for (const auto& tri : tris)
    for (int v : tri)
      require(v >= 0 && v < nv, "build_mesh: vertex index out of range");

  if (rotate_to_longest_edge) {
    for (auto& tri : tris) {
      std::array<double, 3> opp_len2;  // squared length of edge opposite vertex k
      for (int k = 0; k < 3; ++k) {
        const Vec2 d = vertices[tri[(k + 2) % 3]] - vertices[tri[(k + 1) % 3]];
        opp_len2[k] = d.squaredNorm();
      }
      int peak = 0;
      for (int k = 1; k < 3; ++k)
        if (opp_len2[k] > opp_len2[peak]) peak = k;
      const std::array<int, 3> rotated = {tri[(peak + 1) % 3], tri[(peak + 2) % 3], tri[peak]};
      tri = rotated;
    }
  }

  for (int t = 0; t < nt; ++t) {
    const auto& tri = tris[t];
    require(tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2],
            "build_mesh: repeated vertex in triangle " + std::to_string(t));
    const double area = triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
    require(area > 0.0, "build_mesh: inverted or degenerate triangle " + std::to_string(t));
  }

  mesh.vertices = std::move(vertices);
  mesh.tris = std::move(tris);
  mesh.tri_area.resize(nt);
  mesh.tri_diameter.resize(nt);
  mesh.tri_edges.assign(nt, {-1, -1, -1});

  std::map<EdgeKey, int> edge_ids;
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.tris[t];
    mesh.tri_area[t] =
        triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    double diam = 0.0;
    for (int k = 0; k < 3; ++k) {
      const int a = tri[(k + 1) % 3];
      const int b = tri[(k + 2) % 3];
      diam = std::max(diam, (mesh.vertices[a] - mesh.vertices[b]).norm());
      const EdgeKey key = edge_key(a, b);
      auto it = edge_ids.find(key);
      int e;
      if (it == edge_ids.end()) {
        e = static_cast<int>(mesh.edges.size());
        edge_ids.emplace(key, e);
        MeshEdge edge;
        edge.v0 = key.first;
        edge.v1 = key.second;
        edge.tri_minus = t;
        const Vec2 d = mesh.vertices[edge.v1] - mesh.vertices[edge.v0];
        edge.length = d.norm();
        require(edge.length > 0.0, "build_mesh: zero-length edge");
        edge.tangent = d / edge.length;
        mesh.edges.push_back(edge);
      } else {
        e = it->second;
        MeshEdge& edge = mesh.edges[e];
        require(edge.tri_plus < 0, "build_mesh: non-manifold edge (" +
                                       std::to_string(key.first) + "," +
                                       std::to_string(key.second) + ") borders > 2 triangles");
        // Keep tri_minus the lower triangle index; triangles arrive in order.
        edge.tri_plus = t;
      }
      mesh.tri_edges[t][k] = e;
    }
    mesh.tri_diameter[t] = diam;
  }

  // Normals: outward from tri_minus.
  for (auto& edge : mesh.edges) {
    const int t = edge.tri_minus;
    const auto& tri = mesh.tris[t];
    int k = -1;
    for (int i = 0; i < 3; ++i)
      if (edge_key(tri[(i + 1) % 3], tri[(i + 2) % 3]) == edge_key(edge.v0, edge.v1)) k = i;
    require(k >= 0, "build_mesh: internal edge lookup failure");
    // CCW traversal direction of the edge within tri_minus.
    const Vec2 a = mesh.vertices[tri[(k + 1) % 3]];
    const Vec2 b = mesh.vertices[tri[(k + 2) % 3]];
    const Vec2 d = (b - a).normalized();
    edge.normal = Vec2(d.y(), -d.x());  // right of CCW traversal = outward
  }

  // Boundary labels.
  int n_dirichlet = 0, n_neumann = 0;
  std::map<EdgeKey, int> boundary_seen;
  for (const auto& [key, label] : boundary) {
    auto it = edge_ids.find(key);
    require(it != edge_ids.end(), "build_mesh: boundary label references non-existent edge (" +
                                      std::to_string(key.first) + "," +
                                      std::to_string(key.second) + ")");
    MeshEdge& edge = mesh.edges[it->second];
    require(!edge.interior(), "build_mesh: boundary label on interior edge (" +
                                  std::to_string(key.first) + "," + std::to_string(key.second) +
                                  ")");
    edge.label = static_cast<int>(label);
    (label == BoundaryLabel::dirichlet ? n_dirichlet : n_neumann) += 1;
  }
  for (const auto& edge : mesh.edges)
    require(edge.interior() || edge.label >= 0,
            "build_mesh: unlabeled boundary edge (" + std::to_string(edge.v0) + "," +
                std::to_string(edge.v1) + ")");
  require(n_dirichlet > 0, "build_mesh: Dirichlet boundary is empty");
  require(n_neumann > 0, "build_mesh: Neumann boundary is empty");

  // Vertex incidences, ascending and deterministic.
  mesh.vertex_tris.assign(nv, {});
  mesh.vertex_edges.assign(nv, {});
  for (int t = 0; t < nt; ++t)
    for (int v : mesh.tris[t]) mesh.vertex_tris[v].push_back(t);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    mesh.vertex_edges[mesh.edges[e].v0].push_back(e);
    mesh.vertex_edges[mesh.edges[e].v1].push_back(e);
  }
  for (auto& list : mesh.vertex_tris) std::sort(list.begin(), list.end());
  for (auto& list : mesh.vertex_edges) std::sort(list.begin(), list.end());

  mesh.vertex_on_dirichlet.assign(nv, 0);
  for (const auto& edge : mesh.edges)
    if (edge.dirichlet()) {
      mesh.vertex_on_dirichlet[edge.v0] = 1;
      mesh.vertex_on_dirichlet[edge.v1] = 1;
    }
  return mesh;
}

inline std::map<EdgeKey, BoundaryLabel> boundary_map_of(const Mesh& mesh) {
  std::map<EdgeKey, BoundaryLabel> map;
  for (const auto& edge : mesh.edges)
    if (!edge.interior()) map[edge_key(edge.v0, edge.v1)] = static_cast<BoundaryLabel>(edge.label);
  return map;
}

}  // namespace detail

inline Mesh build_mesh(const std::vector<Vec2>& vertices,
                       const std::vector<std::array<int, 3>>& triangles,
                       const std::vector<BoundaryEdgeSpec>& boundary) {
  std::map<detail::EdgeKey, BoundaryLabel> map;
  for (const auto& entry : boundary) {
    const auto key = detail::edge_key(entry.v0, entry.v1);
    require(map.find(key) == map.end(), "build_mesh: duplicate boundary label for edge (" +
                                            std::to_string(entry.v0) + "," +
                                            std::to_string(entry.v1) + ")");
    map[key] = entry.label;
  }
  return detail::finalize_mesh(vertices, triangles, map, /*rotate_to_longest_edge=*/true);
}

// Newest-vertex bisection.  Every marked triangle is bisected at its
// refinement edge; recursive conforming closure may split further triangles.
inline Mesh refine(const Mesh& mesh, const std::vector<int>& marked,
                   bool mark_all_edges = false) {
  const int nt = mesh.n_triangles();
  for (int t : marked)
    require(t >= 0 && t < nt, "refine: marked triangle index out of range");

  std::vector<char> edge_marked(mesh.n_edges(), 0);
  if (mark_all_edges) {
    std::fill(edge_marked.begin(), edge_marked.end(), 1);
  } else {
    if (marked.empty()) return mesh;
    for (int t : marked) edge_marked[mesh.tri_edges[t][2]] = 1;
  }

  // Closure: whenever any edge of a triangle is marked, its refinement edge
  // must be marked too, so bisections always start at the refinement edge.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int t = 0; t < nt; ++t) {
      const int ref_edge = mesh.tri_edges[t][2];
      if (edge_marked[ref_edge]) continue;
      if (edge_marked[mesh.tri_edges[t][0]] || edge_marked[mesh.tri_edges[t][1]]) {
        edge_marked[ref_edge] = 1;
        changed = true;
      }
    }
  }

  std::vector<Vec2> vertices = mesh.vertices;
  std::vector<int> midpoint(mesh.n_edges(), -1);
  for (int e = 0; e < mesh.n_edges(); ++e)
    if (edge_marked[e]) {
      midpoint[e] = static_cast<int>(vertices.size());
      vertices.push_back(0.5 * (mesh.vertices[mesh.edges[e].v0] + mesh.vertices[mesh.edges[e].v1]));
    }

  auto boundary = detail::boundary_map_of(mesh);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const auto& edge = mesh.edges[e];
    if (!edge_marked[e] || edge.interior()) continue;
    const auto label = static_cast<BoundaryLabel>(edge.label);
    boundary.erase(detail::edge_key(edge.v0, edge.v1));
    boundary[detail::edge_key(edge.v0, midpoint[e])] = label;
    boundary[detail::edge_key(midpoint[e], edge.v1)] = label;
  }

  std::vector<std::array<int, 3>> out;
  out.reserve(nt * 2);
  auto edge_of = [&](int a, int b) {
    // Original-mesh edge id for vertex pair (a,b); both are original vertices.
    for (int e : mesh.vertex_edges[a]) {
      const auto& ed = mesh.edges[e];
      if (ed.v0 + ed.v1 == a + b && (ed.v0 == a || ed.v0 == b)) return e;
    }
    throw std::runtime_error("refine: internal edge lookup failure");
  };
  for (int t = 0; t < nt; ++t) {
    const auto [x, y, z] = mesh.tris[t];
    const int exy = mesh.tri_edges[t][2];
    if (!edge_marked[exy]) {
      out.push_back({x, y, z});
      continue;
    }
    const int m = midpoint[exy];
    // First bisection: children (z,x,m) and (y,z,m), peak m.
    const int ezx = edge_of(z, x);
    if (edge_marked[ezx]) {
      const int m2 = midpoint[ezx];
      out.push_back({m, z, m2});
      out.push_back({x, m, m2});
    } else {
      out.push_back({z, x, m});
    }
    const int eyz = edge_of(y, z);
    if (edge_marked[eyz]) {
      const int m3 = midpoint[eyz];
      out.push_back({m, y, m3});
      out.push_back({z, m, m3});
    } else {
      out.push_back({y, z, m});
    }
  }

  return detail::finalize_mesh(std::move(vertices), std::move(out), boundary,
                               /*rotate_to_longest_edge=*/false);
}

// Quarters every triangle (all three edges bisected).
inline Mesh refine_uniform(const Mesh& mesh) { return refine(mesh, {}, /*mark_all_edges=*/true); }

inline const std::vector<int>& vertex_patch(const Mesh& mesh, int z) {
  require(z >= 0 && z < mesh.n_vertices(),
          "vertex_patch: vertex index " + std::to_string(z) + " out of range");
  return mesh.vertex_tris[z];
}

// ---------------------------------------------------------------------------
// Text format: "nv nt nb" header, nv lines "x y", nt lines "v0 v1 v2",
// nb lines "v0 v1 {D|N}".  '#' starts a comment.
// ---------------------------------------------------------------------------

inline Mesh load_mesh(std::istream& in) {
  auto next_line = [&in](int& line_no) -> std::optional<std::string> {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream probe(line);
      std::string token;
      if (probe >> token) return line;
    }
    return std::nullopt;
  };
  int line_no = 0;
  auto header = next_line(line_no);
  require(header.has_value(), "load_mesh: missing header line");
  std::istringstream hs(*header);
  int nv = 0, nt = 0, nb = 0;
  require(static_cast<bool>(hs >> nv >> nt >> nb), "load_mesh: malformed header");
  require(nv > 0 && nt > 0 && nb >= 0, "load_mesh: non-positive counts in header");

  std::vector<Vec2> vertices(nv);
  for (int i = 0; i < nv; ++i) {
    auto line = next_line(line_no);
    require(line.has_value(), "load_mesh: unexpected end of file in vertex block");
    std::istringstream ls(*line);
    require(static_cast<bool>(ls >> vertices[i].x() >> vertices[i].y()),
            "load_mesh: malformed vertex at line " + std::to_string(line_no));
  }
  std::vector<std::array<int, 3>> triangles(nt);
  for (int i = 0; i < nt; ++i) {
    auto line = next_line(line_no);
    require(line.has_value(), "load_mesh: unexpected end of file in triangle block");
    std::istringstream ls(*line);
    require(static_cast<bool>(ls >> triangles[i][0] >> triangles[i][1] >> triangles[i][2]),
            "load_mesh: malformed triangle at line " + std::to_string(line_no));
  }
  std::vector<BoundaryEdgeSpec> boundary(nb);
  for (int i = 0; i < nb; ++i) {
    auto line = next_line(line_no);
    require(line.has_value(), "load_mesh: unexpected end of file in boundary block");
    std::istringstream ls(*line);
    std::string label;
    require(static_cast<bool>(ls >> boundary[i].v0 >> boundary[i].v1 >> label),
            "load_mesh: malformed boundary edge at line " + std::to_string(line_no));
    require(label == "D" || label == "N",
            "load_mesh: boundary label must be D or N at line " + std::to_string(line_no));
    boundary[i].label = label == "D" ? BoundaryLabel::dirichlet : BoundaryLabel::neumann;
  }
  return build_mesh(vertices, triangles, boundary);
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_mesh: cannot open '" + path + "'");
  return load_mesh(in);
}

inline void save_mesh(const Mesh& mesh, std::ostream& out) {
  int nb = 0;
  for (const auto& edge : mesh.edges)
    if (!edge.interior()) ++nb;
  out << mesh.n_vertices() << " " << mesh.n_triangles() << " " << nb << "\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << "\n";
  for (const auto& tri : mesh.tris) out << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
  for (const auto& edge : mesh.edges)
    if (!edge.interior())
      out << edge.v0 << " " << edge.v1 << " " << (edge.dirichlet() ? "D" : "N") << "\n";
}

inline void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_mesh: cannot open '" + path + "'");
  save_mesh(mesh, out);
}

}  // namespace planelast
