// Barycentric shape functions for the Lagrange families used here (P1, P2,
// P3) and the nonconforming quadratic bubble.  Values come with barycentric
// derivatives; physical gradients follow via grad = sum_i (dN/dlambda_i) *
// grad_lambda_i with the element's barycentric gradients.
#pragma once

#include <array>

#include <planelast/geometry.hpp>

namespace planelast {

struct ShapeValue {
  double value = 0.0;
  Vec3 dbary = Vec3::Zero();
};

// --- P1 -------------------------------------------------------------------
inline ShapeValue p1_shape(const Vec3& l, int i) {
  ShapeValue s;
  s.value = l[i];
  s.dbary[i] = 1.0;
  return s;
}

// --- P2, local nodes 0..2 vertices, 3+k midpoint of edge opposite vertex k -
inline ShapeValue p2_shape(const Vec3& l, int node) {
  ShapeValue s;
  if (node < 3) {
    s.value = l[node] * (2.0 * l[node] - 1.0);
    s.dbary[node] = 4.0 * l[node] - 1.0;
  } else {
    const int a = (node - 3 + 1) % 3;
    const int b = (node - 3 + 2) % 3;
    s.value = 4.0 * l[a] * l[b];
    s.dbary[a] = 4.0 * l[b];
    s.dbary[b] = 4.0 * l[a];
  }
  return s;
}

// --- P3 pieces --------------------------------------------------------------
inline ShapeValue p3_vertex_shape(const Vec3& l, int i) {
  ShapeValue s;
  s.value = 0.5 * l[i] * (3.0 * l[i] - 1.0) * (3.0 * l[i] - 2.0);
  s.dbary[i] = 0.5 * (27.0 * l[i] * l[i] - 18.0 * l[i] + 2.0);
  return s;
}

// Edge node at barycentric 2/3 toward vertex a, 1/3 toward vertex b.
inline ShapeValue p3_edge_shape(const Vec3& l, int a, int b) {
  ShapeValue s;
  s.value = 4.5 * l[a] * l[b] * (3.0 * l[a] - 1.0);
  s.dbary[a] = 4.5 * l[b] * (6.0 * l[a] - 1.0);
  s.dbary[b] = 4.5 * l[a] * (3.0 * l[a] - 1.0);
  return s;
}

inline ShapeValue p3_center_shape(const Vec3& l) {
  ShapeValue s;
  s.value = 27.0 * l[0] * l[1] * l[2];
  s.dbary = Vec3(27.0 * l[1] * l[2], 27.0 * l[0] * l[2], 27.0 * l[0] * l[1]);
  return s;
}

// --- Nonconforming quadratic bubble ----------------------------------------
// Vanishing zeroth and first moments on all three edges.
inline ShapeValue nonconforming_bubble(const Vec3& l) {
  ShapeValue s;
  s.value = 2.0 - 3.0 * (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]);
  s.dbary = -6.0 * l;
  return s;
}

inline Vec2 physical_gradient(const ShapeValue& s, const std::array<Vec2, 3>& grad_lambda) {
  return s.dbary[0] * grad_lambda[0] + s.dbary[1] * grad_lambda[1] + s.dbary[2] * grad_lambda[2];
}

}  // namespace planelast
