// Fixed quadrature rules: symmetric low-order triangle rules, collapsed
// tensor-product Gauss rules for higher degrees, Gauss-Legendre on edges.
#pragma once

#include <cmath>
#include <vector>

#include <planelast/geometry.hpp>

namespace planelast {

enum class Domain { triangle, edge };

// Volume points carry barycentric coordinates and reference weights summing
// to the reference area 1/2.  Edge points carry a parameter s in [-1,1] and
// weights summing to 2.  Physical integrals scale by 2*|T| resp. |E|/2.
struct QuadratureRule {
  Domain domain;
  int degree = 0;
  std::vector<Vec3> bary;       // triangle rules
  std::vector<double> s;        // edge rules
  std::vector<double> weights;  // reference weights
};

namespace detail {

struct Gauss1d {
  std::vector<double> x;  // nodes on [-1,1]
  std::vector<double> w;  // weights summing to 2
};

inline Gauss1d gauss_legendre(int n) {
  Gauss1d g;
  switch (n) {
    case 1:
      g.x = {0.0};
      g.w = {2.0};
      break;
    case 2:
      g.x = {-0.57735026918962576451, 0.57735026918962576451};
      g.w = {1.0, 1.0};
      break;
    case 3:
      g.x = {-0.77459666924148337704, 0.0, 0.77459666924148337704};
      g.w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    case 4:
      g.x = {-0.86113631159405257522, -0.33998104358485626480,
             0.33998104358485626480, 0.86113631159405257522};
      g.w = {0.34785484513745385737, 0.65214515486254614263,
             0.65214515486254614263, 0.34785484513745385737};
      break;
    case 5:
      g.x = {-0.90617984593866399280, -0.53846931010568309104, 0.0,
             0.53846931010568309104, 0.90617984593866399280};
      g.w = {0.23692688505618908751, 0.47862867049936646804,
             0.56888888888888888889, 0.47862867049936646804,
             0.23692688505618908751};
      break;
    case 6:
      g.x = {-0.93246951420315202781, -0.66120938646626451366,
             -0.23861918608319690863, 0.23861918608319690863,
             0.66120938646626451366, 0.93246951420315202781};
      g.w = {0.17132449237917034504, 0.36076157304813860757,
             0.46791393457269104739, 0.46791393457269104739,
             0.36076157304813860757, 0.17132449237917034504};
      break;
    default:
      throw std::runtime_error("gauss_legendre: unsupported point count " + std::to_string(n));
  }
  return g;
}

}  // namespace detail

inline QuadratureRule triangle_rule(int degree) {
  require(degree >= 0 && degree <= 10,
          "triangle_rule: unsupported exactness degree " + std::to_string(degree));
  QuadratureRule rule;
  rule.domain = Domain::triangle;
  rule.degree = degree;
  if (degree <= 1) {
    rule.bary = {Vec3(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)};
    rule.weights = {0.5};
    return rule;
  }
  if (degree == 2) {
    rule.bary = {Vec3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
                 Vec3(1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0),
                 Vec3(1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)};
    rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    return rule;
  }
  // Collapsed (Duffy) tensor-product Gauss rule: x = xi, y = eta*(1-xi),
  // Jacobian (1-xi).  All weights positive, exact for total degree <= `degree`.
  const int n_xi = (degree + 3) / 2;   // integrand degree in xi is degree+1
  const int n_eta = (degree + 2) / 2;  // integrand degree in eta is degree
  const auto gx = detail::gauss_legendre(n_xi);
  const auto ge = detail::gauss_legendre(n_eta);
  for (int i = 0; i < n_xi; ++i) {
    const double xi = 0.5 * (gx.x[i] + 1.0);
    const double wxi = 0.5 * gx.w[i];
    for (int j = 0; j < n_eta; ++j) {
      const double eta = 0.5 * (ge.x[j] + 1.0);
      const double weta = 0.5 * ge.w[j];
      const double x = xi;
      const double y = eta * (1.0 - xi);
      rule.bary.emplace_back(1.0 - x - y, x, y);
      rule.weights.push_back(wxi * weta * (1.0 - xi));
    }
  }
  return rule;
}

inline QuadratureRule edge_rule(int degree) {
  require(degree >= 0 && degree <= 10,
          "edge_rule: unsupported exactness degree " + std::to_string(degree));
  const int n = (degree + 2) / 2 > 1 ? (degree + 2) / 2 : 1;
  const auto g = detail::gauss_legendre(n);
  QuadratureRule rule;
  rule.domain = Domain::edge;
  rule.degree = degree;
  rule.s = g.x;
  rule.weights = g.w;
  return rule;
}

inline QuadratureRule quad_rule(Domain domain, int degree) {
  return domain == Domain::triangle ? triangle_rule(degree) : edge_rule(degree);
}

// Library-wide fixed exactness degrees: every volume integral uses the
// degree-7 rule and every edge integral the degree-5 rule, so that identical
// inputs integrate identically everywhere.
inline constexpr int kVolumeQuadDegree = 7;
inline constexpr int kEdgeQuadDegree = 5;

inline const QuadratureRule& volume_rule() {
  static const QuadratureRule rule = triangle_rule(kVolumeQuadDegree);
  return rule;
}

inline const QuadratureRule& boundary_rule() {
  static const QuadratureRule rule = edge_rule(kEdgeQuadDegree);
  return rule;
}

}  // namespace planelast
