// Small planar linear-algebra helpers shared by all modules.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace planelast {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

// Signed (twice-)area helpers. cross2 > 0 means b lies counter-clockwise of a.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double triangle_area(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  return 0.5 * cross2(p1 - p0, p2 - p0);
}

// Constant rotation J = [[0,1],[-1,0]]; (tau, J) integrands measure asymmetry.
inline Mat2 rotation_J() {
  Mat2 j;
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

inline double trace2(const Mat2& m) { return m(0, 0) + m(1, 1); }

inline Mat2 deviatoric(const Mat2& m) {
  return m - 0.5 * trace2(m) * Mat2::Identity();
}

inline Mat2 symmetric_part(const Mat2& m) { return 0.5 * (m + m.transpose()); }

// Scalar measure of the antisymmetric part: (as m) : J = m01 - m10.
inline double asymmetry(const Mat2& m) { return m(0, 1) - m(1, 0); }

inline double frobenius2(const Mat2& m) { return m.squaredNorm(); }

}  // namespace planelast
