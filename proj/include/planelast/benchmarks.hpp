// Built-in meshes and problem setups: the Cook membrane with its 44-element
// starting mesh, unit-square generators, and manufactured solutions used for
// verification (a linear patch test, a divergence-free field valid for every
// lambda including the incompressible limit, and a compressible smooth field
// with pressure lambda * div u).
#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <planelast/elasticity.hpp>

namespace planelast {

// --- mesh generators --------------------------------------------------------

// n x n grid of quads, each split into four triangles around its center.
// Every boundary vertex is connected to an interior edge.  Left side
// Dirichlet, the rest Neumann.
inline Mesh unit_square_criss(int n) {
  require(n >= 1, "unit_square_criss: need n >= 1");
  std::vector<Vec2> vertices;
  const auto grid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  const int center0 = static_cast<int>(vertices.size());
  const auto center = [&](int i, int j) { return center0 + j * n + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      vertices.emplace_back((i + 0.5) / n, (j + 0.5) / n);

  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = grid(i, j), b = grid(i + 1, j), c = grid(i + 1, j + 1), d = grid(i, j + 1);
      const int m = center(i, j);
      tris.push_back({a, b, m});
      tris.push_back({b, c, m});
      tris.push_back({c, d, m});
      tris.push_back({d, a, m});
    }
  std::vector<BoundaryEdgeSpec> boundary;
  for (int i = 0; i < n; ++i) {
    boundary.push_back({grid(i, 0), grid(i + 1, 0), BoundaryLabel::neumann});
    boundary.push_back({grid(i, n), grid(i + 1, n), BoundaryLabel::neumann});
  }
  for (int j = 0; j < n; ++j) {
    boundary.push_back({grid(0, j), grid(0, j + 1), BoundaryLabel::dirichlet});
    boundary.push_back({grid(n, j), grid(n, j + 1), BoundaryLabel::neumann});
  }
  return build_mesh(vertices, tris, boundary);
}

// n x n grid of quads split by alternating diagonals.  Left side Dirichlet.
inline Mesh unit_square_diagonal(int n) {
  require(n >= 1, "unit_square_diagonal: need n >= 1");
  std::vector<Vec2> vertices;
  const auto grid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = grid(i, j), b = grid(i + 1, j), c = grid(i + 1, j + 1), d = grid(i, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
      }
    }
  std::vector<BoundaryEdgeSpec> boundary;
  for (int i = 0; i < n; ++i) {
    boundary.push_back({grid(i, 0), grid(i + 1, 0), BoundaryLabel::neumann});
    boundary.push_back({grid(i, n), grid(i + 1, n), BoundaryLabel::neumann});
  }
  for (int j = 0; j < n; ++j) {
    boundary.push_back({grid(0, j), grid(0, j + 1), BoundaryLabel::dirichlet});
    boundary.push_back({grid(n, j), grid(n, j + 1), BoundaryLabel::neumann});
  }
  return build_mesh(vertices, tris, boundary);
}

// Unit square as two triangles (diagonal from the origin), bottom Dirichlet.
// Small enough for dense oracles; note it does not satisfy the recovery
// precondition (one Dirichlet vertex has no interior edge).
inline Mesh unit_square_two_triangles() {
  const std::vector<Vec2> vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  const std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 2, 3}};
  const std::vector<BoundaryEdgeSpec> boundary = {
      {0, 1, BoundaryLabel::neumann},
      {1, 2, BoundaryLabel::neumann},
      {2, 3, BoundaryLabel::neumann},
      {0, 3, BoundaryLabel::dirichlet}};
  return build_mesh(vertices, tris, boundary);
}

// Cook membrane: tapered panel (0,0),(0.48,0.44),(0.48,0.6),(0,0.44),
// clamped on the left edge.  The 44-element starting mesh maps a 4x4 grid
// through the bilinear chart; the left column and the upper-right quads are
// split four ways, the remainder by alternating diagonals.
inline Vec2 cook_chart(double xi, double eta) {
  return Vec2(0.48 * xi, 0.44 * xi + eta * (0.44 - 0.28 * xi));
}

inline Mesh cook_membrane_mesh44() {
  const int n = 4;
  std::vector<Vec2> vertices;
  const auto grid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices.push_back(cook_chart(static_cast<double>(i) / n, static_cast<double>(j) / n));

  const auto crissed = [](int i, int j) { return i == 0 || (j == 3 && i <= 2); };
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = grid(i, j), b = grid(i + 1, j), c = grid(i + 1, j + 1), d = grid(i, j + 1);
      if (crissed(i, j)) {
        const int m = static_cast<int>(vertices.size());
        vertices.push_back(cook_chart((i + 0.5) / n, (j + 0.5) / n));
        tris.push_back({a, b, m});
        tris.push_back({b, c, m});
        tris.push_back({c, d, m});
        tris.push_back({d, a, m});
      } else if ((i + j) % 2 == 0) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
      }
    }
  std::vector<BoundaryEdgeSpec> boundary;
  for (int i = 0; i < n; ++i) {
    boundary.push_back({grid(i, 0), grid(i + 1, 0), BoundaryLabel::neumann});
    boundary.push_back({grid(i, n), grid(i + 1, n), BoundaryLabel::neumann});
  }
  for (int j = 0; j < n; ++j) {
    boundary.push_back({grid(0, j), grid(0, j + 1), BoundaryLabel::dirichlet});
    boundary.push_back({grid(n, j), grid(n, j + 1), BoundaryLabel::neumann});
  }
  return build_mesh(vertices, tris, boundary);
}

// --- problem setups -----------------------------------------------------------

enum class BenchmarkKind { cook, manufactured_smooth, manufactured_divfree, patch_test };

struct BenchmarkSetup {
  std::string name;
  BenchmarkKind kind = BenchmarkKind::cook;
  Mesh initial_mesh;
  double mu = 1.0;
  double lambda_inv = 0.0;
  VolumeFunction body_force;
  BoundaryFunction traction;
  bool has_exact = false;
  std::function<Vec2(const Vec2&)> exact_u;
  std::function<Mat2(const Vec2&)> exact_grad_u;
  std::function<double(const Vec2&)> exact_p;

  ElasticityProblem problem_on(const Mesh& mesh) const {
    ElasticityProblem p;
    p.mesh = &mesh;
    p.mu = mu;
    p.lambda_inv = lambda_inv;
    p.body_force = body_force;
    p.traction = traction;
    return p;
  }
};

inline double lambda_inv_from_poisson(double nu, double mu) {
  require(nu > 0.0 && nu <= 0.5, "lambda_inv_from_poisson: need 0 < nu <= 0.5");
  return (1.0 - 2.0 * nu) / (2.0 * mu * nu);
}

// Cook membrane: no body force, unit vertical shear traction on the right
// edge, traction-free top and bottom.
inline BenchmarkSetup cook_setup(double nu, double mu = 1.0) {
  BenchmarkSetup b;
  b.name = "cook";
  b.kind = BenchmarkKind::cook;
  b.initial_mesh = cook_membrane_mesh44();
  b.mu = mu;
  b.lambda_inv = lambda_inv_from_poisson(nu, mu);
  b.body_force = [](const Vec2&) { return Vec2::Zero(); };
  b.traction = [](const Vec2&, const Vec2& n) {
    // The right edge of the panel is vertical, so its outward normal is
    // exactly (1,0); the slanted top/bottom edges are traction-free.
    return n.x() > 0.99 ? Vec2(0.0, 1.0) : Vec2(0.0, 0.0);
  };
  return b;
}

namespace detail {

inline void attach_exact(BenchmarkSetup& b, std::function<Vec2(const Vec2&)> u,
                         std::function<Mat2(const Vec2&)> grad_u,
                         std::function<double(const Vec2&)> p) {
  b.has_exact = true;
  b.exact_u = std::move(u);
  b.exact_grad_u = std::move(grad_u);
  b.exact_p = std::move(p);
  const double mu = b.mu;
  auto gu = b.exact_grad_u;
  auto pp = b.exact_p;
  b.traction = [mu, gu, pp](const Vec2& x, const Vec2& n) {
    const Mat2 sigma = 2.0 * mu * symmetric_part(gu(x)) + pp(x) * Mat2::Identity();
    return Vec2(sigma.row(0).dot(n), sigma.row(1).dot(n));
  };
}

}  // namespace detail

// Linear displacement, zero pressure: reproduced exactly by the discrete
// spaces, so every error measure vanishes.
inline BenchmarkSetup patch_test_setup(double lambda_inv = 0.0, double mu = 1.0, int n = 1) {
  BenchmarkSetup b;
  b.name = "patch-test";
  b.kind = BenchmarkKind::patch_test;
  b.initial_mesh = unit_square_criss(n);
  b.mu = mu;
  b.lambda_inv = lambda_inv;
  b.body_force = [](const Vec2&) { return Vec2::Zero(); };
  detail::attach_exact(
      b, [](const Vec2& x) { return Vec2(0.0, -2.0 * x.x()); },
      [](const Vec2&) {
        Mat2 g;
        g << 0.0, 0.0, -2.0, 0.0;
        return g;
      },
      [](const Vec2&) { return 0.0; });
  return b;
}

// u = curl(psi) with psi = x^2 (1-x)^2 sin(pi y): exactly divergence free,
// vanishing on the left edge, zero exact pressure.  Valid for every
// lambda_inv >= 0 with identical data, which makes it the robustness probe.
inline BenchmarkSetup manufactured_divfree_setup(double lambda_inv, double mu = 1.0, int n = 2) {
  BenchmarkSetup b;
  b.name = "manufactured-divfree";
  b.kind = BenchmarkKind::manufactured_divfree;
  b.initial_mesh = unit_square_criss(n);
  b.mu = mu;
  b.lambda_inv = lambda_inv;
  const auto q = [](double x) { return x * x * (1.0 - x) * (1.0 - x); };
  const auto dq = [](double x) { return 2.0 * x - 6.0 * x * x + 4.0 * x * x * x; };
  const auto d2q = [](double x) { return 2.0 - 12.0 * x + 12.0 * x * x; };
  const auto d3q = [](double x) { return -12.0 + 24.0 * x; };
  const double pi = M_PI;
  b.body_force = [=](const Vec2& x) {
    const double s = std::sin(pi * x.y());
    const double c = std::cos(pi * x.y());
    return Vec2(-mu * pi * c * (d2q(x.x()) - pi * pi * q(x.x())),
                mu * s * (d3q(x.x()) - pi * pi * dq(x.x())));
  };
  detail::attach_exact(
      b,
      [=](const Vec2& x) {
        return Vec2(pi * q(x.x()) * std::cos(pi * x.y()), -dq(x.x()) * std::sin(pi * x.y()));
      },
      [=](const Vec2& x) {
        const double s = std::sin(pi * x.y());
        const double c = std::cos(pi * x.y());
        Mat2 g;
        g << pi * dq(x.x()) * c, -pi * pi * q(x.x()) * s, -d2q(x.x()) * s, -pi * dq(x.x()) * c;
        return g;
      },
      [](const Vec2&) { return 0.0; });
  return b;
}

// Compressible smooth field with p = lambda * div u; requires finite lambda.
inline BenchmarkSetup manufactured_smooth_setup(double lambda_inv, double mu = 1.0, int n = 2) {
  require(lambda_inv > 0.0,
          "manufactured_smooth_setup: pressure is lambda * div u, so lambda must be finite");
  BenchmarkSetup b;
  b.name = "manufactured-smooth";
  b.kind = BenchmarkKind::manufactured_smooth;
  b.initial_mesh = unit_square_criss(n);
  b.mu = mu;
  b.lambda_inv = lambda_inv;
  const double lambda = 1.0 / lambda_inv;
  const double pi = M_PI;
  b.body_force = [=](const Vec2& xy) {
    const double x = xy.x(), y = xy.y();
    const double s = std::sin(pi * y), c = std::cos(pi * y);
    const double f1 = -(4.0 * mu * s + lambda * (2.0 * s + 2.0 * x * (1.0 - 2.0 * y)) +
                        mu * (-pi * pi * x * x * s + 2.0 * x * (1.0 - 2.0 * y)));
    const double f2 = -(mu * (2.0 * pi * x * c + 2.0 * (y - y * y)) - 4.0 * mu * x * x +
                        lambda * (2.0 * pi * x * c - 2.0 * x * x));
    return Vec2(f1, f2);
  };
  detail::attach_exact(
      b,
      [=](const Vec2& xy) {
        return Vec2(xy.x() * xy.x() * std::sin(pi * xy.y()),
                    xy.x() * xy.x() * xy.y() * (1.0 - xy.y()));
      },
      [=](const Vec2& xy) {
        const double x = xy.x(), y = xy.y();
        Mat2 g;
        g << 2.0 * x * std::sin(pi * y), pi * x * x * std::cos(pi * y), 2.0 * x * y * (1.0 - y),
            x * x * (1.0 - 2.0 * y);
        return g;
      },
      [=](const Vec2& xy) {
        const double x = xy.x(), y = xy.y();
        return lambda * (2.0 * x * std::sin(pi * y) + x * x * (1.0 - 2.0 * y));
      });
  return b;
}

}  // namespace planelast
