#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <planelast/quadrature.hpp>

using namespace planelast;

namespace {

// Exact integral of x^a y^b over the reference triangle {x,y >= 0, x+y <= 1}.
double reference_monomial_integral(int a, int b) {
  auto factorial = [](int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
  };
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

double integrate_monomial(const QuadratureRule& rule, int a, int b) {
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const double x = rule.bary[q](1);
    const double y = rule.bary[q](2);
    sum += rule.weights[q] * std::pow(x, a) * std::pow(y, b);
  }
  return sum;
}

}  // namespace

TEST_CASE("triangle rules have positive weights summing to the reference area") {
  for (int degree = 0; degree <= 10; ++degree) {
    const QuadratureRule rule = triangle_rule(degree);
    double sum = 0.0;
    for (double w : rule.weights) {
      REQUIRE(w > 0.0);
      sum += w;
    }
    REQUIRE(sum == Catch::Approx(0.5).epsilon(1e-14));
    for (const Vec3& l : rule.bary) {
      REQUIRE(l.minCoeff() >= 0.0);
      REQUIRE(l.sum() == Catch::Approx(1.0).margin(1e-14));
    }
  }
}

TEST_CASE("low-order triangle rules match their closed forms") {
  const QuadratureRule centroid = triangle_rule(1);
  REQUIRE(centroid.weights.size() == 1);
  REQUIRE(centroid.weights[0] == Catch::Approx(0.5));
  REQUIRE(centroid.bary[0](0) == Catch::Approx(1.0 / 3.0));

  const QuadratureRule three = triangle_rule(2);
  REQUIRE(three.weights.size() == 3);
  for (double w : three.weights) REQUIRE(w == Catch::Approx(1.0 / 6.0));
}

TEST_CASE("triangle rules integrate monomials exactly up to their degree") {
  for (int degree = 0; degree <= 10; ++degree) {
    const QuadratureRule rule = triangle_rule(degree);
    for (int a = 0; a + 0 <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b) {
        const double exact = reference_monomial_integral(a, b);
        REQUIRE(integrate_monomial(rule, a, b) == Catch::Approx(exact).epsilon(1e-12));
      }
  }
}

TEST_CASE("the volume rule integrates x^3 y^4 to 1/2520") {
  // 3! * 4! / 9! = 144 / 362880 = 1/2520.
  const double got = integrate_monomial(volume_rule(), 3, 4);
  REQUIRE(got == Catch::Approx(1.0 / 2520.0).epsilon(1e-13));
}

TEST_CASE("edge rules integrate s^k over [-1,1] exactly up to their degree") {
  for (int degree = 0; degree <= 10; ++degree) {
    const QuadratureRule rule = edge_rule(degree);
    double sum = 0.0;
    for (double w : rule.weights) {
      REQUIRE(w > 0.0);
      sum += w;
    }
    REQUIRE(sum == Catch::Approx(2.0).epsilon(1e-14));
    for (int k = 0; k <= degree; ++k) {
      double got = 0.0;
      for (std::size_t q = 0; q < rule.weights.size(); ++q)
        got += rule.weights[q] * std::pow(rule.s[q], k);
      const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      REQUIRE(got == Catch::Approx(exact).margin(1e-13));
    }
  }
}

TEST_CASE("the degree-3 edge rule is the two-point Gauss rule") {
  const QuadratureRule rule = edge_rule(3);
  REQUIRE(rule.s.size() == 2);
  REQUIRE(rule.s[0] == Catch::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
  REQUIRE(rule.s[1] == Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  REQUIRE(rule.weights[0] == Catch::Approx(1.0));
  REQUIRE(rule.weights[1] == Catch::Approx(1.0));
}

TEST_CASE("unsupported quadrature degrees are rejected") {
  REQUIRE_THROWS(triangle_rule(-1));
  REQUIRE_THROWS(triangle_rule(11));
  REQUIRE_THROWS(edge_rule(-1));
  REQUIRE_THROWS(edge_rule(12));
}

TEST_CASE("quad_rule dispatches on the domain") {
  REQUIRE(quad_rule(Domain::triangle, 2).domain == Domain::triangle);
  REQUIRE(quad_rule(Domain::edge, 2).domain == Domain::edge);
}
