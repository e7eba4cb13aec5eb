#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "acorrect/geometry.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace acorrect;
using std::numbers::pi;

namespace {

RigidTransform2 random_transform(std::mt19937_64& gen, double max_t = 50.0) {
  std::uniform_real_distribution<double> t(-max_t, max_t), a(-pi, pi);
  return {t(gen), t(gen), a(gen)};
}

void check_close(const RigidTransform2& a, const RigidTransform2& b, double tol) {
  CHECK(std::abs(a.tx() - b.tx()) <= tol);
  CHECK(std::abs(a.ty() - b.ty()) <= tol);
  CHECK(std::abs(normalize_angle(a.theta() - b.theta())) <= tol);
}

}  // namespace

TEST_CASE("identity is the zero transform and the identity matrix") {
  const auto id = RigidTransform2::identity();
  CHECK(id.tx() == 0.0);
  CHECK(id.ty() == 0.0);
  CHECK(id.theta() == 0.0);
  CHECK(id.to_matrix() == Eigen::Matrix3d::Identity());
  const RigidTransform2 g(3.0, -2.0, 0.4);
  check_close(compose(id, g), g, 1e-12);
  check_close(compose(g, id), g, 1e-12);
}

TEST_CASE("compose follows the matrix product") {
  check_close(compose({5, 0, 0}, {0, 3, 0}), {5, 3, 0}, 1e-12);
  const RigidTransform2 c = compose({0, 0, pi / 2}, {10, 0, 0});
  const Eigen::Matrix3d expected = oracle::matrix(0, 0, pi / 2) * oracle::matrix(10, 0, 0);
  CHECK(oracle::max_abs_diff(c.to_matrix(), expected) < 1e-12);
  check_close(c, {0, 10, pi / 2}, 1e-12);

  std::mt19937_64 gen(4);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_transform(gen), b = random_transform(gen);
    CHECK(oracle::max_abs_diff(compose(a, b).to_matrix(), oracle::matrix(a) * oracle::matrix(b)) < 1e-12);
  }
}

TEST_CASE("inverse matches the numerical matrix inverse") {
  check_close(inverse(RigidTransform2::identity()), {0, 0, 0}, 0.0);
  check_close(inverse({5, 0, 0}), {-5, 0, 0}, 1e-15);
  const RigidTransform2 inv = inverse({10, 0, pi / 2});
  CHECK(oracle::max_abs_diff(inv.to_matrix(), oracle::matrix(10, 0, pi / 2).inverse()) < 1e-12);
  check_close(inv, {0, 10, -pi / 2}, 1e-12);
}

TEST_CASE("theta stays in (-pi, pi]") {
  CHECK(normalize_angle(pi) == doctest::Approx(pi));
  CHECK(normalize_angle(-pi) == doctest::Approx(pi));
  CHECK(normalize_angle(3 * pi) == doctest::Approx(pi));
  CHECK(normalize_angle(2 * pi + 0.25) == doctest::Approx(0.25));
  CHECK(RigidTransform2(0, 0, -3 * pi / 2).theta() == doctest::Approx(pi / 2));
  std::mt19937_64 gen(9);
  for (int i = 0; i < 500; ++i) {
    const auto t = compose(random_transform(gen), random_transform(gen));
    CHECK(t.theta() > -pi);
    CHECK(t.theta() <= pi);
  }
}

TEST_CASE("to_matrix has an orthonormal rotation block with determinant one") {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Matrix3d m = random_transform(gen).to_matrix();
    const Eigen::Matrix2d r = m.topLeftCorner<2, 2>();
    CHECK((r.transpose() * r - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
    CHECK(m(2, 0) == 0.0);
    CHECK(m(2, 1) == 0.0);
    CHECK(m(2, 2) == 1.0);
  }
}

TEST_CASE("rotation_about fixes its center") {
  check_close(rotation_about({0, 0}, 0.7), {0, 0, 0.7}, 1e-15);
  check_close(rotation_about({12, -3}, 0.0), RigidTransform2::identity(), 1e-15);
  const Point2 p = apply(rotation_about({4, 0}, pi), {4, 1});
  CHECK(std::abs(p.x - 4.0) < 1e-12);
  CHECK(std::abs(p.y + 1.0) < 1e-12);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-60, 60), a(-pi, pi);
  for (int i = 0; i < 500; ++i) {
    const Point2 c{u(gen), u(gen)};
    const double th = a(gen);
    const auto r = rotation_about(c, th);
    const Point2 q = apply(r, c);
    CHECK(std::hypot(q.x - c.x, q.y - c.y) < 1e-9);
    CHECK(std::abs(normalize_angle(r.theta() - th)) < 1e-12);
  }
}

TEST_CASE("apply is the homogeneous action") {
  const Point2 p = apply(RigidTransform2::identity(), {3.5, -1});
  CHECK(p == Point2{3.5, -1});
  const Point2 q = apply({3, 4, 0}, {0, 0});
  CHECK(q == Point2{3, 4});
  const Point2 r = apply({0, 0, pi / 2}, {1, 0});
  CHECK(std::abs(r.x) < 1e-15);
  CHECK(std::abs(r.y - 1.0) < 1e-15);
}

TEST_CASE("group laws on 1000 random triples") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-80, 80);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_transform(gen), b = random_transform(gen), c = random_transform(gen);
    check_close(compose(a, compose(b, c)), compose(compose(a, b), c), 1e-9);
    check_close(compose(a, inverse(a)), RigidTransform2::identity(), 1e-9);
    check_close(compose(inverse(a), a), RigidTransform2::identity(), 1e-9);
    const Point2 p{u(gen), u(gen)};
    const Point2 lhs = apply(compose(a, b), p), rhs = apply(a, apply(b, p));
    CHECK(std::hypot(lhs.x - rhs.x, lhs.y - rhs.y) < 1e-9);
  }
}

TEST_CASE("transform_distance_sq") {
  const double s = 64.0;
  const RigidTransform2 g(3, 4, 0.1);
  CHECK(transform_distance_sq(g, g, s) == 0.0);
  CHECK(transform_distance_sq({s, 0, 0}, RigidTransform2::identity(), s) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(transform_distance_sq(g, g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(transform_distance_sq(g, g, -1.0), std::invalid_argument);

  SUBCASE("matches an entrywise Frobenius sum") {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 300; ++i) {
      const auto a = random_transform(gen), b = random_transform(gen);
      const double d = transform_distance_sq(a, b, s);
      CHECK(d == doctest::Approx(oracle::frobenius_sq(oracle::matrix(a), oracle::matrix(b), s)).epsilon(1e-12));
      CHECK(d >= 0.0);
      CHECK(d == doctest::Approx(transform_distance_sq(b, a, s)).epsilon(1e-14));
      if (!(a == b)) CHECK(d > 0.0);
    }
  }
  SUBCASE("decreases monotonically as a translation approaches its target") {
    const RigidTransform2 target(7, -2, 0.0);
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 40; ++k) {
      const RigidTransform2 a(7 + 40.0 - k, -2, 0.0);
      const double d = transform_distance_sq(a, target, s);
      CHECK(d < previous);
      previous = d;
    }
    CHECK(previous == 0.0);
  }
}

TEST_CASE("JSON shapes") {
  const RigidTransform2 t(1.25, -3.5, 0.3);
  const nlohmann::json j = t;
  CHECK(j.size() == 3);
  CHECK(j.at("tx").get<double>() == 1.25);
  CHECK(j.at("ty").get<double>() == -3.5);
  CHECK(j.at("theta").get<double>() == 0.3);
  CHECK(nlohmann::json::parse(j.dump()).get<RigidTransform2>() == t);
  const nlohmann::json p = Point2{2, 3};
  CHECK(p.dump() == "[2.0,3.0]");
  CHECK(p.get<Point2>() == Point2{2, 3});
}
