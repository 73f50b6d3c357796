#include "rslam/se2.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rslam;

namespace {

doctest::Approx near(double v, double eps = 1e-12) { return doctest::Approx(v).epsilon(eps); }

Pose2 random_pose(std::mt19937_64& rng, double span = 10.0) {
  std::uniform_real_distribution<double> t(-span, span);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  return Pose2(t(rng), t(rng), a(rng));
}

}  // namespace

TEST_SUITE("se2") {

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == near(kPi));
  CHECK(wrap_angle(-kPi) == near(kPi));
  CHECK(wrap_angle(3.0 * kPi / 2.0) == near(-kPi / 2.0));
  CHECK(wrap_angle(-3.0 * kPi / 2.0) == near(kPi / 2.0));
  CHECK(wrap_angle(2.0 * kPi) == near(0.0));
  CHECK(wrap_angle(7.5 * kPi) == near(-kPi / 2.0));
  for (double a = -20.0; a <= 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::abs(std::remainder(w - a, 2.0 * kPi)) < 1e-9);
  }
}

TEST_CASE("constructors wrap theta") {
  CHECK(Pose2(0, 0, 3.0 * kPi).theta == near(kPi));
  CHECK(Pose2(0, 0, -3.0 * kPi).theta == near(kPi));
  CHECK(Pose2(0, 0, 0.25).theta == 0.25);
  CHECK(Pose2::identity().x == 0.0);
  CHECK(Pose2::identity().theta == 0.0);
}

TEST_CASE("rotation matrices") {
  const double th = 0.7;
  const Eigen::Matrix2d r = rotation2d(th);
  CHECK((r * r.transpose() - Eigen::Matrix2d::Identity()).norm() < 1e-15);
  CHECK(r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0) == near(1.0));
  CHECK(r(0, 0) == near(std::cos(th)));
  CHECK(r(1, 0) == near(std::sin(th)));

  const double h = 1e-6;
  const Eigen::Matrix2d fd = (rotation2d(th + h) - rotation2d(th - h)) / (2.0 * h);
  CHECK((rotation2d_deriv(th) - fd).norm() < 1e-9);
}

TEST_CASE("compose matches the hand-worked case") {
  const Pose2 c = compose(Pose2(1, 2, kPi / 2), Pose2(3, 4, kPi / 4));
  CHECK(c.x == near(-3.0));
  CHECK(c.y == near(5.0));
  CHECK(c.theta == near(3.0 * kPi / 4.0));
}

TEST_CASE("inverse matches the hand-worked case") {
  const Pose2 inv = inverse(Pose2(1, 2, kPi / 2));
  CHECK(inv.x == near(-2.0));
  CHECK(inv.y == near(1.0));
  CHECK(inv.theta == near(-kPi / 2.0));
}

TEST_CASE("group identities hold on random poses") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Pose2 a = random_pose(rng);
    const Pose2 b = random_pose(rng);
    const Pose2 c = random_pose(rng);

    const Pose2 ai = compose(a, inverse(a));
    CHECK(std::abs(ai.x) < 1e-12);
    CHECK(std::abs(ai.y) < 1e-12);
    CHECK(std::abs(ai.theta) < 1e-12);

    const Pose2 lhs = compose(compose(a, b), c);
    const Pose2 rhs = compose(a, compose(b, c));
    CHECK(lhs.x == near(rhs.x, 1e-10));
    CHECK(lhs.y == near(rhs.y, 1e-10));
    CHECK(std::abs(wrap_angle(lhs.theta - rhs.theta)) < 1e-12);

    const Pose2 back = compose(a, between(a, b));
    CHECK(back.x == near(b.x, 1e-10));
    CHECK(back.y == near(b.y, 1e-10));
    CHECK(std::abs(wrap_angle(back.theta - b.theta)) < 1e-12);
  }
}

TEST_CASE("transform_point") {
  const Eigen::Vector2d q = transform_point(Pose2(1, 2, kPi / 2), {1, 0});
  CHECK(q.x() == near(1.0));
  CHECK(q.y() == near(3.0));

  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const Pose2 a = random_pose(rng);
    std::uniform_real_distribution<double> t(-5.0, 5.0);
    const Eigen::Vector2d p(t(rng), t(rng));
    const Pose2 as_pose = compose(a, Pose2(p.x(), p.y(), 0.0));
    const Eigen::Vector2d via = transform_point(a, p);
    CHECK(via.x() == near(as_pose.x, 1e-10));
    CHECK(via.y() == near(as_pose.y, 1e-10));
  }
}

TEST_CASE("log_xytheta reads the coordinates") {
  const Twist2 t = log_xytheta(Pose2(0.5, -0.25, 0.1));
  CHECK(t.dx == 0.5);
  CHECK(t.dy == -0.25);
  CHECK(t.dtheta == 0.1);
  CHECK(t.vec() == Eigen::Vector3d(0.5, -0.25, 0.1));
}

}  // TEST_SUITE
