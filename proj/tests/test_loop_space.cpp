#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "finsler/loop_space.hpp"

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec3> equator(int k, int turns = 1, int east = 1) {
  std::vector<Vec3> v;
  for (int i = 0; i < k; ++i) {
    const double a = east * 2.0 * kPi * turns * i / k;
    v.emplace_back(std::cos(a), std::sin(a), 0.0);
  }
  return v;
}

// Small random perturbation of a circle of latitude; segments stay short.
std::vector<Vec3> random_polygon(std::mt19937_64& rng, int k) {
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<Vec3> v;
  for (int i = 0; i < k; ++i) {
    const double a = 2.0 * kPi * i / k;
    v.push_back(Vec3(std::cos(a) + g(rng), std::sin(a) + g(rng), 0.3 + g(rng)).normalized());
  }
  return v;
}

}  // namespace

TEST_CASE("constant loop has zero energy") {
  const std::vector<Vec3> v(10, Vec3(0.0, 0.6, 0.8));
  CHECK(energy(MetricSpec::round(), v) == doctest::Approx(0.0));
  CHECK(energy(MetricSpec::katok(0.5), v) == doctest::Approx(0.0));
}

TEST_CASE("round equator polygon has energy 2 pi^2") {
  for (const int k : {8, 16, 40}) {
    CHECK(energy(MetricSpec::round(), equator(k)) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-12));
  }
}

TEST_CASE("katok equator polygons have energy L^2 / 2") {
  const double eps = 0.3;
  const MetricSpec m = MetricSpec::katok(eps);
  for (const int east : {1, -1}) {
    const double L = 2.0 * kPi / (1.0 + east * eps);
    CHECK(energy(m, equator(24, 1, east)) == doctest::Approx(0.5 * L * L).epsilon(1e-10));
  }
}

TEST_CASE("energy scales by m^2 under iteration") {
  std::mt19937_64 rng(21);
  const MetricSpec m = MetricSpec::katok(0.25);
  for (int t = 0; t < 5; ++t) {
    const PolygonLoop loop = PolygonLoop::from_embedded(random_polygon(rng, 12));
    const double e = energy(m, loop);
    for (const int k : {2, 3}) CHECK(energy(m, loop.iterate(k)) == doctest::Approx(k * k * e).epsilon(1e-10));
  }
}

TEST_CASE("round segment length is the angle") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 q = (p + 0.4 * Vec3(g(rng), g(rng), g(rng))).normalized();
    const double angle = std::acos(std::clamp(p.dot(q), -1.0, 1.0));
    CHECK(segment_length(MetricSpec::round(), p, q) == doctest::Approx(angle).epsilon(1e-12));
  }
}

TEST_CASE("katok segment: shooting along the initial velocity reaches the endpoint") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  const MetricSpec m = MetricSpec::katok(0.4);
  for (int i = 0; i < 30; ++i) {
    const Vec3 p = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 q = (p + 0.5 * Vec3(g(rng), g(rng), g(rng))).normalized();
    const double L = segment_length(m, p, q);
    const Vec3 y = segment_initial_velocity(m, p, q);
    CHECK(eval_F(m, p, y) == doctest::Approx(1.0).epsilon(1e-10));
    const Trajectory tr = integrate_geodesic(m, tangent_from_embedding(p, y), L, 1e-12);
    CHECK((tr.samples.back().position - q).norm() < 1e-8);
  }
}

TEST_CASE("katok segment length obeys the triangle inequality and is not symmetric") {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> g;
  const MetricSpec m = MetricSpec::katok(0.5);
  int asymmetric = 0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 b = (a + 0.3 * Vec3(g(rng), g(rng), g(rng))).normalized();
    const Vec3 c = (a + 0.3 * Vec3(g(rng), g(rng), g(rng))).normalized();
    CHECK(segment_length(m, a, c) <= segment_length(m, a, b) + segment_length(m, b, c) + 1e-12);
    if (std::abs(segment_length(m, a, b) - segment_length(m, b, a)) > 1e-6) ++asymmetric;
  }
  CHECK(asymmetric > 50);
}

TEST_CASE("energy gradient matches central differences") {
  std::mt19937_64 rng(25);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    const MetricSpec m = t % 2 ? MetricSpec::katok(0.3) : MetricSpec::round();
    const std::vector<Vec3> x = random_polygon(rng, 10);
    const Eigen::VectorXd grad = energy_gradient(m, x);
    for (int i = 0; i < 10; ++i) {
      const auto [e1, e2] = tangent_frame(x[i]);
      for (int c = 0; c < 2; ++c) {
        const Vec3 dir = c == 0 ? e1 : e2;
        std::vector<Vec3> xp = x, xm = x;
        xp[i] = (x[i] + h * dir).normalized();
        xm[i] = (x[i] - h * dir).normalized();
        const double fd = (energy(m, xp) - energy(m, xm)) / (2.0 * h);
        CHECK(fd == doctest::Approx(grad[2 * i + c]).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("equator is a critical point with symmetric Hessian") {
  const MetricSpec m = MetricSpec::katok(0.3);
  const std::vector<Vec3> x = equator(20);
  CHECK(energy_gradient(m, x).norm() < 1e-10);
  const Eigen::MatrixXd H = energy_hessian(m, x);
  CHECK((H - H.transpose()).norm() <= 1e-8 * H.norm());
}

TEST_CASE("round equator Hessian counts") {
  const MetricSpec m = MetricSpec::round();
  const IndexPair once = hessian_counts(m, equator(16));
  CHECK(once.index == 1);
  CHECK(once.nullspace_dim == 3);
  const IndexPair twice = hessian_counts(m, equator(32, 2));
  CHECK(twice.index == 3);
  CHECK(twice.nullspace_dim == 3);
  const IndexPair thrice = hessian_counts(m, equator(48, 3));
  CHECK(thrice.index == 5);
  CHECK(thrice.nullspace_dim == 3);
}

TEST_CASE("long segments are rejected") {
  CHECK_THROWS_AS(energy(MetricSpec::round(), equator(3)), Error);
}

TEST_CASE("multiplicity of an iterated record") {
  const MetricSpec m = MetricSpec::katok(0.3);
  const double L = 2.0 * kPi / 1.3;
  const TangentVector start = tangent_from_embedding(Vec3(1, 0, 0), Vec3(0, 1.3, 0));
  const GeodesicRecord rec = make_record(m, start, L, 3, false);
  CHECK(multiplicity(rec, 1e-6) == 3);
  CHECK(rec.length == doctest::Approx(3.0 * L));
}

TEST_CASE("records json round trip") {
  const MetricSpec m = MetricSpec::katok(0.3);
  const TangentVector start = tangent_from_embedding(Vec3(1, 0, 0), Vec3(0, 1.3, 0));
  const GeodesicRecord rec = make_record(m, start, 2.0 * kPi / 1.3, 1, false);
  MetricSpec back_metric;
  const auto back = records_from_json(records_to_json(m, {rec}), &back_metric);
  REQUIRE(back.size() == 1);
  CHECK(back_metric.epsilon == doctest::Approx(0.3));
  CHECK(back[0].length == doctest::Approx(rec.length));
  CHECK(back[0].multiplicity == 1);
  CHECK((back[0].poincare.m - rec.poincare.m).norm() < 1e-9);
  CHECK_THROWS_AS(records_from_json("{not json"), Error);
}
