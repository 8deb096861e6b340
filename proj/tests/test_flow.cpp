#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "finsler/flow.hpp"
#include "finsler/loop_space.hpp"

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

// Unit-speed start on the equator; east = +1 runs with the wind.
TangentVector equator_start(const MetricSpec& m, int east) {
  const Vec3 x(1, 0, 0), y(0, east, 0);
  return tangent_from_embedding(x, y / eval_F(m, x, y));
}

double equator_length(double eps, int east) { return 2.0 * kPi / (1.0 + east * eps); }

GeodesicRecord equator_record(const MetricSpec& m, int east, int mult = 1) {
  return make_record(m, equator_start(m, east), equator_length(m.wind(), east), mult, false);
}

}  // namespace

TEST_CASE("round equator closes after 2 pi") {
  const MetricSpec m = MetricSpec::round();
  const Trajectory tr = integrate_geodesic(m, equator_start(m, 1), 2.0 * kPi, 1e-12);
  CHECK(tr.duration() == doctest::Approx(2.0 * kPi));
  CHECK(closure_residual(tr) < 1e-8);
  // Half way round sits at the antipode.
  CHECK((tr.position_at(kPi) - Vec3(-1, 0, 0)).norm() < 1e-6);
}

TEST_CASE("flow preserves the norm of the velocity") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const MetricSpec m = MetricSpec::katok(0.4);
  for (int i = 0; i < 10; ++i) {
    const Vec3 x = Vec3(g(rng), g(rng), g(rng)).normalized();
    Vec3 y(g(rng), g(rng), g(rng));
    y -= y.dot(x) * x;
    const TangentVector t = tangent_from_embedding(x, y / eval_F(m, x, y));
    const Trajectory tr = integrate_geodesic(m, t, 7.0, 1e-11);
    for (const auto& s : tr.samples) CHECK(eval_F(m, s.state) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("round Poincare map is the identity") {
  const MetricSpec m = MetricSpec::round();
  const GeodesicRecord rec = equator_record(m, 1);
  CHECK((rec.poincare.m - Mat2::Identity()).norm() < 1e-6);
}

TEST_CASE("katok equator Poincare maps are rotations by 2 pi / (1 +- eps)") {
  for (const double eps : {0.2, 1.0 / kPi}) {
    const MetricSpec m = MetricSpec::katok(eps);
    for (const int east : {1, -1}) {
      const GeodesicRecord rec = equator_record(m, east);
      CHECK(rec.closure_residual < 1e-7);
      const double expected = 2.0 * std::cos(2.0 * kPi / (1.0 + east * eps));
      CHECK(rec.poincare.trace() == doctest::Approx(expected).epsilon(1e-6));
      CHECK(rec.poincare.det() == doctest::Approx(1.0).epsilon(1e-8));
      const SymplecticMatrix2 fd = linearized_poincare_fd(m, rec);
      CHECK((fd.m - rec.poincare.m).norm() < 1e-4);
    }
  }
}

TEST_CASE("eps = 1/pi traces") {
  const MetricSpec m = MetricSpec::katok(1.0 / kPi);
  CHECK(equator_record(m, 1).poincare.trace() == doctest::Approx(0.107).epsilon(5e-3));
  CHECK(equator_record(m, -1).poincare.trace() == doctest::Approx(-1.957).epsilon(5e-4));
}

TEST_CASE("iterate monodromy is the power of the prime map") {
  const MetricSpec m = MetricSpec::katok(0.3);
  const GeodesicRecord prime = equator_record(m, 1);
  for (const int k : {2, 3}) {
    const GeodesicRecord it = equator_record(m, 1, k);
    Mat2 power = Mat2::Identity();
    for (int i = 0; i < k; ++i) power *= prime.poincare.m;
    CHECK((it.poincare.m - power).norm() < 1e-5);
  }
}

TEST_CASE("unclosed curve is rejected") {
  const MetricSpec m = MetricSpec::round();
  GeodesicRecord rec;
  rec.length = 3.0;
  rec.curve = integrate_geodesic(m, equator_start(m, 1), 3.0, 1e-10);
  CHECK_THROWS_AS(linearized_poincare(m, rec, 1e-6), Error);
}

TEST_CASE("linear system monodromy matches the matrix exponential") {
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 1.0, -4.0, 0.0;
  const Eigen::MatrixXd X = integrate_linear_system([&](double) { return A; }, 2, 1.3, 1e-12);
  const Eigen::MatrixXd E = (1.3 * A).exp();
  CHECK((X - E).norm() < 1e-9);
}

TEST_CASE("symplectic matrix guard") {
  Mat2 bad;
  bad << 2.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(SymplecticMatrix2::from(bad), Error);
  Mat2 good;
  good << 2.0, 0.0, 0.0, 0.5;
  CHECK(SymplecticMatrix2::from(good).trace() == doctest::Approx(2.5));
}

TEST_CASE("momentum-first reordering is conjugation by the swap") {
  Mat2 d;
  d << 1.0, 2.0, 3.0, 7.0;
  const Mat2 p = to_momentum_first(d);
  CHECK(p(0, 0) == 7.0);
  CHECK(p(1, 1) == 1.0);
  CHECK(p(0, 1) == 3.0);
  CHECK(p(1, 0) == 2.0);
}

TEST_CASE("trajectory csv") {
  const MetricSpec m = MetricSpec::round();
  const Trajectory tr = integrate_geodesic(m, equator_start(m, 1), 1.0, 1e-10);
  const std::string csv = tr.to_csv();
  CHECK(csv.rfind("time,chart,u1,u2,v1,v2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(tr.samples.size()) + 1);
}
