#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "finsler/classifier.hpp"

using namespace finsler;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat2 rot(double a) {
  Mat2 r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

// Product of a shear, a rotation and a diagonal scaling; det = 1.
Mat2 random_symplectic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> s(-1.0, 1.0), a(0.0, kTwoPi), l(-0.7, 0.7);
  Mat2 shear, scale;
  shear << 1.0, s(rng), 0.0, 1.0;
  const double lambda = std::exp(l(rng));
  scale << lambda, 0.0, 0.0, 1.0 / lambda;
  return shear * rot(a(rng)) * scale;
}

ClassifyOptions with_rational(int max_den = 64) {
  ClassifyOptions o;
  o.max_denominator = max_den;
  return o;
}

PoincareClass random_class(std::mt19937_64& rng, int t) {
  std::uniform_real_distribution<double> b(0.1, 2.0), u(0.0, 1.0);
  switch (t % 9) {
    case 0: return PoincareClass::cg1(b(rng));
    case 1: return PoincareClass::cg2();
    case 2: return PoincareClass::cg3(b(rng));
    case 3: return PoincareClass::cg4(b(rng));
    case 4: return PoincareClass::cg5();
    case 5: return PoincareClass::cg6(b(rng));
    case 6: {
      static const std::int64_t kn[][2] = {{1, 3}, {2, 3}, {1, 4}, {3, 4}, {1, 5}, {2, 5}, {5, 7}, {7, 12}};
      const auto& f = kn[t / 9 % 8];
      return PoincareClass::cg7(f[0], f[1]);
    }
    case 7: {
      // Keep away from fractions with small denominators and from 1/2.
      double s = 0.0;
      do s = 0.02 + 0.96 * u(rng);
      while (detect_rational_angle(kTwoPi * s, 64, 1e-4).has_value());
      return PoincareClass::cg8(s);
    }
    default: return PoincareClass::cg9((u(rng) < 0.5 ? -1.0 : 1.0) * (1.5 + 3.0 * u(rng)));
  }
}

void check_same_invariants(const PoincareClass& a, const PoincareClass& b) {
  REQUIRE(a.tag == b.tag);
  if (a.tag == CGClass::CG7) CHECK(a.sigma_exact == b.sigma_exact);
  if (a.tag == CGClass::CG8) CHECK(a.sigma == doctest::Approx(b.sigma).epsilon(1e-7));
  if (a.tag == CGClass::CG9) CHECK(a.b == doctest::Approx(b.b).epsilon(1e-7));
}

}  // namespace

TEST_CASE("classify examples") {
  CHECK(classify(Mat2::Identity()).tag == CGClass::CG2);

  Mat2 shear;
  shear << 1.0, 0.5, 0.0, 1.0;
  const PoincareClass c1 = classify(shear);
  CHECK(c1.tag == CGClass::CG1);
  CHECK(c1.b == doctest::Approx(0.5));

  const PoincareClass c7 = classify(rot(kTwoPi / 3.0), with_rational());
  CHECK(c7.tag == CGClass::CG7);
  CHECK(c7.sigma_exact == Rational(1, 3));
  CHECK(c7.describe() == "CG-7(sigma=1/3)");

  Mat2 hyp;
  hyp << 2.0, 0.0, 0.0, 0.5;
  const PoincareClass c9 = classify(hyp);
  CHECK(c9.tag == CGClass::CG9);
  CHECK(c9.b == doctest::Approx(2.0));
}

TEST_CASE("numeric rotation without a denominator bound is irrational") {
  const PoincareClass c = classify(rot(kTwoPi / 3.0));
  CHECK(c.tag == CGClass::CG8);
  CHECK(c.sigma == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("rotation orientation gives sigma and 1 - sigma") {
  const PoincareClass a = classify(rot(kTwoPi * 0.2), with_rational());
  const PoincareClass b = classify(rot(-kTwoPi * 0.2), with_rational());
  CHECK(a.sigma_exact == Rational(1, 5));
  CHECK(b.sigma_exact == Rational(4, 5));
}

TEST_CASE("normal form examples") {
  CHECK((normal_form(PoincareClass::cg5()).m + Mat2::Identity()).norm() == 0.0);
  Mat2 cg4;
  cg4 << -1.0, -1.0, 0.0, -1.0;
  CHECK((normal_form(PoincareClass::cg4(1.0)).m - cg4).norm() == 0.0);
  CHECK((normal_form(PoincareClass::cg7(1, 4)).m - rot(std::numbers::pi / 2.0)).norm() < 1e-15);
}

TEST_CASE("classify inverts normal_form on all classes") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 900; ++t) {
    const PoincareClass cls = random_class(rng, t);
    check_same_invariants(classify(normal_form(cls), with_rational()), cls);
  }
}

TEST_CASE("classification is invariant under symplectic conjugation") {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 1000; ++t) {
    const PoincareClass cls = random_class(rng, t);
    const Mat2 S = random_symplectic(rng);
    const Mat2 P = S * normal_form(cls).m * S.inverse();
    check_same_invariants(classify(P, with_rational()), cls);
  }
}

TEST_CASE("detect_rational_angle") {
  CHECK(detect_rational_angle(kTwoPi / 3.0, 64, 1e-6) == Rational(1, 3));
  CHECK(detect_rational_angle(kTwoPi * 0.333333, 50, 1e-4) == Rational(1, 3));
  CHECK_FALSE(detect_rational_angle(kTwoPi / std::sqrt(2.0), 100, 1e-9).has_value());
}

TEST_CASE("classification errors") {
  Mat2 bad;
  bad << 2.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(classify(bad), Error);
  // Trace within eig_tol of 2, too far from I to be I, too small to call a shear.
  Mat2 ambiguous;
  ambiguous << 1.0 + 1e-5, 0.0, 0.0, 1.0 / (1.0 + 1e-5);
  CHECK_THROWS_AS(classify(ambiguous), Error);
}

TEST_CASE("class names and matrix parsing") {
  CHECK(class_name(CGClass::CG4) == "CG-4");
  CHECK(parse_class_name("cg7") == CGClass::CG7);
  CHECK(parse_class_name("CG-9") == CGClass::CG9);
  CHECK(parse_class_name("3") == CGClass::CG3);
  CHECK_THROWS_AS(parse_class_name("CG-10"), Error);
  const Mat2 m = parse_matrix("1,2,3,4");
  CHECK(m(0, 1) == 2.0);
  CHECK(m(1, 0) == 3.0);
  CHECK_THROWS_AS(parse_matrix("1,2,3"), Error);
  CHECK_THROWS_AS(parse_matrix("1,2,x,4"), Error);
}
