#include <doctest.h>

#include <cmath>
#include <random>

#include "finsler/index_iteration.hpp"
#include "oracles.hpp"

using namespace finsler;

namespace {

std::vector<std::pair<PoincareClass, int>> sample_classes(std::mt19937_64& rng, int count) {
  std::uniform_int_distribution<int> den(3, 40), pp(0, 4);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<std::pair<PoincareClass, int>> out;
  for (int t = 0; t < count; ++t) {
    PoincareClass c;
    switch (t % 9) {
      case 0: c = PoincareClass::cg1(0.5); break;
      case 1: c = PoincareClass::cg2(); break;
      case 2: c = PoincareClass::cg3(0.5); break;
      case 3: c = PoincareClass::cg4(1.0); break;
      case 4: c = PoincareClass::cg5(); break;
      case 5: c = PoincareClass::cg6(1.0); break;
      case 6: {
        std::int64_t n = den(rng), k = 1;
        do k = std::uniform_int_distribution<std::int64_t>(1, n - 1)(rng);
        while (std::gcd(k, n) != 1 || 2 * k == n);
        c = PoincareClass::cg7(k, n);
        break;
      }
      case 7: c = PoincareClass::cg8(std::fmod(u(rng) * std::sqrt(2.0), 1.0) * 0.98 + 0.01); break;
      default: c = PoincareClass::cg9(2.0); break;
    }
    out.emplace_back(c, std::max(pp(rng), min_p(c.tag)));
  }
  return out;
}

}  // namespace

TEST_CASE("index_sequence examples") {
  const IndexSequence a = index_sequence(PoincareClass::cg2(), 1, 3);
  CHECK(a.i == std::vector<std::int64_t>{1, 3, 5});
  CHECK(a.nu == std::vector<int>{2, 2, 2});

  const IndexSequence b = index_sequence(PoincareClass::cg7(1, 3), 0, 3);
  CHECK(b.i == std::vector<std::int64_t>{1, 1, 1});
  CHECK(b.nu == std::vector<int>{0, 0, 2});

  const IndexSequence c = index_sequence(PoincareClass::cg4(0.7), 0, 4);
  CHECK(c.i == std::vector<std::int64_t>{1, 1, 3, 3});
  CHECK(c.nu == std::vector<int>{0, 1, 0, 1});

  const IndexSequence d = index_sequence(PoincareClass::cg9(2.0), 1, 4);
  CHECK(d.i == std::vector<std::int64_t>{1, 2, 3, 4});
  CHECK(d.nu == std::vector<int>{0, 0, 0, 0});
  CHECK(a.to_csv() == "m,i,nu\n1,1,2\n2,3,2\n3,5,2\n");
}

TEST_CASE("mean index examples") {
  CHECK(mean_index(PoincareClass::cg7(1, 3), 0).value == Rational(2, 3));
  CHECK(mean_index(PoincareClass::cg9(2.0), 1).value == Rational(1));
  const MeanIndex irr = mean_index(PoincareClass::cg8(0.3), 0);
  CHECK_FALSE(irr.exact);
  CHECK(irr.approx == doctest::Approx(0.6));
  CHECK(mean_index(PoincareClass::cg1(1.0), 2).value == Rational(4));
  CHECK(mean_index(PoincareClass::cg6(1.0), 1).value == Rational(3));
  CHECK(mean_index(PoincareClass::cg7(1, 3), 0).to_string() == "2/3");
}

TEST_CASE("epsilon signs") {
  const IndexSequence six = index_sequence(PoincareClass::cg6(1.0), 0, 8);
  for (int m = 1; m <= 8; ++m) CHECK(epsilon_sign(six, m) == (m % 2 == 0 ? -1 : 1));
  const IndexSequence seven = index_sequence(PoincareClass::cg7(2, 5), 1, 20);
  const IndexSequence two = index_sequence(PoincareClass::cg2(), 1, 20);
  for (int m = 1; m <= 20; ++m) {
    CHECK(epsilon_sign(seven, m) == 1);
    CHECK(epsilon_sign(two, m) == 1);
  }
}

TEST_CASE("first degenerate order") {
  CHECK(first_degenerate_order(PoincareClass::cg4(1.0)) == 2);
  CHECK(first_degenerate_order(PoincareClass::cg7(2, 5)) == 5);
  CHECK_FALSE(first_degenerate_order(PoincareClass::cg8(0.3)).has_value());
  CHECK(first_degenerate_order(PoincareClass::cg1(1.0)) == 1);
  CHECK_FALSE(first_degenerate_order(PoincareClass::cg9(3.0)).has_value());
}

TEST_CASE("p range") {
  CHECK_THROWS_AS(index_sequence(PoincareClass::cg2(), 0, 3), Error);
  CHECK_THROWS_AS(check_p(PoincareClass::cg4(1.0), -1), Error);
  CHECK_NOTHROW(check_p(PoincareClass::cg9(2.0), 0));
}

TEST_CASE("sequences agree with the closed forms up to m = 1000") {
  std::mt19937_64 rng(41);
  for (const auto& [c, p] : sample_classes(rng, 90)) {
    const IndexSequence s = index_sequence(c, p, 1000);
    for (int m = 1; m <= 1000; ++m) {
      REQUIRE(s.i[m - 1] == oracle::index(c, p, m));
      REQUIRE(s.nu[m - 1] == oracle::nullity(c, m));
    }
  }
}

TEST_CASE("degeneracy happens exactly at multiples of n_c") {
  std::mt19937_64 rng(42);
  for (const auto& [c, p] : sample_classes(rng, 90)) {
    const auto n = first_degenerate_order(c);
    const IndexSequence s = index_sequence(c, p, 1000);
    CHECK(s.n_c == n);
    for (int m = 1; m <= 1000; ++m) CHECK((s.nu[m - 1] > 0) == (n.has_value() && m % *n == 0));
  }
}

TEST_CASE("index stays within 2 of m times the mean index") {
  std::mt19937_64 rng(43);
  for (const auto& [c, p] : sample_classes(rng, 450)) {
    const IndexSequence s = index_sequence(c, p, 1000);
    const double alpha = s.alpha.exact ? boost::rational_cast<double>(s.alpha.value) : s.alpha.approx;
    for (int m = 1; m <= 1000; ++m) CHECK(std::abs(s.i[m - 1] - m * alpha) <= 2.0);
    if (alpha > 0) CHECK(s.i[999] >= 500 * alpha);
    for (int m = 1; m <= 1000; ++m) CHECK((s.nu[m - 1] >= 0 && s.nu[m - 1] <= 2));
  }
}

TEST_CASE("CG-1 and CG-2 indices have constant parity") {
  for (const auto& c : {PoincareClass::cg1(0.3), PoincareClass::cg2()}) {
    for (int p = 1; p <= 3; ++p) {
      const IndexSequence s = index_sequence(c, p, 200);
      for (int m = 1; m <= 200; ++m) CHECK((s.i[m - 1] - s.i[0]) % 2 == 0);
    }
  }
}

TEST_CASE("iteration pattern reproduces the sequence") {
  std::mt19937_64 rng(44);
  for (const auto& [c, p] : sample_classes(rng, 90)) {
    const auto pat = iteration_pattern(c, p);
    if (c.tag == CGClass::CG8) {
      CHECK_FALSE(pat.has_value());
      continue;
    }
    REQUIRE(pat.has_value());
    for (int m = 1; m <= 300; ++m) {
      CHECK(pat->index(m) == index_at(c, p, m));
      CHECK(pat->nu(m) == nullity_at(c, p, m));
    }
  }
}

TEST_CASE("minimum index") {
  CHECK(min_index(PoincareClass::cg7(1, 3), 0) == 1);
  CHECK(min_index(PoincareClass::cg2(), 1) == 1);
  CHECK(min_index(PoincareClass::cg3(1.0), 1) == 2);
  CHECK(min_index(PoincareClass::cg9(2.0), 0) == 0);
  CHECK(min_index(PoincareClass::cg4(1.0), 0) == 1);
}

TEST_CASE("guarded floor") {
  CHECK(guarded_floor(2.5) == 2);
  CHECK(guarded_floor(-0.5) == -1);
  CHECK_THROWS_AS(guarded_floor(3.0 + 1e-14), Error);
}
