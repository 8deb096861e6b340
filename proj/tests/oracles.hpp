#pragma once

// Index iteration closed forms written out directly, one line per class, as an
// oracle for index_iteration. Rational rotations use integer arithmetic.

#include <cmath>
#include <cstdint>

#include "finsler/classifier.hpp"

namespace oracle {

inline std::int64_t floor_frac(std::int64_t m, std::int64_t k, std::int64_t n) { return m * k / n; }

inline std::int64_t index(const finsler::PoincareClass& c, std::int64_t p, std::int64_t m) {
  const std::int64_t even = (1 + (m % 2 == 0 ? 1 : -1)) / 2;
  switch (c.tag) {
    case finsler::CGClass::CG1:
    case finsler::CGClass::CG2: return 2 * m * p - 1;
    case finsler::CGClass::CG3: return 2 * m * p;
    case finsler::CGClass::CG4:
    case finsler::CGClass::CG5: return m * (2 * p + 1) - even;
    case finsler::CGClass::CG6: return m * (2 * p + 1);
    case finsler::CGClass::CG7: {
      const std::int64_t k = c.sigma_exact.numerator(), n = c.sigma_exact.denominator();
      return 2 * m * p + 2 * floor_frac(m, k, n) + (m % n == 0 ? -1 : 1);
    }
    case finsler::CGClass::CG8:
      return 2 * m * p + 2 * static_cast<std::int64_t>(std::floor(m * c.sigma)) + 1;
    case finsler::CGClass::CG9: return m * p;
  }
  return 0;
}

inline int nullity(const finsler::PoincareClass& c, std::int64_t m) {
  const bool even = m % 2 == 0;
  switch (c.tag) {
    case finsler::CGClass::CG1:
    case finsler::CGClass::CG3: return 1;
    case finsler::CGClass::CG2: return 2;
    case finsler::CGClass::CG4:
    case finsler::CGClass::CG6: return even ? 1 : 0;
    case finsler::CGClass::CG5: return even ? 2 : 0;
    case finsler::CGClass::CG7: return m % c.sigma_exact.denominator() == 0 ? 2 : 0;
    case finsler::CGClass::CG8:
    case finsler::CGClass::CG9: return 0;
  }
  return -1;
}

}  // namespace oracle
