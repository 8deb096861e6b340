#include "finsler/index_iteration.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace finsler {

namespace {

std::int64_t floor_rational(const Rational& r) {
  const std::int64_t n = r.numerator(), d = r.denominator();
  return n >= 0 ? n / d : -((-n + d - 1) / d);
}

bool is_parabolic_even(CGClass t) { return t == CGClass::CG4 || t == CGClass::CG5 || t == CGClass::CG6; }

}  // namespace

std::string MeanIndex::to_string() const {
  std::ostringstream os;
  if (exact) {
    os << value.numerator();
    if (value.denominator() != 1) os << "/" << value.denominator();
  } else {
    os.precision(12);
    os << approx << " (irrational)";
  }
  return os.str();
}

std::int64_t guarded_floor(double value) {
  const double nearest = std::round(value);
  if (std::abs(value - nearest) < 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "floor of " << value << " is within the guard band of an integer";
    throw Error(ErrorCode::InvariantViolation, os.str());
  }
  return static_cast<std::int64_t>(std::floor(value));
}

int min_p(CGClass tag) { return tag == CGClass::CG1 || tag == CGClass::CG2 ? 1 : 0; }

void check_p(const PoincareClass& cls, int p) {
  if (p < min_p(cls.tag)) {
    std::ostringstream os;
    os << "p = " << p << " is outside the range p >= " << min_p(cls.tag) << " for " << cls.name();
    throw Error(ErrorCode::InvalidP, os.str());
  }
}

std::int64_t index_at(const PoincareClass& cls, int p, std::int64_t m) {
  const std::int64_t even = m % 2 == 0 ? 1 : 0;
  switch (cls.tag) {
    case CGClass::CG1:
    case CGClass::CG2: return 2 * m * p - 1;
    case CGClass::CG3: return 2 * m * p;
    case CGClass::CG4:
    case CGClass::CG5: return m * (2 * p + 1) - even;
    case CGClass::CG6: return m * (2 * p + 1);
    case CGClass::CG7: {
      const Rational ms = cls.sigma_exact * m;
      if (ms.denominator() == 1) return 2 * m * p + 2 * ms.numerator() - 1;
      return 2 * m * p + 2 * floor_rational(ms) + 1;
    }
    case CGClass::CG8: return 2 * m * p + 2 * guarded_floor(static_cast<double>(m) * cls.sigma) + 1;
    case CGClass::CG9: return m * p;
  }
  return 0;
}

int nullity_at(const PoincareClass& cls, int, std::int64_t m) {
  const int even = m % 2 == 0 ? 1 : 0;
  switch (cls.tag) {
    case CGClass::CG1:
    case CGClass::CG3: return 1;
    case CGClass::CG2: return 2;
    case CGClass::CG4:
    case CGClass::CG6: return even;
    case CGClass::CG5: return 2 * even;
    case CGClass::CG7: return (cls.sigma_exact * m).denominator() == 1 ? 2 : 0;
    case CGClass::CG8:
    case CGClass::CG9: return 0;
  }
  return 0;
}

MeanIndex mean_index(const PoincareClass& cls, int p) {
  check_p(cls, p);
  MeanIndex out;
  switch (cls.tag) {
    case CGClass::CG1:
    case CGClass::CG2:
    case CGClass::CG3: out.value = Rational(2 * p); break;
    case CGClass::CG4:
    case CGClass::CG5:
    case CGClass::CG6: out.value = Rational(2 * p + 1); break;
    case CGClass::CG7: out.value = Rational(2 * p) + Rational(2) * cls.sigma_exact; break;
    case CGClass::CG8:
      out.exact = false;
      out.approx = 2.0 * p + 2.0 * cls.sigma;
      return out;
    case CGClass::CG9: out.value = Rational(p); break;
  }
  out.approx = boost::rational_cast<double>(out.value);
  return out;
}

std::optional<int> first_degenerate_order(const PoincareClass& cls) {
  switch (cls.tag) {
    case CGClass::CG1:
    case CGClass::CG2:
    case CGClass::CG3: return 1;
    case CGClass::CG4:
    case CGClass::CG5:
    case CGClass::CG6: return 2;
    case CGClass::CG7: return static_cast<int>(cls.sigma_exact.denominator());
    default: return std::nullopt;
  }
}

IndexSequence index_sequence(const PoincareClass& cls, int p, int m_max) {
  check_p(cls, p);
  if (m_max < 0) throw Error(ErrorCode::InvalidInput, "m_max must be non-negative");
  IndexSequence seq;
  seq.cls = cls;
  seq.p = p;
  seq.alpha = mean_index(cls, p);
  seq.n_c = first_degenerate_order(cls);
  seq.i.reserve(m_max);
  seq.nu.reserve(m_max);
  for (int m = 1; m <= m_max; ++m) {
    seq.i.push_back(index_at(cls, p, m));
    seq.nu.push_back(nullity_at(cls, p, m));
  }
  return seq;
}

std::string IndexSequence::to_csv() const {
  std::ostringstream os;
  os << "m,i,nu\n";
  for (int m = 1; m <= m_max(); ++m) os << m << ',' << i[m - 1] << ',' << nu[m - 1] << '\n';
  return os.str();
}

int epsilon_sign(const IndexSequence& seq, std::int64_t m) {
  const std::int64_t diff = seq.index(m) - seq.index(1);
  return diff % 2 == 0 ? 1 : -1;
}

std::int64_t IterationPattern::index(std::int64_t m) const {
  const Rational v = slope * m + offset[static_cast<std::size_t>(m % period)];
  if (v.denominator() != 1) throw Error(ErrorCode::InvariantViolation, "non-integral pattern value");
  return v.numerator();
}

std::optional<IterationPattern> iteration_pattern(const PoincareClass& cls, int p) {
  check_p(cls, p);
  if (cls.tag == CGClass::CG8) return std::nullopt;
  IterationPattern pat;
  pat.slope = mean_index(cls, p).value;
  if (cls.tag == CGClass::CG7) {
    pat.period = static_cast<int>(cls.sigma_exact.denominator());
  } else if (is_parabolic_even(cls.tag)) {
    pat.period = 2;
  }
  // Offsets are read off at the representatives m = period, 1, ..., period-1.
  for (int r = 0; r < pat.period; ++r) {
    const std::int64_t m = r == 0 ? pat.period : r;
    pat.offset.push_back(Rational(index_at(cls, p, m)) - pat.slope * m);
    pat.nullity.push_back(nullity_at(cls, p, m));
  }
  return pat;
}

std::int64_t min_index(const PoincareClass& cls, int p) {
  check_p(cls, p);
  if (cls.tag == CGClass::CG8) {
    // 2mp + 2[m sigma] + 1 is nondecreasing in m.
    return index_at(cls, p, 1);
  }
  const IterationPattern pat = *iteration_pattern(cls, p);
  if (pat.slope < 0) throw Error(ErrorCode::NonPositiveMeanIndex, "negative mean index");
  // slope >= 0, so the minimum in each residue class is at its smallest member.
  std::int64_t best = pat.index(pat.period);
  for (int r = 1; r < pat.period; ++r) best = std::min(best, pat.index(r));
  return best;
}

}  // namespace finsler
