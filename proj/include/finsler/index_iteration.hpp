#pragma once

// Index and nullity of iterated closed geodesics on a surface.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finsler/classifier.hpp"

namespace finsler {

/// Mean index: exact rational, or 2p + 2 sigma carried numerically for
/// irrational sigma.
struct MeanIndex {
  bool exact = true;
  Rational value{0};
  double approx = 0.0;

  std::string to_string() const;
};

/// Smallest p allowed for the class (1 for CG-1/2, 0 otherwise).
int min_p(CGClass tag);
/// Throws InvalidP when p is out of range for the class.
void check_p(const PoincareClass& cls, int p);

std::int64_t index_at(const PoincareClass& cls, int p, std::int64_t m);
int nullity_at(const PoincareClass& cls, int p, std::int64_t m);

struct IndexSequence {
  PoincareClass cls;
  int p = 0;
  std::vector<std::int64_t> i;  // i[m-1] = i(c^m)
  std::vector<int> nu;
  MeanIndex alpha;
  std::optional<int> n_c;  // nullopt: no degenerate iterate

  int m_max() const { return static_cast<int>(i.size()); }
  /// Values for any m >= 1, from the class formula.
  std::int64_t index(std::int64_t m) const { return index_at(cls, p, m); }
  int nullity(std::int64_t m) const { return nullity_at(cls, p, m); }

  /// Rows "m,i,nu".
  std::string to_csv() const;
};

IndexSequence index_sequence(const PoincareClass& cls, int p, int m_max);
MeanIndex mean_index(const PoincareClass& cls, int p);
/// (-1)^(i(c^m) - i(c)).
int epsilon_sign(const IndexSequence& seq, std::int64_t m);
std::optional<int> first_degenerate_order(const PoincareClass& cls);

/// Exact description i(c^m) = slope*m + offset[m mod period],
/// nu(c^m) = nullity[m mod period]. Not available for CG-8.
struct IterationPattern {
  int period = 1;
  Rational slope{0};
  std::vector<Rational> offset;
  std::vector<int> nullity;

  std::int64_t index(std::int64_t m) const;
  int nu(std::int64_t m) const { return nullity[static_cast<std::size_t>(m % period)]; }
};
std::optional<IterationPattern> iteration_pattern(const PoincareClass& cls, int p);

/// min over all m >= 1 of i(c^m), exact.
std::int64_t min_index(const PoincareClass& cls, int p);

/// Floor of m*sigma for an irrational sigma; throws InvariantViolation if m*sigma
/// lies within 1e-12 of an integer.
std::int64_t guarded_floor(double value);

}  // namespace finsler
