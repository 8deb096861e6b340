#pragma once

// Critical modules, type numbers and Morse inequalities over symbolic local
// invariants.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "finsler/index_iteration.hpp"

namespace finsler {

/// Affine expression with integer coefficients over named nonnegative
/// integer variables.
class LinExpr {
 public:
  LinExpr(std::int64_t constant = 0) : constant_(constant) {}
  static LinExpr var(const std::string& name, std::int64_t coeff = 1);

  std::int64_t constant() const { return constant_; }
  const std::map<std::string, std::int64_t>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }
  std::set<std::string> variables() const;
  std::int64_t coefficient(const std::string& name) const;

  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(std::int64_t s);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(std::int64_t s, LinExpr a) { return a *= s; }
  bool operator==(const LinExpr& other) const { return constant_ == other.constant_ && terms_ == other.terms_; }

  LinExpr substitute(const std::map<std::string, LinExpr>& values) const;
  /// Constant part first, then variables in name order: "1 + khat_0(c^4)".
  std::string to_string() const;

 private:
  std::int64_t constant_ = 0;
  std::map<std::string, std::int64_t> terms_;
};

/// Upper bounds of the variables (lower bound is always 0); a missing or
/// empty entry means unbounded.
using VariableBounds = std::map<std::string, std::optional<std::int64_t>>;

enum class Decision { holds_for_all, fails_for_all, splits };
std::string to_string(Decision d);

/// Decides lhs >= rhs over all admissible values in the box given by bounds.
Decision decide_geq(const LinExpr& lhs, std::int64_t rhs, const VariableBounds& bounds);

/// Type numbers of one degenerate iterate c^m. k[j], khat[j] are the
/// dimensions of the local homology of a characteristic manifold and of
/// its Z_m-invariant part; khat_minus[j] of its (-1)-eigenspace.
struct IterateInvariants {
  std::int64_t m = 1;
  int nu = 0;
  std::vector<LinExpr> k, khat, khat_minus;
};

struct Constraint {
  std::string text;
  std::string ref;
};

std::string k_name(int j, std::int64_t m);
std::string khat_name(int j, std::int64_t m);
std::string khat_minus_name(int j, std::int64_t m);

struct LocalInvariants {
  std::map<std::int64_t, IterateInvariants> degenerate;

  /// Free variables for every degenerate iterate m <= m_max. k_0 and
  /// khat_0 share the variable khat_0(c^m); khat-_0 = 0 and khat- = 0 for
  /// odd m.
  static LocalInvariants symbolic(const IndexSequence& seq, std::int64_t m_max);

  const IterateInvariants* at(std::int64_t m) const;
  /// Replaces variables by values everywhere.
  LocalInvariants substitute(const std::map<std::string, LinExpr>& values) const;

  VariableBounds bounds() const;
  /// Admissibility constraints in structured text form.
  std::vector<Constraint> constraints(const IndexSequence& seq) const;
  /// Throws InvariantViolation when constant entries break a constraint.
  void validate(const IndexSequence& seq) const;
};

/// Betti numbers of the free loop space of S^2 relative to constant loops.
std::int64_t betti(int q);

/// dim C_q(E, S^1 c^m) for q = 0..q_max.
std::vector<LinExpr> critical_module_dims(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t m,
                                          int q_max);
/// dim of the S^1-quotient critical module at c^m in degree q.
LinExpr cbar_dims(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t m, int q);

struct MorseInput {
  IndexSequence seq;
  LocalInvariants inv;
};

struct MorseLedger {
  std::vector<LinExpr> M;
  std::vector<std::int64_t> b;
  int k_max = 0;
  VariableBounds bounds;

  /// Rows "k,M_k,b_k".
  std::string to_csv() const;
};

/// Sums dim C_k over the iterates of every record. Throws NonPositiveMeanIndex
/// if a record has nonpositive mean index.
MorseLedger morse_type_numbers(const std::vector<MorseInput>& records, int k_max);

/// Last iterate that can contribute to degrees <= k_max.
std::int64_t truncation_order(const IndexSequence& seq, int k_max);

struct InequalityCheck {
  int k = 0;
  bool alternating = false;
  LinExpr lhs;
  std::int64_t rhs = 0;
  Decision decision = Decision::holds_for_all;

  std::string text() const;
};

/// M_k >= b_k and the alternating sums, for k = 0..k_max.
std::vector<InequalityCheck> check_morse_inequalities(const MorseLedger& ledger, int k_max);

/// gamma in {+-1/2, +-1} with 2 gamma = i2 - i1 mod 2 and gamma (-1)^i1 > 0.
Rational gamma_of(std::int64_t i1, std::int64_t i2);

struct NondegenerateTerm {
  Rational gamma;
  MeanIndex alpha;
};
struct SaddleTerm {
  std::int64_t n;
  std::int64_t khat1;
  MeanIndex alpha;
};
struct IdentityValue {
  bool exact = true;
  Rational value{0};
  double approx = 0.0;
};

/// sum gamma/alpha - sum (n - 1 - khat1)/(n alpha). Throws NonPositiveAlpha.
IdentityValue rademacher_identity_lhs(const std::vector<NondegenerateTerm>& nondeg,
                                      const std::vector<SaddleTerm>& saddles);

struct BetaInvariant {
  Rational direct;  // (khat1 + 1 - n) / n
  Rational summed;  // alternating sum over m = 1..2n
};
/// Throws NotDegenerateSaddle unless seq is CG-7 with i(c) = 1 and
/// k_0(c^n) = k_2(c^n) = 0 with a constant khat_1(c^n).
BetaInvariant beta_invariant(const IndexSequence& seq, const LocalInvariants& inv);

}  // namespace finsler
