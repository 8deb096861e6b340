#pragma once

// Case analysis for a surface carrying a single prime closed geodesic, and
// consistency checks for data with several prime closed geodesics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finsler/morse.hpp"

namespace finsler {

enum class Verdict { contradiction, infinitely_many, consistent, open };
std::string to_string(Verdict v);

struct TraceStep {
  std::string statement;
  std::string ref;
};

struct Trace {
  std::string label;
  std::vector<TraceStep> steps;
  Verdict verdict = Verdict::open;
  std::vector<Trace> branches;

  void add(std::string statement, std::string ref) { steps.push_back({std::move(statement), std::move(ref)}); }
  /// Terminal: contradiction or infinitely many closed geodesics.
  bool refutes() const { return verdict == Verdict::contradiction || verdict == Verdict::infinitely_many; }
  std::size_t leaf_count() const;
  /// Depth-first search over all steps of this trace and its branches.
  bool contains_statement(const std::string& needle) const;
  const Trace* find_branch(const std::string& label) const;
};

/// Names allowed as step references.
const std::vector<std::string>& reference_anchors();
bool is_reference_anchor(const std::string& ref);
/// True if every step in the trace tree cites a known anchor.
bool cites_known_anchors(const Trace& t);

/// Case 1: k_0(d) > 0 and i(d^m) = m(i(d)+1) - 1. Case 2: k_nu(d) > 0 and
/// i(d^m) + nu(d^m) = m(i(d)+nu(d)-1) + 1; in both nu(d^m) = nu(d) for all m.
/// d = c^order. Index identities are checked exactly over one period of the
/// class formula; type numbers must be constant and positive. Only degenerate
/// d are considered.
std::optional<int> hingston_applicable(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t order = 1);

struct Cg7Analysis {
  Rational sigma;
  std::int64_t tau = 0;  // max{m : m sigma < 1}
  LinExpr khat1;
  std::int64_t h1_dim = 0;

  static Cg7Analysis from_sigma(Rational sigma, LinExpr khat1);
};

struct HomologyLadder {
  std::int64_t h1 = 0;
  std::vector<Constraint> constraints;
};
/// H_1 of the sublevel below c^(tau+1) has dimension tau; exactness bounds it by
/// dim H_2(Lambda, sublevel) + 1 <= khat_1(d) + 1.
HomologyLadder cg7_homology_ladder(const Cg7Analysis& a);

struct SingleOptions {
  int max_explicit_p = 8;
  std::int64_t max_denominator = 64;
  int k_max = 3;
};

/// Analysis of one class (and one p, or all p when p is unset). With inv unset
/// every admissible {0,1} assignment of the relevant type numbers is
/// enumerated. CG-7 needs a rational sigma in cls; all_cg7 covers every
/// reduced sigma with denominator <= max_denominator plus the general case.
/// Throws IncompleteRuleSet if some branch ends without a verdict.
Trace verify_single_geodesic(const PoincareClass& cls, std::optional<int> p = std::nullopt,
                             const std::optional<LocalInvariants>& inv = std::nullopt,
                             const SingleOptions& opt = {});
Trace verify_cg7_all(const SingleOptions& opt = {});
/// The nine class traces, CG-7 covering all denominators.
std::vector<Trace> verify_all_classes(const SingleOptions& opt = {});
std::string all_classes_summary(const std::vector<Trace>& traces);

struct MultiRecord {
  IndexSequence seq;
  LocalInvariants inv;
  std::string label;
};

struct ExactSequenceRow {
  // H_2(L,L0), H_2(L,L^k), H_1(L^k,L0), H_1(L,L0), H_1(L,L^k) as dimensions.
  std::vector<std::int64_t> dims;
  std::string to_string() const;  // "0,0,Q,Q,0"
};

struct MultiResult {
  Trace trace;
  MorseLedger ledger;
  IdentityValue identity;
  std::optional<ExactSequenceRow> row;
};

/// Morse inequalities up to k_max, the mean index identity and, when exactly one
/// iterate has index below 3, the exact sequence of the sublevel containing it.
/// Throws NonPositiveAlpha.
MultiResult verify_multi(const std::vector<MultiRecord>& records, int k_max = 6, double identity_tol = 1e-3);

/// Value the mean index identity takes on the two-sphere.
inline constexpr std::int64_t kIdentityValue = -1;

std::string trace_to_json(const Trace& t, int indent = 2);
Trace trace_from_json(const std::string& text);
/// Indented text; branches below max_depth are summarized.
std::string trace_to_text(const Trace& t, int max_depth = 100);

}  // namespace finsler
