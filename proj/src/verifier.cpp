#include "finsler/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace finsler {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::contradiction: return "contradiction";
    case Verdict::infinitely_many: return "infinitely-many-geodesics";
    case Verdict::consistent: return "consistent";
    case Verdict::open: return "open";
  }
  return "";
}

namespace {

Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::contradiction, Verdict::infinitely_many, Verdict::consistent, Verdict::open}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::InvalidInput, "unknown verdict '" + s + "'");
}

std::string rat(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

std::string cpow(std::int64_t m) { return m == 1 ? std::string("c") : "c^" + std::to_string(m); }

}  // namespace

std::size_t Trace::leaf_count() const {
  if (branches.empty()) return 1;
  std::size_t n = 0;
  for (const auto& b : branches) n += b.leaf_count();
  return n;
}

bool Trace::contains_statement(const std::string& needle) const {
  for (const auto& s : steps) {
    if (s.statement.find(needle) != std::string::npos) return true;
  }
  return std::any_of(branches.begin(), branches.end(), [&](const Trace& b) { return b.contains_statement(needle); });
}

const Trace* Trace::find_branch(const std::string& want) const {
  if (label == want) return this;
  for (const auto& b : branches) {
    if (const Trace* t = b.find_branch(want)) return t;
  }
  return nullptr;
}

const std::vector<std::string>& reference_anchors() {
  static const std::vector<std::string> anchors = {
      "single-geodesic-hypothesis",
      "relative-betti-numbers",
      "morse-inequality",
      "alternating-morse-inequality",
      "critical-module-dimensions",
      "quotient-critical-modules",
      "type-number-persistence",
      "strict-extremum-type-numbers",
      "invariant-part-equals-k0",
      "invariant-part-bound",
      "eigenspace-split",
      "index-iteration-formula",
      "vanishing-M0",
      "initial-index-one",
      "unbounded-index",
      "hingston-minimum",
      "hingston-maximum",
      "rademacher-identity",
      "degenerate-saddle",
      "rotation-bound",
      "tau-definition",
      "sublevel-homology",
      "vanishing-boundary-map",
      "level-set-additivity",
      "exact-sequence",
  };
  return anchors;
}

bool is_reference_anchor(const std::string& ref) {
  const auto& a = reference_anchors();
  return std::find(a.begin(), a.end(), ref) != a.end();
}

bool cites_known_anchors(const Trace& t) {
  for (const auto& s : t.steps) {
    if (!is_reference_anchor(s.ref)) return false;
  }
  return std::all_of(t.branches.begin(), t.branches.end(), cites_known_anchors);
}

namespace {

nlohmann::json to_json(const Trace& t) {
  nlohmann::json j;
  j["label"] = t.label;
  j["verdict"] = to_string(t.verdict);
  j["steps"] = nlohmann::json::array();
  for (const auto& s : t.steps) j["steps"].push_back({{"statement", s.statement}, {"ref", s.ref}});
  if (!t.branches.empty()) {
    j["branches"] = nlohmann::json::array();
    for (const auto& b : t.branches) j["branches"].push_back(to_json(b));
  }
  return j;
}

Trace from_json(const nlohmann::json& j) {
  Trace t;
  t.label = j.at("label").get<std::string>();
  t.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  for (const auto& s : j.at("steps")) t.add(s.at("statement").get<std::string>(), s.at("ref").get<std::string>());
  if (j.contains("branches")) {
    for (const auto& b : j.at("branches")) t.branches.push_back(from_json(b));
  }
  return t;
}

void render(const Trace& t, int depth, int max_depth, std::ostringstream& os) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  os << pad << "[" << t.label << "] " << to_string(t.verdict) << '\n';
  for (const auto& s : t.steps) os << pad << "  - " << s.statement << "  {" << s.ref << "}\n";
  if (t.branches.empty()) return;
  if (depth + 1 > max_depth) {
    os << pad << "  (" << t.branches.size() << " branches, " << t.leaf_count() << " leaves)\n";
    return;
  }
  for (const auto& b : t.branches) render(b, depth + 1, max_depth, os);
}

}  // namespace

std::string trace_to_json(const Trace& t, int indent) { return to_json(t).dump(indent); }

Trace trace_from_json(const std::string& text) {
  try {
    return from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("trace document: ") + e.what());
  }
}

std::string trace_to_text(const Trace& t, int max_depth) {
  std::ostringstream os;
  render(t, 0, max_depth, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Hingston's criteria

namespace {

std::optional<std::int64_t> constant_of(const LinExpr& e) {
  return e.is_constant() ? std::optional<std::int64_t>(e.constant()) : std::nullopt;
}

// Known positive: k_j itself, or the invariant or anti-invariant part below it.
bool known_positive(const IterateInvariants& it, int j) {
  for (const auto* v : {&it.k, &it.khat, &it.khat_minus}) {
    const auto c = constant_of((*v)[static_cast<std::size_t>(j)]);
    if (c && *c > 0) return true;
  }
  return false;
}

const IterateInvariants* invariants_for(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t m) {
  if (const auto* it = inv.at(m)) return it;
  const int nu = seq.nullity(m);
  for (auto rit = inv.degenerate.rbegin(); rit != inv.degenerate.rend(); ++rit) {
    if (rit->first < m && m % rit->first == 0 && rit->second.nu == nu) return &rit->second;
  }
  return nullptr;
}

}  // namespace

std::optional<int> hingston_applicable(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t order) {
  const auto pat = iteration_pattern(seq.cls, seq.p);
  if (!pat) return std::nullopt;
  const int nu = pat->nu(order);
  if (nu == 0) return std::nullopt;
  // i(c^(order m)) = slope*order*m + offset[order m mod period]; the identities
  // are linear in m exactly when the offsets visited are constant, so one full
  // period of m decides them.
  bool nu_constant = true, case1 = true, case2 = true;
  for (std::int64_t m = 1; m <= pat->period; ++m) {
    const std::int64_t r = (order * m) % pat->period;
    const Rational off = pat->offset[static_cast<std::size_t>(r)];
    if (pat->nullity[static_cast<std::size_t>(r)] != nu) nu_constant = false;
    if (off != Rational(-1)) case1 = false;
    if (off != Rational(1 - nu)) case2 = false;
  }
  if (!nu_constant) return std::nullopt;
  const IterateInvariants* it = invariants_for(seq, inv, order);
  if (!it) return std::nullopt;
  if (case1 && known_positive(*it, 0)) return 1;
  if (case2 && known_positive(*it, nu)) return 2;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CG-7 sublevel ladder

Cg7Analysis Cg7Analysis::from_sigma(Rational sigma, LinExpr khat1) {
  if (sigma <= 0 || sigma >= 1) throw Error(ErrorCode::InvalidInput, "sigma must lie in (0, 1)");
  Cg7Analysis a;
  a.sigma = sigma;
  // m sigma < 1  <=>  m k < n.
  const std::int64_t k = sigma.numerator(), n = sigma.denominator();
  a.tau = (n - 1) / k;
  a.khat1 = std::move(khat1);
  a.h1_dim = a.tau;
  return a;
}

HomologyLadder cg7_homology_ladder(const Cg7Analysis& a) {
  HomologyLadder out;
  out.h1 = a.tau;
  const std::string tau = std::to_string(a.tau);
  out.constraints.push_back({"dim H_1(Lambda^kappa_" + tau + ", Lambda^0) = " + tau, "sublevel-homology"});
  out.constraints.push_back({"dim H_2(Lambda, Lambda^kappa_" + tau + ") <= " + a.khat1.to_string(), "exact-sequence"});
  out.constraints.push_back({tau + " <= " + (a.khat1 + LinExpr(1)).to_string(), "exact-sequence"});
  return out;
}

// ---------------------------------------------------------------------------
// Single prime closed geodesic

namespace {

constexpr int kGeneralP = -1;

void finish(Trace& t) {
  if (t.branches.empty()) return;
  const bool all = std::all_of(t.branches.begin(), t.branches.end(), [](const Trace& b) { return b.refutes(); });
  t.verdict = all ? Verdict::contradiction : Verdict::open;
}

[[noreturn]] void incomplete(const std::string& label) {
  throw Error(ErrorCode::IncompleteRuleSet, "no rule closes branch " + label);
}

bool rotation_class(CGClass tag) { return tag == CGClass::CG7 || tag == CGClass::CG8; }

std::string index_formula(CGClass tag) {
  switch (tag) {
    case CGClass::CG1: return "i(c^m) = 2mp - 1, nu(c^m) = 1";
    case CGClass::CG2: return "i(c^m) = 2mp - 1, nu(c^m) = 2";
    case CGClass::CG3: return "i(c^m) = 2mp, nu(c^m) = 1";
    case CGClass::CG4: return "i(c^m) = m(2p+1) - [m even], nu(c^m) = [m even]";
    case CGClass::CG5: return "i(c^m) = m(2p+1) - [m even], nu(c^m) = 2[m even]";
    case CGClass::CG6: return "i(c^m) = m(2p+1), nu(c^m) = [m even]";
    case CGClass::CG7: return "i(c^m) = 2mp + 2[m sigma] + 1 for n not dividing m, 2mp + 2m sigma - 1 with nu = 2 otherwise";
    case CGClass::CG8: return "i(c^m) = 2mp + 2[m sigma] + 1, nu(c^m) = 0";
    case CGClass::CG9: return "i(c^m) = mp, nu(c^m) = 0";
  }
  return "";
}

// M_1 >= b_1 = 1 and M_3 >= b_3 = 1 leave only i(c) = 1. Returns a closed
// trace when p is excluded, nullopt when it survives.
std::optional<Trace> exclude_p(const PoincareClass& cls, int p, const std::string& label) {
  Trace t;
  t.label = label;
  const int pp = p == kGeneralP ? 9 : p;
  const MeanIndex alpha = mean_index(cls, pp);
  if (!(alpha.approx > 0.0)) {
    const auto pat = *iteration_pattern(cls, pp);
    std::int64_t top = 0;
    for (int r = 0; r < pat.period; ++r) {
      top = std::max(top, boost::rational_cast<std::int64_t>(pat.offset[r]) + pat.nullity[r] + 1);
    }
    t.add("alpha_c = 0 and i(c^m) + nu(c^m) + 1 <= " + std::to_string(top) + " for all m", "index-iteration-formula");
    t.add("C_q(E, S^1 c^m) = 0 for q > " + std::to_string(top) + ", so M_3 = 0 < b_3 = 1", "morse-inequality");
    t.verdict = Verdict::contradiction;
    return t;
  }
  const std::int64_t lowest = min_index(cls, pp);
  if (p == kGeneralP) {
    if (lowest < 2) incomplete(label);
    t.add("min_m i(c^m) is nondecreasing in p and equals " + std::to_string(lowest) + " at p = 9", "index-iteration-formula");
    t.add("C_1(E, S^1 c^m) = 0 for all m and p >= 9, so M_1 = 0 < b_1 = 1", "morse-inequality");
    t.verdict = Verdict::contradiction;
    return t;
  }
  if (lowest >= 2) {
    if (rotation_class(cls.tag)) {
      t.add("i(c^m) >= 2mp + 1 >= 3 for all m and every sigma", "index-iteration-formula");
    } else {
      t.add("i(c^m) >= " + std::to_string(lowest) + " for all m", "index-iteration-formula");
    }
    t.add("C_1(E, S^1 c^m) = 0 for all m, so M_1 = 0 < b_1 = 1", "morse-inequality");
    t.verdict = Verdict::contradiction;
    return t;
  }
  if (index_at(cls, p, 1) != 1) incomplete(label);
  return std::nullopt;
}

using Tuple = std::vector<std::optional<std::int64_t>>;  // nullopt: free k_1

std::vector<Tuple> extremum_tuples(int nu) {
  if (nu == 1) return {{0, 0}, {1, 0}, {0, 1}};
  return {{1, 0, 0}, {0, 0, 1}, {0, std::nullopt, 0}};
}

std::string tuple_text(const Tuple& t, std::int64_t d) {
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (j) os << ",";
    if (t[j]) os << *t[j];
    else os << k_name(static_cast<int>(j), d);
  }
  os << ")";
  return os.str();
}

std::string assignment_text(const std::map<std::string, LinExpr>& a) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, v] : a) {
    os << (first ? "" : ", ") << name << " = " << v.to_string();
    first = false;
  }
  return os.str();
}

// Every degenerate iterate shares the nullity of c^n_c and hence, by
// persistence, its type numbers.
std::map<std::string, LinExpr> tuple_substitution(const LocalInvariants& inv, const Tuple& t) {
  std::map<std::string, LinExpr> s;
  for (const auto& [m, it] : inv.degenerate) {
    for (int j = 0; j <= it.nu; ++j) {
      const auto& v = t[static_cast<std::size_t>(j)];
      if (!v) continue;
      if (j == 0) s[khat_name(0, m)] = LinExpr(*v);
      else s[k_name(j, m)] = LinExpr(*v);
      if (*v == 0 && j > 0) {
        s[khat_name(j, m)] = LinExpr(0);
        if (m % 2 == 0) s[khat_minus_name(j, m)] = LinExpr(0);
      }
    }
  }
  return s;
}

// Names with a finite bound that matter for M_0..M_k or for d itself.
std::vector<std::string> relevant_variables(const MorseLedger& ledger, const LocalInvariants& inv, std::int64_t d) {
  std::set<std::string> names;
  for (const auto& e : ledger.M) {
    for (const auto& n : e.variables()) names.insert(n);
  }
  if (const auto* it = inv.at(d)) {
    for (const auto* v : {&it->khat, &it->khat_minus}) {
      for (const auto& e : *v) {
        for (const auto& n : e.variables()) names.insert(n);
      }
    }
  }
  const VariableBounds b = inv.bounds();
  std::vector<std::string> out;
  for (const auto& n : names) {
    const auto it = b.find(n);
    if (it != b.end() && it->second) out.push_back(n);
  }
  return out;
}

bool indices_at_least(const IndexSequence& seq, std::int64_t from, std::int64_t to, std::int64_t bound) {
  for (std::int64_t m = from; m <= to; ++m) {
    if (seq.index(m) < bound) return false;
  }
  return true;
}

// Degenerate saddle of CG-7: mean index identity, tau and the homology ladder.
void cg7_saddle(const IndexSequence& seq, LocalInvariants inv, Trace& t) {
  const Rational sigma = seq.cls.sigma_exact;
  const std::int64_t n = sigma.denominator();
  const std::string d = cpow(n);
  const std::string kh = khat_name(1, n);
  t.add("k_0(" + d + ") = k_2(" + d + ") = 0: c is a rationally elliptic degenerate saddle", "degenerate-saddle");
  t.add("no Hingston criterion applies to " + d + " since k_0(" + d + ") = k_2(" + d + ") = 0", "degenerate-saddle");
  const MeanIndex alpha = mean_index(seq.cls, seq.p);
  // -(n - 1 - khat_1)/(n alpha) = -1.
  const Rational solved = Rational(n - 1) - Rational(n) * alpha.value;
  t.add("alpha_c = 2 sigma = " + rat(alpha.value) + "; -(n - 1 - " + kh + ")/(n alpha_c) = -1 gives " + kh +
            " = n - 1 - 2k = " + rat(solved),
        "rademacher-identity");
  if (solved.denominator() != 1 || solved < 0) {
    t.add(kh + " = " + rat(solved) + " is not a nonnegative integer, so 2 sigma < 1 fails", "invariant-part-bound");
    t.verdict = Verdict::contradiction;
    return;
  }
  const std::int64_t khat1 = solved.numerator();
  inv = inv.substitute({{kh, LinExpr(khat1)}});
  const Cg7Analysis a = Cg7Analysis::from_sigma(sigma, LinExpr(khat1));
  t.add("tau = max{m : m sigma < 1} = " + std::to_string(a.tau) + ", and 2 <= tau <= n - 1 = " + std::to_string(n - 1),
        "tau-definition");
  if (a.tau < 2) incomplete(t.label);
  const HomologyLadder ladder = cg7_homology_ladder(a);
  t.add(ladder.constraints[0].text, ladder.constraints[0].ref);
  t.add("the boundary map H_2(Lambda^kappa_m, Lambda^kappa_(m-1)) -> H_1(Lambda^kappa_(m-1), Lambda^0) vanishes for m <= tau",
        "vanishing-boundary-map");
  if (a.tau < n - 1) {
    // k = n sigma > (tau + 1) sigma > 1.
    if (!indices_at_least(seq, a.tau + 1, a.tau + n, 3)) incomplete(t.label);
    t.add("i(c^m) >= 3 for m > tau = " + std::to_string(a.tau) + ", so H_2(Lambda, Lambda^kappa_" +
              std::to_string(a.tau) + ") = 0",
          "critical-module-dimensions");
    t.add("exactness gives dim H_1(Lambda^kappa_" + std::to_string(a.tau) + ", Lambda^0) <= dim H_1(Lambda, Lambda^0) = 1",
          "exact-sequence");
    t.add("tau = " + std::to_string(a.tau) + " <= 1 is false", "sublevel-homology");
    t.verdict = Verdict::contradiction;
    return;
  }
  // tau = n - 1, so k = 1 and d = c^(tau+1).
  const LinExpr c2 = critical_module_dims(seq, inv, n, 2)[2];
  t.add("i(" + d + ") = " + std::to_string(seq.index(n)) + ", nu(" + d + ") = 2, dim H_2(Lambda^kappa_" +
            std::to_string(n) + ", Lambda^kappa_" + std::to_string(a.tau) + ") = " + kh + " = " + c2.to_string(),
        "critical-module-dimensions");
  if (!indices_at_least(seq, n + 1, 2 * n, 3)) incomplete(t.label);
  t.add("i(c^m) >= 3 for m > n, so H_2(Lambda, Lambda^kappa_" + std::to_string(n) + ") = 0", "critical-module-dimensions");
  t.add(ladder.constraints[1].text, ladder.constraints[1].ref);
  t.add("tau <= " + kh + " + 1 gives " + std::to_string(a.tau) + " <= " + std::to_string(khat1 + 1) + ", contradicting " +
            kh + " = n - 1 - 2k = " + std::to_string(khat1),
        "exact-sequence");
  if (a.tau <= khat1 + 1) incomplete(t.label);
  t.verdict = Verdict::contradiction;
}

// Closes one fully specified branch: Morse inequalities, Hingston, class rules.
void close_branch(const IndexSequence& seq, const LocalInvariants& inv, const SingleOptions& opt, Trace& t) {
  const MorseLedger ledger = morse_type_numbers({{seq, inv}}, opt.k_max);
  for (int q = 0; q <= opt.k_max; ++q) {
    t.add("M_" + std::to_string(q) + " = " + ledger.M[q].to_string(), "critical-module-dimensions");
  }
  for (const auto& c : check_morse_inequalities(ledger, opt.k_max)) {
    if (c.decision == Decision::fails_for_all) {
      t.add(c.text(), c.alternating ? "alternating-morse-inequality" : "morse-inequality");
      t.verdict = Verdict::contradiction;
      return;
    }
  }
  if (seq.n_c) {
    for (std::int64_t d = *seq.n_c; d <= 2 * *seq.n_c; d += *seq.n_c) {
      const auto hc = hingston_applicable(seq, inv, d);
      if (!hc) continue;
      const int nu = seq.nullity(d);
      const std::string dn = cpow(d);
      if (*hc == 1) {
        t.add("d = " + dn + ": i(d^m) = m(i(d) + 1) - 1 with i(d) = " + std::to_string(seq.index(d)) + ", nu(d^m) = " +
                  std::to_string(nu) + ", k_0(d) > 0",
              "hingston-minimum");
      } else {
        t.add("d = " + dn + ": i(d^m) + nu(d^m) = m(i(d) + nu(d) - 1) + 1 with i(d) = " + std::to_string(seq.index(d)) +
                  ", nu(d^m) = " + std::to_string(nu) + ", k_" + std::to_string(nu) + "(d) > 0",
              "hingston-maximum");
      }
      t.add("there are infinitely many prime closed geodesics", *hc == 1 ? "hingston-minimum" : "hingston-maximum");
      t.verdict = Verdict::infinitely_many;
      return;
    }
  }
  if (seq.cls.tag == CGClass::CG7) {
    const auto* it = inv.at(*seq.n_c);
    if (it && it->k[0] == LinExpr(0) && it->k[2] == LinExpr(0)) {
      cg7_saddle(seq, inv, t);
      return;
    }
  }
  incomplete(t.label);
}

void cg8_rule(const IndexSequence& seq, Trace& t) {
  const std::int64_t i1 = seq.index(1), i2 = seq.index(2);
  const Rational gamma = gamma_of(i1, i2);
  t.add("nu(c^m) = 0 for all m", "index-iteration-formula");
  t.add("i(c) = 1 and i(c^2) = 2[2 sigma] + 1 = " + std::to_string(i2) + " has the parity of i(c), so gamma_c = " +
            rat(gamma),
        "rademacher-identity");
  if (gamma != Rational(kIdentityValue)) incomplete(t.label);
  t.add("gamma_c / alpha_c = -1 forces alpha_c = 1", "rademacher-identity");
  t.add("alpha_c = 2 sigma, so sigma = 1/2 would be rational, but the rotation number of CG-8 is irrational",
        "rotation-bound");
  t.verdict = Verdict::contradiction;
}

// All branches for a class with i(c) = 1 at the given p.
void enumerate_invariants(const PoincareClass& cls, int p, const std::optional<LocalInvariants>& given,
                          const SingleOptions& opt, Trace& parent) {
  const IndexSequence seq = index_sequence(cls, p, 1);
  parent.add(index_formula(cls.tag) + "; i(c) = 1 fixes p = " + std::to_string(p), "initial-index-one");
  if (cls.tag == CGClass::CG8) {
    cg8_rule(seq, parent);
    return;
  }
  if (given) {
    given->validate(seq);
    Trace t;
    t.label = parent.label + " given invariants";
    close_branch(seq, *given, opt, t);
    parent.branches.push_back(std::move(t));
    finish(parent);
    return;
  }
  if (!seq.n_c) {
    Trace t;
    t.label = parent.label + " nondegenerate";
    close_branch(seq, LocalInvariants{}, opt, t);
    parent.branches.push_back(std::move(t));
    finish(parent);
    return;
  }
  const std::int64_t nc = *seq.n_c;
  const int nu = seq.nullity(nc);
  const std::int64_t depth = std::max<std::int64_t>(truncation_order(seq, opt.k_max), 2 * nc);
  const LocalInvariants sym = LocalInvariants::symbolic(seq, depth);
  parent.add("nu(" + cpow(nc) + ") = " + std::to_string(nu) + "; every degenerate iterate has the same type numbers",
             "type-number-persistence");
  for (const Tuple& tup : extremum_tuples(nu)) {
    const LocalInvariants base = sym.substitute(tuple_substitution(sym, tup));
    const MorseLedger probe = morse_type_numbers({{seq, base}}, opt.k_max);
    const std::vector<std::string> vars = relevant_variables(probe, base, nc);
    if (vars.size() > 20) incomplete(parent.label);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << vars.size()); ++mask) {
      std::map<std::string, LinExpr> a;
      for (std::size_t b = 0; b < vars.size(); ++b) a[vars[b]] = LinExpr((mask >> b) & 1U);
      const LocalInvariants inv = base.substitute(a);
      try {
        inv.validate(seq);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvariantViolation) throw;
        continue;
      }
      Trace t;
      t.label = parent.label + " k(" + cpow(nc) + ")=" + tuple_text(tup, nc);
      if (!a.empty()) t.label += " [" + assignment_text(a) + "]";
      t.add("k(" + cpow(nc) + ") = " + tuple_text(tup, nc), "strict-extremum-type-numbers");
      if (!a.empty()) t.add(assignment_text(a), "invariant-part-bound");
      close_branch(seq, inv, opt, t);
      parent.branches.push_back(std::move(t));
    }
  }
  finish(parent);
}

Trace p_trace(const PoincareClass& cls, int p, const std::optional<LocalInvariants>& inv, const SingleOptions& opt,
              const std::string& prefix) {
  const std::string label = prefix + (p == kGeneralP ? " p>=9" : " p=" + std::to_string(p));
  if (auto closed = exclude_p(cls, p, label)) return *closed;
  Trace t;
  t.label = label;
  enumerate_invariants(cls, p, inv, opt, t);
  if (!t.refutes()) incomplete(label);
  return t;
}

Trace class_trace(const PoincareClass& cls, std::optional<int> p, const std::optional<LocalInvariants>& inv,
                  const SingleOptions& opt, const std::string& label) {
  Trace t;
  t.label = label;
  t.add("c is the only prime closed geodesic and its Poincare map is of class " + cls.name(), "single-geodesic-hypothesis");
  t.add("b_0 = 0, b_1 = 1, b_2 = 0, b_q = 1 for q >= 3", "relative-betti-numbers");
  t.add("M_0 = 0", "vanishing-M0");
  if (p) {
    check_p(cls, *p);
    t.branches.push_back(p_trace(cls, *p, inv, opt, label));
  } else {
    for (int q = min_p(cls.tag); q <= opt.max_explicit_p; ++q) t.branches.push_back(p_trace(cls, q, inv, opt, label));
    t.branches.push_back(p_trace(cls, kGeneralP, inv, opt, label));
  }
  finish(t);
  return t;
}

// k/n without a fixed denominator: each step is an identity in k and n.
Trace cg7_general_branch() {
  Trace t;
  t.label = "CG-7 p=0 sigma=k/n general";
  t.add("sigma = k/n in lowest terms, n >= 3, d = c^n with i(d) = 2k - 1 and nu(d^m) = 2", "index-iteration-formula");
  {
    Trace b;
    b.label = t.label + " k(d)=(1,0,0)";
    b.add("i(d^m) = 2km - 1 = m(i(d) + 1) - 1 and k_0(d) = 1", "hingston-minimum");
    b.add("there are infinitely many prime closed geodesics", "hingston-minimum");
    b.verdict = Verdict::infinitely_many;
    t.branches.push_back(std::move(b));
  }
  {
    Trace b;
    b.label = t.label + " k(d)=(0,0,1)";
    b.add("i(d^m) + nu(d^m) = 2km + 1 = m(i(d) + nu(d) - 1) + 1 and k_2(d) = 1", "hingston-maximum");
    b.add("there are infinitely many prime closed geodesics", "hingston-maximum");
    b.verdict = Verdict::infinitely_many;
    t.branches.push_back(std::move(b));
  }
  Trace s;
  s.label = t.label + " saddle";
  s.add("k_0(d) = k_2(d) = 0: c is a rationally elliptic degenerate saddle", "degenerate-saddle");
  s.add("alpha_c = 2k/n; -(n - 1 - khat_1(d))/(n alpha_c) = -1 gives khat_1(d) = n - 1 - 2k", "rademacher-identity");
  {
    Trace b;
    b.label = s.label + " 2k > n - 1";
    b.add("khat_1(d) = n - 1 - 2k < 0", "invariant-part-bound");
    b.verdict = Verdict::contradiction;
    s.branches.push_back(std::move(b));
  }
  Trace r;
  r.label = s.label + " 2k <= n - 1";
  r.add("sigma < 1/2, so tau = max{m : mk < n} = [(n - 1)/k] >= 2", "tau-definition");
  r.add("dim H_1(Lambda^kappa_tau, Lambda^0) = tau", "sublevel-homology");
  {
    Trace b;
    b.label = r.label + " k >= 2";
    b.add("tau <= (n - 1)/2 < n - 1, so k = n sigma > (tau + 1) sigma > 1", "tau-definition");
    b.add("i(c^m) >= 3 for m > tau, so H_2(Lambda, Lambda^kappa_tau) = 0", "critical-module-dimensions");
    b.add("exactness gives tau = dim H_1(Lambda^kappa_tau, Lambda^0) <= dim H_1(Lambda, Lambda^0) = 1 < 2",
          "exact-sequence");
    b.verdict = Verdict::contradiction;
    r.branches.push_back(std::move(b));
  }
  {
    Trace b;
    b.label = r.label + " k = 1";
    b.add("tau = n - 1 and khat_1(d) = n - 3", "tau-definition");
    b.add("i(c^m) >= 3 for m > n, so dim H_2(Lambda, Lambda^kappa_tau) <= khat_1(d)", "exact-sequence");
    b.add("tau <= khat_1(d) + 1 gives n - 1 <= n - 2", "exact-sequence");
    b.verdict = Verdict::contradiction;
    r.branches.push_back(std::move(b));
  }
  finish(r);
  s.branches.push_back(std::move(r));
  finish(s);
  t.branches.push_back(std::move(s));
  finish(t);
  return t;
}

}  // namespace

Trace verify_single_geodesic(const PoincareClass& cls, std::optional<int> p, const std::optional<LocalInvariants>& inv,
                             const SingleOptions& opt) {
  return class_trace(cls, p, inv, opt, cls.describe());
}

Trace verify_cg7_all(const SingleOptions& opt) {
  Trace t;
  t.label = "CG-7";
  t.add("c is the only prime closed geodesic and its Poincare map is of class CG-7", "single-geodesic-hypothesis");
  t.add("b_0 = 0, b_1 = 1, b_2 = 0, b_q = 1 for q >= 3", "relative-betti-numbers");
  t.add("M_0 = 0", "vanishing-M0");
  const PoincareClass rep = PoincareClass::cg7(1, 3);
  for (int q = 1; q <= opt.max_explicit_p; ++q) t.branches.push_back(p_trace(rep, q, std::nullopt, opt, "CG-7"));
  t.branches.push_back(p_trace(rep, kGeneralP, std::nullopt, opt, "CG-7"));
  Trace zero;
  zero.label = "CG-7 p=0";
  zero.add(index_formula(CGClass::CG7) + "; i(c) = 1 fixes p = 0", "initial-index-one");
  for (std::int64_t n = 3; n <= opt.max_denominator; ++n) {
    for (std::int64_t k = 1; k < n; ++k) {
      if (std::gcd(k, n) != 1) continue;
      const PoincareClass cls = PoincareClass::cg7(k, n);
      Trace s;
      s.label = "CG-7 p=0 sigma=" + std::to_string(k) + "/" + std::to_string(n);
      enumerate_invariants(cls, 0, std::nullopt, opt, s);
      zero.branches.push_back(std::move(s));
    }
  }
  zero.branches.push_back(cg7_general_branch());
  finish(zero);
  t.branches.push_back(std::move(zero));
  finish(t);
  return t;
}

std::vector<Trace> verify_all_classes(const SingleOptions& opt) {
  std::vector<Trace> out;
  auto run = [&](const PoincareClass& cls) { out.push_back(class_trace(cls, std::nullopt, std::nullopt, opt, cls.name())); };
  run(PoincareClass::cg1(1.0));
  run(PoincareClass::cg2());
  run(PoincareClass::cg3(1.0));
  run(PoincareClass::cg4(1.0));
  run(PoincareClass::cg5());
  run(PoincareClass::cg6(1.0));
  out.push_back(verify_cg7_all(opt));
  // The CG-8 rules hold for every irrational sigma; the representative only
  // feeds the index bounds.
  run(PoincareClass::cg8(std::sqrt(2.0) - 1.0));
  run(PoincareClass::cg9(2.0));
  return out;
}

std::string all_classes_summary(const std::vector<Trace>& traces) {
  const auto refuted = std::count_if(traces.begin(), traces.end(), [](const Trace& t) { return t.refutes(); });
  std::size_t leaves = 0;
  for (const auto& t : traces) leaves += t.leaf_count();
  std::ostringstream os;
  os << "single-geodesic case analysis " << (refuted == static_cast<long>(traces.size()) ? "complete" : "INCOMPLETE")
     << ": " << refuted << " of " << traces.size() << " classes contradicted, " << leaves << " leaf branches";
  return os.str();
}

// ---------------------------------------------------------------------------
// Several prime closed geodesics

std::string ExactSequenceRow::to_string() const {
  std::ostringstream os;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (j) os << ',';
    if (dims[j] == 0) os << '0';
    else if (dims[j] == 1) os << 'Q';
    else os << "Q^" << dims[j];
  }
  return os.str();
}

namespace {

bool is_saddle(const MultiRecord& r) {
  if (r.seq.cls.tag != CGClass::CG7 || r.seq.index(1) != 1) return false;
  const auto* it = r.inv.at(*r.seq.n_c);
  return it && it->k[0] == LinExpr(0) && it->k[2] == LinExpr(0) && it->khat[1].is_constant();
}

}  // namespace

MultiResult verify_multi(const std::vector<MultiRecord>& records, int k_max, double identity_tol) {
  if (records.empty()) throw Error(ErrorCode::InvalidInput, "no records");
  MultiResult res;
  Trace& t = res.trace;
  t.label = "multi";
  bool failed = false, undecided = false;
  std::vector<MorseInput> inputs;
  for (const auto& r : records) {
    const MeanIndex a = mean_index(r.seq.cls, r.seq.p);
    if (!(a.approx > 0.0)) throw Error(ErrorCode::NonPositiveAlpha, r.label + " has mean index " + a.to_string());
    r.inv.validate(r.seq);
    t.add(r.label + ": " + r.seq.cls.describe() + ", p = " + std::to_string(r.seq.p) + ", i(c) = " +
              std::to_string(r.seq.index(1)) + ", alpha = " + a.to_string(),
          "index-iteration-formula");
    inputs.push_back({r.seq, r.inv});
  }

  res.ledger = morse_type_numbers(inputs, k_max);
  for (int q = 0; q <= k_max; ++q) {
    t.add("M_" + std::to_string(q) + " = " + res.ledger.M[q].to_string(), "level-set-additivity");
  }
  for (const auto& c : check_morse_inequalities(res.ledger, k_max)) {
    t.add(c.text(), c.alternating ? "alternating-morse-inequality" : "morse-inequality");
    if (c.decision == Decision::fails_for_all) failed = true;
    if (c.decision == Decision::splits) undecided = true;
  }

  std::vector<NondegenerateTerm> nondeg;
  std::vector<SaddleTerm> saddles;
  bool identity_known = true;
  for (const auto& r : records) {
    const MeanIndex a = mean_index(r.seq.cls, r.seq.p);
    if (!r.seq.n_c) {
      const Rational g = gamma_of(r.seq.index(1), r.seq.index(2));
      nondeg.push_back({g, a});
      t.add(r.label + ": gamma = " + rat(g) + " from i(c) = " + std::to_string(r.seq.index(1)) + ", i(c^2) = " +
                std::to_string(r.seq.index(2)),
            "rademacher-identity");
    } else if (is_saddle(r)) {
      const std::int64_t n = *r.seq.n_c;
      const std::int64_t kh = r.inv.at(n)->khat[1].constant();
      saddles.push_back({n, kh, a});
      t.add(r.label + ": degenerate saddle with n = " + std::to_string(n) + ", " + khat_name(1, n) + " = " +
                std::to_string(kh),
            "degenerate-saddle");
    } else {
      identity_known = false;
      t.add(r.label + ": contribution to the mean index identity is not determined by the data", "rademacher-identity");
    }
  }
  if (identity_known) {
    res.identity = rademacher_identity_lhs(nondeg, saddles);
    std::ostringstream os;
    os << "mean index identity: left side = ";
    if (res.identity.exact) os << rat(res.identity.value);
    else os.precision(12), os << res.identity.approx;
    os << ", required " << kIdentityValue;
    const bool ok = res.identity.exact ? res.identity.value == Rational(kIdentityValue)
                                       : std::abs(res.identity.approx - kIdentityValue) <= identity_tol;
    os << (ok ? " (holds)" : " (fails)");
    t.add(os.str(), "rademacher-identity");
    if (!ok) failed = true;
  } else {
    undecided = true;
  }

  // Iterates that reach degrees <= 2.
  std::vector<std::pair<std::size_t, std::int64_t>> low;
  for (std::size_t j = 0; j < records.size(); ++j) {
    const std::int64_t last = truncation_order(records[j].seq, 2);
    for (std::int64_t m = 1; m <= last; ++m) {
      const auto dims = critical_module_dims(records[j].seq, records[j].inv, m, 2);
      if (!(dims[0] == LinExpr(0) && dims[1] == LinExpr(0) && dims[2] == LinExpr(0))) low.push_back({j, m});
    }
  }
  if (low.size() == 1 && low[0].second == 1 && records[low[0].first].seq.index(1) == 1 &&
      records[low[0].first].seq.nullity(1) == 0) {
    const auto& r = records[low[0].first];
    t.add("only " + r.label + " has i(c^m) < 3; every other iterate has i(c^m) >= 3, so tau = 1", "tau-definition");
    t.add("H_2(Lambda, Lambda^kappa_1) = H_1(Lambda, Lambda^kappa_1) = 0", "critical-module-dimensions");
    ExactSequenceRow row;
    // 0 -> H_1(L^k, L0) -> H_1(L, L0) -> 0 is exact, so the middle terms agree.
    row.dims = {betti(2), 0, betti(1), betti(1), 0};
    const LinExpr c1 = critical_module_dims(r.seq, r.inv, 1, 1)[1];
    if (!(c1 == LinExpr(row.dims[2]))) failed = true;
    t.add("exact sequence H_2(L,L0) -> H_2(L,L^k) -> H_1(L^k,L0) -> H_1(L,L0) -> H_1(L,L^k) reads " + row.to_string(),
          "exact-sequence");
    res.row = row;
  }

  if (records.size() == 1 && is_saddle(records[0])) {
    const auto& r = records[0];
    const Cg7Analysis a = Cg7Analysis::from_sigma(r.seq.cls.sigma_exact, r.inv.at(*r.seq.n_c)->khat[1]);
    LinExpr above(0);
    const std::int64_t last = truncation_order(r.seq, 2);
    for (std::int64_t m = a.tau + 1; m <= last; ++m) above += critical_module_dims(r.seq, r.inv, m, 2)[2];
    t.add("tau = " + std::to_string(a.tau) + " and dim H_1(Lambda^kappa_tau, Lambda^0) = tau", "sublevel-homology");
    const LinExpr rhs = above + LinExpr(betti(1));
    std::ostringstream os;
    os << "tau <= dim H_2(Lambda, Lambda^kappa_tau) + b_1 <= " << rhs.to_string();
    // tau <= rhs  <=>  rhs >= tau
    const Decision d = decide_geq(rhs, a.tau, res.ledger.bounds);
    os << " (" << to_string(d) << ")";
    t.add(os.str(), "exact-sequence");
    if (d == Decision::fails_for_all) failed = true;
    if (d == Decision::splits) undecided = true;
  }

  t.verdict = failed ? Verdict::contradiction : undecided ? Verdict::open : Verdict::consistent;
  return res;
}

}  // namespace finsler
