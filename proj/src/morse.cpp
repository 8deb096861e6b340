#include "finsler/morse.hpp"

#include <limits>
#include <sstream>

namespace finsler {

LinExpr LinExpr::var(const std::string& name, std::int64_t coeff) {
  LinExpr e;
  if (coeff != 0) e.terms_[name] = coeff;
  return e;
}

std::set<std::string> LinExpr::variables() const {
  std::set<std::string> out;
  for (const auto& [name, c] : terms_) out.insert(name);
  return out;
}

std::int64_t LinExpr::coefficient(const std::string& name) const {
  const auto it = terms_.find(name);
  return it == terms_.end() ? 0 : it->second;
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  constant_ += other.constant_;
  for (const auto& [name, c] : other.terms_) {
    if ((terms_[name] += c) == 0) terms_.erase(name);
  }
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) { return *this += (-1) * other; }

LinExpr& LinExpr::operator*=(std::int64_t s) {
  constant_ *= s;
  if (s == 0) terms_.clear();
  for (auto& [name, c] : terms_) c *= s;
  return *this;
}

LinExpr LinExpr::substitute(const std::map<std::string, LinExpr>& values) const {
  LinExpr out(constant_);
  for (const auto& [name, c] : terms_) {
    const auto it = values.find(name);
    out += it == values.end() ? LinExpr::var(name, c) : c * it->second;
  }
  return out;
}

std::string LinExpr::to_string() const {
  std::ostringstream os;
  bool first = true;
  if (constant_ != 0 || terms_.empty()) {
    os << constant_;
    first = false;
  }
  for (const auto& [name, c] : terms_) {
    const std::int64_t mag = c < 0 ? -c : c;
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    if (mag != 1) os << mag << " ";
    os << name;
    first = false;
  }
  return os.str();
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::holds_for_all: return "holds for all admissible values";
    case Decision::fails_for_all: return "fails for all admissible values";
    case Decision::splits: return "depends on the free invariants";
  }
  return "";
}

Decision decide_geq(const LinExpr& lhs, std::int64_t rhs, const VariableBounds& bounds) {
  bool min_finite = true, max_finite = true;
  std::int64_t lo = lhs.constant(), hi = lhs.constant();
  for (const auto& [name, c] : lhs.terms()) {
    const auto it = bounds.find(name);
    const std::optional<std::int64_t> ub = it == bounds.end() ? std::nullopt : it->second;
    if (c > 0) {
      if (ub) hi += c * *ub;
      else max_finite = false;
    } else {
      if (ub) lo += c * *ub;
      else min_finite = false;
    }
  }
  if (min_finite && lo >= rhs) return Decision::holds_for_all;
  if (max_finite && hi < rhs) return Decision::fails_for_all;
  return Decision::splits;
}

std::string k_name(int j, std::int64_t m) { return "k_" + std::to_string(j) + "(c^" + std::to_string(m) + ")"; }
std::string khat_name(int j, std::int64_t m) {
  return "khat_" + std::to_string(j) + "(c^" + std::to_string(m) + ")";
}
std::string khat_minus_name(int j, std::int64_t m) {
  return "khat-_" + std::to_string(j) + "(c^" + std::to_string(m) + ")";
}

LocalInvariants LocalInvariants::symbolic(const IndexSequence& seq, std::int64_t m_max) {
  LocalInvariants inv;
  for (std::int64_t m = 1; m <= m_max; ++m) {
    const int nu = seq.nullity(m);
    if (nu == 0) continue;
    IterateInvariants it;
    it.m = m;
    it.nu = nu;
    for (int j = 0; j <= nu; ++j) {
      it.k.push_back(j == 0 ? LinExpr::var(khat_name(0, m)) : LinExpr::var(k_name(j, m)));
      it.khat.push_back(LinExpr::var(khat_name(j, m)));
      it.khat_minus.push_back(j == 0 || m % 2 == 1 ? LinExpr(0) : LinExpr::var(khat_minus_name(j, m)));
    }
    inv.degenerate[m] = std::move(it);
  }
  return inv;
}

const IterateInvariants* LocalInvariants::at(std::int64_t m) const {
  const auto it = degenerate.find(m);
  return it == degenerate.end() ? nullptr : &it->second;
}

LocalInvariants LocalInvariants::substitute(const std::map<std::string, LinExpr>& values) const {
  LocalInvariants out = *this;
  for (auto& [m, it] : out.degenerate) {
    for (auto* vec : {&it.k, &it.khat, &it.khat_minus}) {
      for (auto& e : *vec) e = e.substitute(values);
    }
  }
  return out;
}

VariableBounds LocalInvariants::bounds() const {
  VariableBounds b;
  for (const auto& [m, it] : degenerate) {
    for (int j = 0; j <= it.nu; ++j) {
      // Every type number is at most 1 except the middle one when nu = 2.
      const std::optional<std::int64_t> ub =
          (it.nu == 2 && j == 1) ? std::nullopt : std::optional<std::int64_t>(1);
      for (const auto* vec : {&it.k, &it.khat, &it.khat_minus}) {
        for (const auto& name : (*vec)[j].variables()) {
          auto& slot = b[name];
          if (b.count(name) && slot && ub) slot = std::min(*slot, *ub);
          else if (!ub) slot = std::nullopt;
          else slot = ub;
        }
      }
    }
  }
  return b;
}

std::vector<Constraint> LocalInvariants::constraints(const IndexSequence& seq) const {
  std::vector<Constraint> out;
  for (const auto& [m, it] : degenerate) {
    const std::string cm = "c^" + std::to_string(m);
    out.push_back({"khat_0(" + cm + ") = k_0(" + cm + ")", "invariant-part-equals-k0"});
    for (int j = 1; j <= it.nu; ++j) {
      out.push_back({"0 <= " + it.khat[j].to_string() + " <= " + it.k[j].to_string(), "invariant-part-bound"});
      if (m % 2 == 0) {
        out.push_back({it.khat[j].to_string() + " + " + it.khat_minus[j].to_string() + " <= " + it.k[j].to_string(),
                       "eigenspace-split"});
      }
    }
    out.push_back({"k_0(" + cm + ") != 0 implies k_0(" + cm + ") = 1 and k_j(" + cm + ") = 0 for j > 0",
                   "strict-extremum-type-numbers"});
    out.push_back({"k_" + std::to_string(it.nu) + "(" + cm + ") != 0 implies it equals 1 and k_j(" + cm +
                       ") = 0 for j != " + std::to_string(it.nu),
                   "strict-extremum-type-numbers"});
    if (m % 2 == 1) out.push_back({"khat-_j(" + cm + ") = 0 (odd iterate)", "eigenspace-split"});
    for (const auto& [n, base] : degenerate) {
      if (n < m && m % n == 0 && base.nu == it.nu && seq.nullity(m) == seq.nullity(n)) {
        const std::string cn = "c^" + std::to_string(n);
        out.push_back({"k_j(" + cm + ") = k_j(" + cn + ") and khat_j(" + cm + ") = khat_j(" + cn + ")",
                       "type-number-persistence"});
      }
    }
  }
  return out;
}

void LocalInvariants::validate(const IndexSequence& seq) const {
  auto fail = [](std::int64_t m, const std::string& what) {
    throw Error(ErrorCode::InvariantViolation, "c^" + std::to_string(m) + ": " + what);
  };
  for (const auto& [m, it] : degenerate) {
    if (it.nu != seq.nullity(m)) fail(m, "nullity does not match the index sequence");
    if (it.k.size() != static_cast<std::size_t>(it.nu + 1) || it.khat.size() != it.k.size() ||
        it.khat_minus.size() != it.k.size()) {
      fail(m, "type number arrays must have nu + 1 entries");
    }
    auto cst = [](const LinExpr& e) -> std::optional<std::int64_t> {
      return e.is_constant() ? std::optional<std::int64_t>(e.constant()) : std::nullopt;
    };
    for (int j = 0; j <= it.nu; ++j) {
      const auto k = cst(it.k[j]), kh = cst(it.khat[j]), km = cst(it.khat_minus[j]);
      if ((k && *k < 0) || (kh && *kh < 0) || (km && *km < 0)) fail(m, "negative type number");
      if (k && kh && km && *kh + *km > *k) fail(m, "khat + khat- exceeds k");
      if (k && kh && *kh > *k) fail(m, "khat exceeds k");
      if (j == 0 && !(it.k[0] == it.khat[0])) fail(m, "khat_0 differs from k_0");
      if (j == 0 && !(it.khat_minus[0] == LinExpr(0))) fail(m, "khat-_0 must vanish");
      if (m % 2 == 1 && km && *km != 0) fail(m, "odd iterate with nonzero khat-");
    }
    // Lower bound of k_j implied by constant entries.
    auto lower = [&](int j) {
      std::int64_t lo = cst(it.k[j]).value_or(0);
      lo = std::max(lo, cst(it.khat[j]).value_or(0) + cst(it.khat_minus[j]).value_or(0));
      return lo;
    };
    for (const int extreme : {0, it.nu}) {
      const std::int64_t le = lower(extreme);
      if (le == 0) continue;
      if (le > 1) fail(m, "extremal type number must be 0 or 1");
      for (int j = 0; j <= it.nu; ++j) {
        if (j != extreme && lower(j) != 0) fail(m, "nonzero type number beside a strict extremum");
      }
    }
    if (it.nu == 1 && lower(1) > 1) fail(m, "type number above 1");
    for (const auto& [n, base] : degenerate) {
      if (n < m && m % n == 0 && base.nu == it.nu) {
        for (int j = 0; j <= it.nu; ++j) {
          const auto a = cst(it.k[j]), b = cst(base.k[j]);
          const auto ah = cst(it.khat[j]), bh = cst(base.khat[j]);
          if ((a && b && *a != *b) || (ah && bh && *ah != *bh)) fail(m, "type numbers do not persist");
        }
      }
    }
  }
}

std::int64_t betti(int q) {
  if (q < 0) throw Error(ErrorCode::InvalidInput, "negative degree");
  return q == 0 || q == 2 ? 0 : 1;
}

namespace {

// Type numbers for c^m: stored ones, or those of a stored divisor of m with
// the same nullity.
const IterateInvariants& lookup(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t m) {
  if (const auto* it = inv.at(m)) return *it;
  const int nu = seq.nullity(m);
  for (auto rit = inv.degenerate.rbegin(); rit != inv.degenerate.rend(); ++rit) {
    if (rit->first < m && m % rit->first == 0 && rit->second.nu == nu) return rit->second;
  }
  throw Error(ErrorCode::InvariantViolation, "no type numbers for degenerate iterate c^" + std::to_string(m));
}

LinExpr entry(const std::vector<LinExpr>& v, std::int64_t j) {
  return j >= 0 && j < static_cast<std::int64_t>(v.size()) ? v[static_cast<std::size_t>(j)] : LinExpr(0);
}

}  // namespace

std::vector<LinExpr> critical_module_dims(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t m,
                                          int q_max) {
  std::vector<LinExpr> out(static_cast<std::size_t>(q_max + 1), LinExpr(0));
  const std::int64_t i = seq.index(m);
  const int nu = seq.nullity(m);
  const int eps = epsilon_sign(seq, m);
  if (nu == 0) {
    if (eps == 1) {
      for (std::int64_t q : {i, i + 1}) {
        if (q >= 0 && q <= q_max) out[static_cast<std::size_t>(q)] = LinExpr(1);
      }
    }
    return out;
  }
  const IterateInvariants& it = lookup(seq, inv, m);
  const std::vector<LinExpr>& K = eps == 1 ? it.khat : it.khat_minus;
  for (int q = 0; q <= q_max; ++q) out[q] = entry(K, q - i) + entry(K, q - 1 - i);
  return out;
}

LinExpr cbar_dims(const IndexSequence& seq, const LocalInvariants& inv, std::int64_t m, int q) {
  const std::int64_t i = seq.index(m);
  const int eps = epsilon_sign(seq, m);
  if (seq.nullity(m) == 0) return LinExpr(q == i && eps == 1 ? 1 : 0);
  const IterateInvariants& it = lookup(seq, inv, m);
  return entry(eps == 1 ? it.khat : it.khat_minus, q - i);
}

std::int64_t truncation_order(const IndexSequence& seq, int k_max) {
  const MeanIndex a = mean_index(seq.cls, seq.p);
  if (!(a.approx > 0.0)) {
    throw Error(ErrorCode::NonPositiveMeanIndex, seq.cls.name() + " with p = " + std::to_string(seq.p));
  }
  // |i(c^m) - m alpha| <= 2, so iterates with m alpha > k_max + 3 start above k_max.
  return static_cast<std::int64_t>(std::floor((k_max + 3) / a.approx)) + 1;
}

MorseLedger morse_type_numbers(const std::vector<MorseInput>& records, int k_max) {
  MorseLedger ledger;
  ledger.k_max = k_max;
  ledger.M.assign(static_cast<std::size_t>(k_max + 1), LinExpr(0));
  for (int q = 0; q <= k_max; ++q) ledger.b.push_back(betti(q));
  for (const auto& r : records) {
    const std::int64_t last = truncation_order(r.seq, k_max);
    for (std::int64_t m = 1; m <= last; ++m) {
      const auto dims = critical_module_dims(r.seq, r.inv, m, k_max);
      for (int q = 0; q <= k_max; ++q) ledger.M[q] += dims[q];
    }
    for (const auto& [name, ub] : r.inv.bounds()) ledger.bounds[name] = ub;
  }
  return ledger;
}

std::string MorseLedger::to_csv() const {
  std::ostringstream os;
  os << "k,M_k,b_k\n";
  for (int k = 0; k <= k_max; ++k) os << k << ',' << M[k].to_string() << ',' << b[k] << '\n';
  return os.str();
}

std::vector<InequalityCheck> check_morse_inequalities(const MorseLedger& ledger, int k_max) {
  if (k_max > ledger.k_max) throw Error(ErrorCode::InvalidInput, "ledger does not reach k_max");
  std::vector<InequalityCheck> out;
  for (int k = 0; k <= k_max; ++k) {
    InequalityCheck plain{k, false, ledger.M[k], ledger.b[k], Decision::holds_for_all};
    plain.decision = decide_geq(plain.lhs, plain.rhs, ledger.bounds);
    out.push_back(plain);
    InequalityCheck alt{k, true, LinExpr(0), 0, Decision::holds_for_all};
    for (int j = 0; j <= k; ++j) {
      const std::int64_t s = (k - j) % 2 == 0 ? 1 : -1;
      alt.lhs += s * ledger.M[j];
      alt.rhs += s * ledger.b[j];
    }
    alt.decision = decide_geq(alt.lhs, alt.rhs, ledger.bounds);
    out.push_back(alt);
  }
  return out;
}

std::string InequalityCheck::text() const {
  std::ostringstream os;
  if (!alternating) {
    os << "M_" << k << " = " << lhs.to_string() << " >= b_" << k << " = " << rhs;
  } else {
    // The degree-zero terms vanish in every case of interest and are dropped
    // from the display when both are zero.
    auto chain = [&](const char* sym) {
      std::ostringstream s;
      for (int j = k; j >= 0; --j) {
        if (j == 0 && k > 0) break;
        if (j != k) s << ((k - j) % 2 == 0 ? " + " : " - ");
        s << sym << "_" << j;
      }
      return s.str();
    };
    os << lhs.to_string() << " = " << chain("M") << " >= " << chain("b") << " = " << rhs;
  }
  os << " (" << to_string(decision) << ")";
  return os.str();
}

Rational gamma_of(std::int64_t i1, std::int64_t i2) {
  const Rational mag = (i2 - i1) % 2 == 0 ? Rational(1) : Rational(1, 2);
  return i1 % 2 == 0 ? mag : -mag;
}

IdentityValue rademacher_identity_lhs(const std::vector<NondegenerateTerm>& nondeg,
                                      const std::vector<SaddleTerm>& saddles) {
  IdentityValue v;
  for (const auto& t : nondeg) {
    if (!(t.alpha.approx > 0.0)) throw Error(ErrorCode::NonPositiveAlpha, "mean index must be positive");
    v.approx += boost::rational_cast<double>(t.gamma) / t.alpha.approx;
    if (t.alpha.exact) v.value += t.gamma / t.alpha.value;
    else v.exact = false;
  }
  for (const auto& s : saddles) {
    if (!(s.alpha.approx > 0.0)) throw Error(ErrorCode::NonPositiveAlpha, "mean index must be positive");
    const std::int64_t num = s.n - 1 - s.khat1;
    v.approx -= static_cast<double>(num) / (static_cast<double>(s.n) * s.alpha.approx);
    if (s.alpha.exact) v.value -= Rational(num) / (Rational(s.n) * s.alpha.value);
    else v.exact = false;
  }
  if (!v.exact) v.value = Rational(0);
  return v;
}

BetaInvariant beta_invariant(const IndexSequence& seq, const LocalInvariants& inv) {
  if (seq.cls.tag != CGClass::CG7 || seq.index(1) != 1) {
    throw Error(ErrorCode::NotDegenerateSaddle, "needs a CG-7 geodesic with i(c) = 1");
  }
  const std::int64_t n = seq.cls.sigma_exact.denominator();
  const IterateInvariants* d = inv.at(n);
  if (!d || d->nu != 2 || !(d->k[0] == LinExpr(0)) || !(d->k[2] == LinExpr(0)) || !d->khat[1].is_constant()) {
    throw Error(ErrorCode::NotDegenerateSaddle, "needs k_0(c^n) = k_2(c^n) = 0 and a value for khat_1(c^n)");
  }
  const std::int64_t khat1 = d->khat[1].constant();
  BetaInvariant out;
  out.direct = Rational(khat1 + 1 - n, n);
  LinExpr sum(0);
  for (std::int64_t m = 1; m <= 2 * n; ++m) {
    const std::int64_t top = seq.index(m) + seq.nullity(m) + 1;
    for (int j = 0; j <= top; ++j) sum += (j % 2 == 0 ? 1 : -1) * cbar_dims(seq, inv, m, j);
  }
  if (!sum.is_constant()) throw Error(ErrorCode::NotDegenerateSaddle, "symbolic entries in the alternating sum");
  out.summed = Rational(sum.constant(), 2 * n);
  return out;
}

}  // namespace finsler
