#include <doctest.h>

#include <chrono>

#include "finsler/pipeline.hpp"
#include "finsler/verifier.hpp"

using namespace finsler;

namespace {

MultiRecord cg7_saddle_record(std::int64_t k, std::int64_t n, std::int64_t khat1) {
  const IndexSequence seq = index_sequence(PoincareClass::cg7(k, n), 0, static_cast<int>(4 * n));
  LocalInvariants inv = LocalInvariants::symbolic(seq, 4 * n);
  std::map<std::string, LinExpr> v;
  for (std::int64_t m = n; m <= 4 * n; m += n) {
    v[khat_name(0, m)] = 0;
    v[k_name(1, m)] = khat1;
    v[khat_name(1, m)] = khat1;
    v[k_name(2, m)] = 0;
    v[khat_name(2, m)] = 0;
    if (m % 2 == 0) {
      v[khat_minus_name(1, m)] = 0;
      v[khat_minus_name(2, m)] = 0;
    }
  }
  return {seq, inv.substitute(v), "saddle"};
}

void check_all_leaves_refute(const Trace& t) {
  if (t.branches.empty()) {
    CHECK(t.refutes());
    return;
  }
  for (const auto& b : t.branches) check_all_leaves_refute(b);
}

}  // namespace

TEST_CASE("every class is refuted") {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Trace> traces = verify_all_classes();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(seconds < 60.0);
  REQUIRE(traces.size() == 9);
  for (int j = 0; j < 9; ++j) {
    CHECK(traces[j].label.rfind(class_name(static_cast<CGClass>(j + 1)), 0) == 0);
    CHECK(traces[j].verdict == Verdict::contradiction);
    CHECK(cites_known_anchors(traces[j]));
    check_all_leaves_refute(traces[j]);
  }
  const std::string summary = all_classes_summary(traces);
  CHECK(summary.find("9 of 9 classes contradicted") != std::string::npos);
}

TEST_CASE("CG-3 dies at the first Morse inequality") {
  const Trace t = verify_single_geodesic(PoincareClass::cg3(1.0), 2);
  CHECK(t.verdict == Verdict::contradiction);
  CHECK(t.contains_statement("M_1 = 0 < b_1 = 1"));
}

TEST_CASE("CG-6 contradiction is the alternating inequality at k = 3") {
  const Trace t = verify_single_geodesic(PoincareClass::cg6(1.0), 0);
  CHECK(t.verdict == Verdict::contradiction);
  CHECK(t.contains_statement("1 = M_3 - M_2 + M_1 >= b_3 - b_2 + b_1 = 2 (fails for all admissible values)"));
  CHECK(t.contains_statement("M_1 = 1"));
}

TEST_CASE("CG-7 sigma = 1/3 saddle clashes on tau = n - 1") {
  const Trace t = verify_single_geodesic(PoincareClass::cg7(1, 3), 0);
  CHECK(t.verdict == Verdict::contradiction);
  CHECK(t.contains_statement("tau = max{m : m sigma < 1} = 2, and 2 <= tau <= n - 1 = 2"));
  CHECK(t.contains_statement("tau <= khat_1(c^3) + 1 gives 2 <= 1, contradicting khat_1(c^3) = n - 1 - 2k = 0"));
}

TEST_CASE("CG-9 with p = 1 fails the alternating inequality") {
  const Trace t = verify_single_geodesic(PoincareClass::cg9(2.0), 1);
  CHECK(t.verdict == Verdict::contradiction);
  CHECK(t.contains_statement("1 = M_3 - M_2 + M_1 >= b_3 - b_2 + b_1 = 2"));
}

TEST_CASE("CG-7 over all denominators") {
  const Trace t = verify_cg7_all();
  CHECK(t.verdict == Verdict::contradiction);
  CHECK(t.find_branch("CG-7 p=0 sigma=k/n general") != nullptr);
  CHECK(t.leaf_count() > 1000);
}

TEST_CASE("cg7 homology ladder") {
  const Cg7Analysis a = Cg7Analysis::from_sigma(Rational(1, 5), LinExpr::var(khat_name(1, 5)));
  CHECK(a.tau == 4);
  const HomologyLadder la = cg7_homology_ladder(a);
  CHECK(la.h1 == 4);
  CHECK(la.constraints.back().text == "4 <= 1 + khat_1(c^5)");

  const Cg7Analysis b = Cg7Analysis::from_sigma(Rational(2, 5), LinExpr(0));
  CHECK(b.tau == 2);
  CHECK(b.tau < 5 - 1);

  const Cg7Analysis c = Cg7Analysis::from_sigma(Rational(1, 3), LinExpr(0));
  CHECK(c.tau == 2);
  CHECK_THROWS_AS(Cg7Analysis::from_sigma(Rational(3, 2), LinExpr(0)), Error);
}

TEST_CASE("hingston criteria") {
  {
    const IndexSequence seq = index_sequence(PoincareClass::cg2(), 1, 8);
    const LocalInvariants inv = LocalInvariants::symbolic(seq, 8).substitute({{khat_name(0, 1), 1}});
    CHECK(hingston_applicable(seq, inv) == 1);
  }
  {
    const IndexSequence seq = index_sequence(PoincareClass::cg5(), 0, 8);
    const LocalInvariants inv = LocalInvariants::symbolic(seq, 8).substitute({{k_name(2, 2), 1}});
    CHECK(hingston_applicable(seq, inv, 2) == 2);
    // c itself is not degenerate.
    CHECK_FALSE(hingston_applicable(seq, inv, 1).has_value());
  }
  {
    const MultiRecord r = cg7_saddle_record(1, 3, 0);
    CHECK_FALSE(hingston_applicable(r.seq, r.inv, 3).has_value());
  }
}

TEST_CASE("anchors") {
  CHECK(is_reference_anchor("morse-inequality"));
  CHECK(is_reference_anchor("exact-sequence"));
  CHECK_FALSE(is_reference_anchor("remark"));
  Trace t;
  t.add("x", "made-up");
  CHECK_FALSE(cites_known_anchors(t));
}

TEST_CASE("trace json round trip") {
  const Trace t = verify_single_geodesic(PoincareClass::cg6(1.0), 0);
  const std::string json = trace_to_json(t);
  const Trace back = trace_from_json(json);
  CHECK(trace_to_json(back) == json);
  CHECK(back.leaf_count() == t.leaf_count());
  CHECK(back.verdict == t.verdict);
  CHECK_THROWS_AS(trace_from_json("[1,2"), Error);
}

TEST_CASE("trace text depth limit") {
  const Trace t = verify_single_geodesic(PoincareClass::cg6(1.0), 0);
  CHECK(trace_to_text(t, 0).size() < trace_to_text(t).size());
  CHECK(trace_to_text(t).find("[CG-6(b=1)] contradiction") == 0);
}

TEST_CASE("katok closed-form pair is consistent") {
  const MultiResult r = verify_multi(katok_closed_form_records(0.31830988618379067));
  CHECK(r.trace.verdict == Verdict::consistent);
  REQUIRE(r.row.has_value());
  CHECK(r.row->to_string() == "0,0,Q,Q,0");
  CHECK(r.identity.approx == doctest::Approx(static_cast<double>(kIdentityValue)).epsilon(1e-9));
  CHECK(r.ledger.M[1] == LinExpr(1));
  CHECK(r.ledger.M[2] == LinExpr(1));
  CHECK(r.ledger.M[0] == LinExpr(0));
}

TEST_CASE("a lone CG-7 saddle is inconsistent in multi mode") {
  const MultiResult r = verify_multi({cg7_saddle_record(1, 3, 0)});
  CHECK(r.trace.verdict == Verdict::contradiction);
  CHECK(r.identity.exact);
  CHECK(r.identity.value == Rational(-1));
}

TEST_CASE("a lone CG-7 record with the wrong khat_1 breaks the identity") {
  const MultiResult r = verify_multi({cg7_saddle_record(1, 3, 1)});
  CHECK(r.identity.value != Rational(-1));
  CHECK(r.trace.verdict == Verdict::contradiction);
}
