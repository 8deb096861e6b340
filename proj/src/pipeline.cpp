#include "finsler/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace finsler {

double equator_spray_residual(const MetricSpec& metric, int samples) {
  double worst = 0.0;
  for (const double dir : {1.0, -1.0}) {
    // Unit F-speed along the equator: ground speed 1 + eps with the wind,
    // 1 - eps against it.
    const double w = dir * (1.0 + dir * metric.wind());
    for (int s = 0; s < samples; ++s) {
      const double t = 2.0 * std::numbers::pi * s / (samples * std::abs(w));
      const Vec2 u(std::cos(w * t), std::sin(w * t));
      const Vec2 v = w * Vec2(-std::sin(w * t), std::cos(w * t));
      const Vec2 acc = -w * w * u;
      const TangentVector tv{{Chart::north, u}, v};
      worst = std::max(worst, (acc - spray(metric, tv)).norm());
      worst = std::max(worst, std::abs(eval_F(metric, tv) - 1.0));
    }
  }
  return worst;
}

int recover_p(const PoincareClass& cls, int index_of_c) {
  const std::int64_t fl = cls.tag == CGClass::CG7 ? (cls.sigma_exact.numerator() / cls.sigma_exact.denominator())
                                                  : static_cast<std::int64_t>(std::floor(cls.sigma));
  const std::int64_t twice = index_of_c - 1 - 2 * fl;
  if (twice < 0 || twice % 2 != 0) {
    throw Error(ErrorCode::InvalidP, "i(c) = " + std::to_string(index_of_c) + " does not fit 2p + 2[sigma] + 1");
  }
  return static_cast<int>(twice / 2);
}

KatokReport katok_report(const KatokOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const double pi = std::numbers::pi;
  KatokReport rep;
  const double eps = opt.epsilon > 0.0 ? opt.epsilon : 1.0 / pi;
  rep.metric = MetricSpec::katok(eps);
  rep.equator_residual = equator_spray_residual(rep.metric);

  const double long_len = 2.0 * pi / (1.0 - eps);
  const double cap = 0.5 * long_len * long_len * opt.m_check * opt.m_check * 1.01;
  rep.records = find_closed_geodesics(rep.metric, opt.vertices, cap);

  const std::vector<double> expected = {2.0 * pi / (1.0 + eps), long_len};
  std::vector<MultiRecord> multi;
  for (const auto& r : rep.records) {
    if (r.multiplicity != 1) continue;
    PrimeReport pr;
    pr.record = r;
    pr.expected_length = std::abs(r.length - expected[0]) < std::abs(r.length - expected[1]) ? expected[0] : expected[1];
    pr.cls = classify(r.poincare);
    if (pr.cls.tag == CGClass::CG8) {
      pr.p = recover_p(pr.cls, r.measured_index);
      for (int m = 1; m <= opt.m_check; ++m) {
        IterateCheck ic;
        ic.m = m;
        ic.predicted_index = index_at(pr.cls, pr.p, m);
        ic.predicted_nullity = nullity_at(pr.cls, pr.p, m);
        const GeodesicRecord* found = nullptr;
        for (const auto& s : rep.records) {
          if (s.multiplicity == m && std::abs(s.prime_length - r.length) < 1e-6 * r.length) found = &s;
        }
        GeodesicRecord built;
        if (!found) {
          built = make_record(rep.metric, r.curve.initial(), r.length, m);
          found = &built;
        }
        ic.measured_index = found->measured_index;
        // The kernel always contains the direction along the S^1 orbit.
        ic.measured_nullity = found->measured_nullspace_dim - 1;
        pr.iterates.push_back(ic);
      }
      std::ostringstream label;
      label << "L=" << r.length;
      multi.push_back({index_sequence(pr.cls, pr.p, opt.m_check), LocalInvariants{}, label.str()});
    }
    rep.primes.push_back(std::move(pr));
  }
  if (!multi.empty()) rep.multi = verify_multi(multi, 6);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::vector<MultiRecord> katok_closed_form_records(double epsilon, int m_max) {
  MetricSpec::katok(epsilon).validate();
  std::vector<MultiRecord> out;
  // alpha = 2/(1 +- eps) = 2p + 2 sigma.
  for (const double half : {1.0 / (1.0 + epsilon), 1.0 / (1.0 - epsilon)}) {
    const int p = static_cast<int>(std::floor(half));
    const PoincareClass cls = PoincareClass::cg8(half - p);
    out.push_back({index_sequence(cls, p, m_max), LocalInvariants{}, out.empty() ? "c_1" : "c_2"});
  }
  return out;
}

bool KatokReport::lengths_ok(double tol) const {
  if (primes.size() != 2) return false;
  if (std::abs(primes[0].expected_length - primes[1].expected_length) < tol) return false;
  for (const auto& p : primes) {
    if (std::abs(p.record.length - p.expected_length) > tol) return false;
  }
  return true;
}

bool KatokReport::classes_ok() const {
  if (primes.size() != 2) return false;
  for (const auto& p : primes) {
    if (p.cls.tag != CGClass::CG8) return false;
  }
  return true;
}

bool KatokReport::indices_ok() const {
  if (primes.size() != 2) return false;
  for (const auto& p : primes) {
    if (p.iterates.empty()) return false;
    for (const auto& ic : p.iterates) {
      if (!ic.match()) return false;
    }
  }
  return true;
}

bool KatokReport::identity_ok(double tol) const {
  return classes_ok() && std::abs(multi.identity.approx - kIdentityValue) <= tol;
}

std::string KatokReport::to_text() const {
  std::ostringstream os;
  os.precision(10);
  os << "katok metric, epsilon = " << metric.epsilon << "\n";
  os << "equator spray residual = " << equator_residual << "\n";
  os << records.size() << " records, " << primes.size() << " prime\n";
  for (const auto& p : primes) {
    os << "prime L = " << p.record.length << " (expected " << p.expected_length << ", diff "
       << std::abs(p.record.length - p.expected_length) << ")\n";
    os << "  poincare trace = " << p.record.poincare.trace() << ", det = " << p.record.poincare.det() << "\n";
    os << "  class " << p.cls.describe() << ", p = " << p.p << ", alpha = " << mean_index(p.cls, p.p).to_string() << "\n";
    for (const auto& ic : p.iterates) {
      os << "  m=" << ic.m << " predicted (" << ic.predicted_index << "," << ic.predicted_nullity << ") measured ("
         << ic.measured_index << "," << ic.measured_nullity << ")" << (ic.match() ? "" : " MISMATCH") << "\n";
    }
  }
  os << "mean index identity left side = " << multi.identity.approx << "\n";
  if (multi.row) os << "exact sequence row " << multi.row->to_string() << "\n";
  os << "verdict " << to_string(multi.trace.verdict) << "\n";
  os << "elapsed " << seconds << " s\n";
  return os.str();
}

std::string KatokReport::to_json() const {
  nlohmann::json j;
  j["epsilon"] = metric.epsilon;
  j["equator_residual"] = equator_residual;
  j["records"] = nlohmann::json::parse(records_to_json(metric, records, 50))["records"];
  j["primes"] = nlohmann::json::array();
  for (const auto& p : primes) {
    nlohmann::json pj;
    pj["length"] = p.record.length;
    pj["expected_length"] = p.expected_length;
    pj["class"] = p.cls.describe();
    pj["sigma"] = p.cls.sigma;
    pj["p"] = p.p;
    pj["iterates"] = nlohmann::json::array();
    for (const auto& ic : p.iterates) {
      pj["iterates"].push_back({{"m", ic.m},
                                {"predicted_index", ic.predicted_index},
                                {"predicted_nullity", ic.predicted_nullity},
                                {"measured_index", ic.measured_index},
                                {"measured_nullity", ic.measured_nullity}});
    }
    j["primes"].push_back(pj);
  }
  j["identity"] = multi.identity.approx;
  if (multi.row) j["exact_sequence_row"] = multi.row->to_string();
  j["verdict"] = to_string(multi.trace.verdict);
  return j.dump(2);
}

}  // namespace finsler
