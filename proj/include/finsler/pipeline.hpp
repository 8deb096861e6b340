#pragma once

// End-to-end run on the Katok metric: search, Poincare maps, classification,
// index iteration against measured Hessian indices, and the mean index identity.

#include <string>
#include <vector>

#include "finsler/flow.hpp"
#include "finsler/loop_space.hpp"
#include "finsler/verifier.hpp"

namespace finsler {

struct KatokOptions {
  double epsilon = 0.0;  // 0 selects 1/pi
  int vertices = 40;
  int m_check = 5;
};

struct IterateCheck {
  int m = 1;
  std::int64_t predicted_index = 0;
  int predicted_nullity = 0;
  int measured_index = -1;
  int measured_nullity = -1;
  bool match() const { return predicted_index == measured_index && predicted_nullity == measured_nullity; }
};

struct PrimeReport {
  GeodesicRecord record;
  double expected_length = 0.0;
  PoincareClass cls;
  int p = 0;
  std::vector<IterateCheck> iterates;
};

struct KatokReport {
  MetricSpec metric;
  std::vector<GeodesicRecord> records;
  std::vector<PrimeReport> primes;
  double equator_residual = 0.0;  // spray residual of the explicit equators
  MultiResult multi;
  double seconds = 0.0;

  bool lengths_ok(double tol = 1e-4) const;
  bool classes_ok() const;  // both CG-8
  bool indices_ok() const;
  bool identity_ok(double tol = 1e-3) const;
  std::string to_text() const;
  std::string to_json() const;
};

/// max over samples of |u'' - spray(u, u')| along both equators, written as
/// explicit curves in the north chart.
double equator_spray_residual(const MetricSpec& metric, int samples = 64);

/// p from i(c) = 2p + 2[sigma] + 1 for an elliptic class; throws InvalidP if
/// no integer p >= 0 fits.
int recover_p(const PoincareClass& cls, int index_of_c);

KatokReport katok_report(const KatokOptions& opt = {});

/// The two equators of the Katok metric from their closed-form rotation
/// numbers 1/(1+eps) (p = 0) and eps/(1-eps) (p = 1).
std::vector<MultiRecord> katok_closed_form_records(double epsilon, int m_max = 64);

}  // namespace finsler
