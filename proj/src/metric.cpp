#include "finsler/metric.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace finsler {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ChartDomain: return "ChartDomain";
    case ErrorCode::InvalidMetric: return "InvalidMetric";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::NotClosed: return "NotClosed";
    case ErrorCode::SegmentTooLong: return "SegmentTooLong";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::NotSymplectic: return "NotSymplectic";
    case ErrorCode::AmbiguousBoundary: return "AmbiguousBoundary";
    case ErrorCode::InvalidP: return "InvalidP";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::NonPositiveMeanIndex: return "NonPositiveMeanIndex";
    case ErrorCode::NonPositiveAlpha: return "NonPositiveAlpha";
    case ErrorCode::NotDegenerateSaddle: return "NotDegenerateSaddle";
    case ErrorCode::IncompleteRuleSet: return "IncompleteRuleSet";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

namespace {

double chart_sign(Chart chart) { return chart == Chart::north ? 1.0 : -1.0; }

void require_in_chart(const Vec2& u) {
  if (!(u.norm() <= kChartRadius)) {
    throw Error(ErrorCode::ChartDomain, "coordinates outside chart validity disk");
  }
}

Vec2 rot90(const Vec2& u) { return {-u.y(), u.x()}; }

}  // namespace

Chart other(Chart chart) { return chart == Chart::north ? Chart::south : Chart::north; }

Mat2 transition_jacobian(const Vec2& u) {
  const double q = u.squaredNorm();
  return (q * Mat2::Identity() - 2.0 * u * u.transpose()) / (q * q);
}

SurfacePoint to_chart(const SurfacePoint& p, Chart target) {
  if (p.chart == target) return p;
  const double q = p.u.squaredNorm();
  if (q == 0.0) throw Error(ErrorCode::ChartDomain, "pole is not covered by the other chart");
  SurfacePoint out{target, p.u / q};
  require_in_chart(out.u);
  return out;
}

TangentVector to_chart(const TangentVector& t, Chart target) {
  if (t.base.chart == target) return t;
  TangentVector out;
  out.base = to_chart(t.base, target);
  out.v = transition_jacobian(t.base.u) * t.v;
  return out;
}

Vec3 embed(const SurfacePoint& p) {
  const double q = p.u.squaredNorm();
  const double s = chart_sign(p.chart);
  return Vec3(2.0 * p.u.x(), 2.0 * p.u.y(), s * (1.0 - q)) / (1.0 + q);
}

Eigen::Matrix<double, 3, 2> embedding_jacobian(const SurfacePoint& p) {
  const double q = p.u.squaredNorm();
  const double s = chart_sign(p.chart);
  const double d = 1.0 + q;
  Eigen::Matrix<double, 3, 2> jac;
  for (int k = 0; k < 2; ++k) {
    const double uk = p.u[k];
    jac(0, k) = (k == 0 ? 2.0 / d : 0.0) - 4.0 * p.u.x() * uk / (d * d);
    jac(1, k) = (k == 1 ? 2.0 / d : 0.0) - 4.0 * p.u.y() * uk / (d * d);
    jac(2, k) = -4.0 * s * uk / (d * d);
  }
  return jac;
}

Vec3 embed_velocity(const TangentVector& t) { return embedding_jacobian(t.base) * t.v; }

SurfacePoint from_embedding(const Vec3& x, Chart chart) {
  const Vec3 n = x.normalized();
  const double denom = chart == Chart::north ? 1.0 + n.z() : 1.0 - n.z();
  if (denom <= 0.0) throw Error(ErrorCode::ChartDomain, "point is the excluded pole of this chart");
  SurfacePoint p{chart, Vec2(n.x(), n.y()) / denom};
  require_in_chart(p.u);
  return p;
}

SurfacePoint from_embedding(const Vec3& x) {
  return from_embedding(x, x.z() >= 0.0 ? Chart::north : Chart::south);
}

TangentVector tangent_from_embedding(const Vec3& x, const Vec3& y, Chart chart) {
  TangentVector t;
  t.base = from_embedding(x, chart);
  const Eigen::Matrix<double, 3, 2> jac = embedding_jacobian(t.base);
  // jac has orthogonal columns of equal length (conformal embedding).
  t.v = (jac.transpose() * jac).ldlt().solve(jac.transpose() * y);
  return t;
}

TangentVector tangent_from_embedding(const Vec3& x, const Vec3& y) {
  return tangent_from_embedding(x, y, x.z() >= 0.0 ? Chart::north : Chart::south);
}

MetricSpec MetricSpec::katok(double eps) {
  MetricSpec m{MetricKind::katok, eps};
  m.validate();
  return m;
}

void MetricSpec::validate() const {
  if (kind == MetricKind::round) return;
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidMetric, "katok epsilon must lie in [0, 1)");
  }
}

std::string MetricSpec::to_config() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind = " << (kind == MetricKind::round ? "round" : "katok") << "\n";
  os << "epsilon = " << wind() << "\n";
  return os.str();
}

MetricSpec MetricSpec::from_config(const std::string& text) {
  MetricSpec m;
  bool have_kind = false;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidInput, "expected key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "kind") {
      if (value == "round") m.kind = MetricKind::round;
      else if (value == "katok") m.kind = MetricKind::katok;
      else throw Error(ErrorCode::InvalidInput, "unknown metric kind: " + value);
      have_kind = true;
    } else if (key == "epsilon") {
      try {
        m.epsilon = std::stod(value);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidInput, "epsilon is not a number: " + value);
      }
    } else {
      throw Error(ErrorCode::InvalidInput, "unknown key: " + key);
    }
  }
  if (!have_kind) throw Error(ErrorCode::InvalidInput, "missing key: kind");
  if (m.kind == MetricKind::round) m.epsilon = 0.0;
  m.validate();
  return m;
}

RandersData randers_data(const MetricSpec& metric, const SurfacePoint& p) {
  require_in_chart(p.u);
  const double eps = metric.wind();
  const Vec2& u = p.u;
  const double q = u.squaredNorm();
  const double c = 4.0 / ((1.0 + q) * (1.0 + q));
  const double lam = 1.0 - c * eps * eps * q;
  const Vec2 w = rot90(u);

  const double f1 = c / lam;
  const double f2 = eps * eps * c * c / (lam * lam);
  const double f3 = -eps * c / lam;

  RandersData d;
  d.a = f1 * Mat2::Identity() + f2 * w * w.transpose();
  d.b = f3 * w;
  for (int k = 0; k < 2; ++k) {
    const double ck = -4.0 * c * u[k] / (1.0 + q);
    const double lk = -eps * eps * (ck * q + 2.0 * c * u[k]);
    const double f1k = ck / lam - c * lk / (lam * lam);
    const double f2k = eps * eps * (2.0 * c * ck / (lam * lam) - 2.0 * c * c * lk / (lam * lam * lam));
    const double f3k = -eps * f1k;
    const Vec2 jk = k == 0 ? Vec2(0.0, 1.0) : Vec2(-1.0, 0.0);
    d.da[k] = f1k * Mat2::Identity() + f2k * w * w.transpose() + f2 * (jk * w.transpose() + w * jk.transpose());
    d.db[k] = f3k * w + f3 * jk;
  }
  return d;
}

double eval_F(const MetricSpec& metric, const TangentVector& t) {
  if (t.v.norm() == 0.0) throw Error(ErrorCode::ZeroVector, "Finsler norm of the zero vector");
  const RandersData d = randers_data(metric, t.base);
  return std::sqrt(t.v.dot(d.a * t.v)) + d.b.dot(t.v);
}

double eval_F(const MetricSpec& metric, const Vec3& x, const Vec3& y) {
  if (y.norm() == 0.0) throw Error(ErrorCode::ZeroVector, "Finsler norm of the zero vector");
  const Vec3 wind = metric.wind() * Vec3::UnitZ().cross(x);
  const double lam = 1.0 - wind.squaredNorm();
  const double beta = wind.dot(y);
  return (std::sqrt(lam * y.squaredNorm() + beta * beta) - beta) / lam;
}

Vec2 spray(const MetricSpec& metric, const TangentVector& t) {
  const Vec2& v = t.v;
  if (v.norm() == 0.0) throw Error(ErrorCode::ZeroVector, "spray is undefined at the zero vector");
  const RandersData d = randers_data(metric, t.base);
  const Vec2 av = d.a * v;
  const double alpha = std::sqrt(v.dot(av));
  const double F = alpha + d.b.dot(v);

  const Vec2 Fy = av / alpha + d.b;
  const Mat2 Fyy = (d.a - av * av.transpose() / (alpha * alpha)) / alpha;
  const Mat2 g = Fy * Fy.transpose() + F * Fyy;

  Vec2 rhs = Vec2::Zero();
  for (int k = 0; k < 2; ++k) {
    const double vdav = v.dot(d.da[k] * v);
    const double Fxk = vdav / (2.0 * alpha) + d.db[k].dot(v);
    const Vec2 dFy = d.da[k] * v / alpha - av * vdav / (2.0 * alpha * alpha * alpha) + d.db[k];
    const Vec2 dLy = Fxk * Fy + F * dFy;
    rhs[k] += F * Fxk;
    rhs -= v[k] * dLy;
  }
  return g.ldlt().solve(rhs);
}

double reversibility_defect(const MetricSpec& metric, int sample_count) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  double worst = 0.0;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < sample_count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / std::max(sample_count, 1);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 x(r * std::cos(golden * i), r * std::sin(golden * i), z);
    Vec3 e1 = x.cross(std::abs(x.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX()).normalized();
    const Vec3 e2 = x.cross(e1);
    const double a = angle(rng);
    const Vec3 y = std::cos(a) * e1 + std::sin(a) * e2;
    const double f = eval_F(metric, x, y);
    worst = std::max(worst, std::abs(eval_F(metric, x, -y) - f) / f);
  }
  return worst;
}

bool validate_on_grid(const MetricSpec& metric, int samples) {
  metric.validate();
  std::mt19937_64 rng(777);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < samples; ++i) {
    const Vec3 x = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const Vec3 wind = metric.wind() * Vec3::UnitZ().cross(x);
    if (!(wind.squaredNorm() < 1.0)) return false;
    Vec3 y = Vec3(gauss(rng), gauss(rng), gauss(rng));
    y -= y.dot(x) * x;
    if (y.norm() < 1e-12) continue;
    if (!(eval_F(metric, x, y) > 0.0)) return false;
  }
  return true;
}

}  // namespace finsler
