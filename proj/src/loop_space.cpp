#include "finsler/loop_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace finsler {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Vec3 rotate_z(const Vec3& x, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * x.x() - s * x.y(), s * x.x() + c * x.y(), x.z()};
}

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

Vec3 project(const Vec3& v, const Vec3& x) { return v - v.dot(x) * x; }

// Travel time t from p to q under the rotational wind: the boat moves on a
// great circle in the frame co-rotating with the wind, so t is the root of
// t = angle(p, R(-eps t) q). The root is unique since the slope of
// t - angle(...) lies in [1 - eps, 1 + eps].
struct SegmentSolve {
  double t;
  Vec3 b;  // R(-eps t) q
  double sin_theta;
  double slope;
};

SegmentSolve solve_segment(double eps, const Vec3& p, const Vec3& q) {
  SegmentSolve s{angle_between(p, q), q, p.cross(q).norm(), 1.0};
  if (eps == 0.0) return s;
  const Vec3 z(0.0, 0.0, 1.0);
  for (int iter = 0; iter < 60; ++iter) {
    s.b = rotate_z(q, -eps * s.t);
    const double theta = angle_between(p, s.b);
    s.sin_theta = p.cross(s.b).norm();
    const double g = s.t - theta;
    s.slope = s.sin_theta > 1e-300 ? 1.0 - eps * p.dot(z.cross(s.b)) / s.sin_theta : 1.0;
    const double dt = g / s.slope;
    s.t -= dt;
    if (std::abs(dt) <= 1e-16 * std::max(1.0, s.t)) break;
  }
  s.b = rotate_z(q, -eps * s.t);
  s.sin_theta = p.cross(s.b).norm();
  s.slope = s.sin_theta > 1e-300 ? 1.0 - eps * p.dot(z.cross(s.b)) / s.sin_theta : 1.0;
  return s;
}

void check_segment(double length) {
  if (!(length <= kMaxSegmentLength)) {
    std::ostringstream os;
    os << "segment of length " << length << " exceeds " << kMaxSegmentLength;
    throw Error(ErrorCode::SegmentTooLong, os.str());
  }
}

// R^3 gradient of E, one row per vertex.
std::vector<Vec3> energy_gradient_r3(const MetricSpec& metric, const std::vector<Vec3>& x) {
  const int k = static_cast<int>(x.size());
  std::vector<Vec3> g(k, Vec3::Zero());
  for (int i = 0; i < k; ++i) {
    const int j = (i + 1) % k;
    const SegmentGradient s = segment_gradient(metric, x[i], x[j]);
    check_segment(s.length);
    g[i] += k * s.length * s.d_p;
    g[j] += k * s.length * s.d_q;
  }
  return g;
}

Vec3 displaced(const Vec3& x, const Vec3& e1, const Vec3& e2, double d1, double d2) {
  return (x + d1 * e1 + d2 * e2).normalized();
}

std::vector<Vec3> great_circle(const Vec3& pole, int k, bool reversed) {
  const auto [e1, e2] = tangent_frame(pole);
  std::vector<Vec3> pts(k);
  for (int i = 0; i < k; ++i) {
    const double a = 2.0 * std::numbers::pi * i / k * (reversed ? -1.0 : 1.0);
    pts[i] = std::cos(a) * e1 + std::sin(a) * e2;
  }
  return pts;
}

// Distance from x to the closed polyline through pts.
double distance_to_polyline(const Vec3& x, const std::vector<Vec3>& pts, Vec3* direction) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = pts[i];
    const Vec3& b = pts[(i + 1) % n];
    const Vec3 ab = b - a;
    const double s = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double d = (a + s * ab - x).norm();
    if (d < best) {
      best = d;
      if (direction) *direction = ab;
    }
  }
  return best;
}

std::vector<Vec3> sample_curve(const Trajectory& c, int n) {
  std::vector<Vec3> pts(n);
  const double T = c.duration();
  for (int i = 0; i < n; ++i) pts[i] = c.position_at(T * i / n);
  return pts;
}

bool same_geodesic(const GeodesicRecord& a, const GeodesicRecord& b) {
  if (std::abs(a.prime_length - b.prime_length) > 1e-5 * std::max(a.prime_length, b.prime_length)) return false;
  const std::vector<Vec3> poly = sample_curve(b.curve, 2048);
  const double T = a.curve.duration();
  const double dt = 1e-4 * T;
  for (int i = 0; i < 64; ++i) {
    const double t = T * i / 64.0;
    Vec3 dir;
    if (distance_to_polyline(a.curve.position_at(t), poly, &dir) > 1e-4) return false;
    const Vec3 tangent = a.curve.position_at(t + dt) - a.curve.position_at(t - dt);
    if (tangent.dot(dir) <= 0.0) return false;
  }
  return true;
}

struct ShootResult {
  TangentVector init;
  double length;
  double residual;
};

// Gauss-Newton on (transverse offset, direction angle, period) for the
// closure of the unit-speed orbit through x0 with velocity y0.
ShootResult shoot(const MetricSpec& metric, const Vec3& x0, const Vec3& y0, double length) {
  const Vec3 d0 = y0.normalized();
  const Vec3 n0 = x0.cross(d0).normalized();
  auto initial = [&](const Eigen::Vector3d& w) {
    const Vec3 x = (x0 + w[0] * n0).normalized();
    const Vec3 d = project(d0, x).normalized();
    const Vec3 n = x.cross(d);
    Vec3 y = std::cos(w[1]) * d + std::sin(w[1]) * n;
    y /= eval_F(metric, x, y);
    return std::pair<Vec3, Vec3>(x, y);
  };
  auto residual = [&](const Eigen::Vector3d& w) {
    const auto [x, y] = initial(w);
    const TangentVector start = tangent_from_embedding(x, y);
    const TangentVector end = flow_endpoint(metric, start, w[2], 1e-13);
    Eigen::Matrix<double, 6, 1> r;
    r << embed(end.base) - x, embed_velocity(end) - y;
    return r;
  };
  Eigen::Vector3d w(0.0, 0.0, length);
  Eigen::Matrix<double, 6, 1> r = residual(w);
  for (int iter = 0; iter < 10 && r.norm() > 1e-11; ++iter) {
    Eigen::Matrix<double, 6, 3> J;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d wp = w;
      const double h = 1e-7;
      wp[c] += h;
      J.col(c) = (residual(wp) - r) / h;
    }
    const Eigen::Vector3d step = J.colPivHouseholderQr().solve(-r);
    Eigen::Vector3d trial = w + step;
    Eigen::Matrix<double, 6, 1> rt = residual(trial);
    if (rt.norm() >= r.norm()) break;
    w = trial;
    r = rt;
  }
  const auto [x, y] = initial(w);
  return {tangent_from_embedding(x, y), w[2], r.norm()};
}

}  // namespace

std::vector<Vec3> PolygonLoop::embedded() const {
  std::vector<Vec3> out;
  out.reserve(vertices.size());
  for (const auto& v : vertices) out.push_back(embed(v));
  return out;
}

PolygonLoop PolygonLoop::from_embedded(const std::vector<Vec3>& points) {
  PolygonLoop loop;
  loop.vertices.reserve(points.size());
  for (const auto& x : points) loop.vertices.push_back(from_embedding(x.normalized()));
  return loop;
}

PolygonLoop PolygonLoop::iterate(int m) const {
  if (m < 1) throw Error(ErrorCode::InvalidInput, "iterate count must be positive");
  PolygonLoop out;
  for (int r = 0; r < m; ++r) out.vertices.insert(out.vertices.end(), vertices.begin(), vertices.end());
  return out;
}

std::pair<Vec3, Vec3> tangent_frame(const Vec3& x) {
  const Vec3 ref = std::abs(x.z()) < 0.9 ? Vec3(0.0, 0.0, 1.0) : Vec3(1.0, 0.0, 0.0);
  const Vec3 e1 = ref.cross(x).normalized();
  return {e1, x.cross(e1)};
}

double segment_length(const MetricSpec& metric, const Vec3& p, const Vec3& q) {
  return solve_segment(metric.wind(), p, q).t;
}

SegmentGradient segment_gradient(const MetricSpec& metric, const Vec3& p, const Vec3& q) {
  const double eps = metric.wind();
  const SegmentSolve s = solve_segment(eps, p, q);
  SegmentGradient out{s.t, Vec3::Zero(), Vec3::Zero()};
  if (s.sin_theta < 1e-300) return out;
  const double denom = s.sin_theta * s.slope;
  out.d_p = -project(s.b, p) / denom;
  out.d_q = -project(rotate_z(p, eps * s.t), q) / denom;
  return out;
}

Vec3 segment_initial_velocity(const MetricSpec& metric, const Vec3& p, const Vec3& q) {
  const double eps = metric.wind();
  const SegmentSolve s = solve_segment(eps, p, q);
  const Vec3 dir = project(s.b, p);
  if (dir.norm() == 0.0) throw Error(ErrorCode::ZeroVector, "degenerate segment");
  return dir.normalized() + eps * Vec3(0.0, 0.0, 1.0).cross(p);
}

double energy(const MetricSpec& metric, const std::vector<Vec3>& x) {
  const int k = static_cast<int>(x.size());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double l = segment_length(metric, x[i], x[(i + 1) % k]);
    check_segment(l);
    sum += l * l;
  }
  return 0.5 * k * sum;
}

double energy(const MetricSpec& metric, const PolygonLoop& loop) { return energy(metric, loop.embedded()); }

VectorXd energy_gradient(const MetricSpec& metric, const std::vector<Vec3>& x) {
  const std::vector<Vec3> g = energy_gradient_r3(metric, x);
  VectorXd out(2 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto [e1, e2] = tangent_frame(x[i]);
    out[2 * i] = g[i].dot(e1);
    out[2 * i + 1] = g[i].dot(e2);
  }
  return out;
}

MatrixXd energy_hessian(const MetricSpec& metric, const std::vector<Vec3>& x, double step) {
  const int k = static_cast<int>(x.size());
  std::vector<std::pair<Vec3, Vec3>> frames(k);
  for (int i = 0; i < k; ++i) frames[i] = tangent_frame(x[i]);

  // Coordinate gradient with vertex i displaced by offset (d1, d2).
  auto coord_gradient = [&](int i, double d1, double d2) {
    std::vector<Vec3> y = x;
    const Vec3 raw = x[i] + d1 * frames[i].first + d2 * frames[i].second;
    y[i] = raw.normalized();
    const std::vector<Vec3> g = energy_gradient_r3(metric, y);
    VectorXd out(2 * k);
    for (int j = 0; j < k; ++j) {
      Vec3 e1 = frames[j].first, e2 = frames[j].second;
      if (j == i) {
        e1 = project(e1, y[i]) / raw.norm();
        e2 = project(e2, y[i]) / raw.norm();
      }
      out[2 * j] = g[j].dot(e1);
      out[2 * j + 1] = g[j].dot(e2);
    }
    return out;
  };

  MatrixXd H(2 * k, 2 * k);
  for (int i = 0; i < k; ++i) {
    for (int a = 0; a < 2; ++a) {
      const double d1 = a == 0 ? step : 0.0, d2 = a == 1 ? step : 0.0;
      H.col(2 * i + a) = (coord_gradient(i, d1, d2) - coord_gradient(i, -d1, -d2)) / (2.0 * step);
    }
  }
  return 0.5 * (H + H.transpose());
}

double newton_polish(const MetricSpec& metric, std::vector<Vec3>& x, int max_iterations, double gradient_tol) {
  const int k = static_cast<int>(x.size());
  VectorXd g = energy_gradient(metric, x);
  const double scale = std::max(1.0, energy(metric, x));
  for (int iter = 0; iter < max_iterations && g.lpNorm<Eigen::Infinity>() > gradient_tol * scale; ++iter) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(energy_hessian(metric, x));
    const VectorXd& lambda = es.eigenvalues();
    const double cutoff = 1e-9 * lambda.cwiseAbs().maxCoeff();
    VectorXd step = VectorXd::Zero(2 * k);
    const VectorXd coeff = es.eigenvectors().transpose() * g;
    for (int j = 0; j < 2 * k; ++j) {
      if (std::abs(lambda[j]) > cutoff) step -= coeff[j] / lambda[j] * es.eigenvectors().col(j);
    }
    double largest = 0.0;
    for (int i = 0; i < k; ++i) largest = std::max(largest, step.segment<2>(2 * i).norm());
    const double cap = 0.1;
    if (largest > cap) step *= cap / largest;

    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-3 && !accepted; alpha *= 0.5) {
      std::vector<Vec3> trial(k);
      for (int i = 0; i < k; ++i) {
        const auto [e1, e2] = tangent_frame(x[i]);
        trial[i] = displaced(x[i], e1, e2, alpha * step[2 * i], alpha * step[2 * i + 1]);
      }
      try {
        VectorXd gt = energy_gradient(metric, trial);
        if (gt.norm() < g.norm() || alpha < 2e-3) {
          x = std::move(trial);
          g = std::move(gt);
          accepted = true;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SegmentTooLong) throw;
      }
    }
    if (!accepted) break;
  }
  return g.lpNorm<Eigen::Infinity>() / scale;
}

int default_vertex_count(double length) { return std::max(8, static_cast<int>(std::ceil(length / 0.3))); }

IndexPair hessian_counts(const MetricSpec& metric, const std::vector<Vec3>& vertices, double null_threshold) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(energy_hessian(metric, vertices), Eigen::EigenvaluesOnly);
  const VectorXd& lambda = es.eigenvalues();
  const double cutoff = null_threshold * lambda.cwiseAbs().maxCoeff();
  IndexPair out{0, 0};
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    if (lambda[j] < -cutoff) ++out.index;
    else if (lambda[j] <= cutoff) ++out.nullspace_dim;
  }
  return out;
}

IndexPair hessian_index(const MetricSpec& metric, const GeodesicRecord& geo, int k, double null_threshold) {
  if (k < 3) throw Error(ErrorCode::InvalidInput, "need at least three vertices");
  auto counts_at = [&](int n) {
    std::vector<Vec3> pts = sample_curve(geo.curve, n);
    newton_polish(metric, pts, 6, 1e-12);
    return hessian_counts(metric, pts, null_threshold);
  };
  const IndexPair base = counts_at(k);
  const IndexPair fine = counts_at(2 * k);
  if (base.index != fine.index || base.nullspace_dim != fine.nullspace_dim) {
    std::ostringstream os;
    os << "counts (" << base.index << ", " << base.nullspace_dim << ") at k = " << k << " but (" << fine.index
       << ", " << fine.nullspace_dim << ") at k = " << 2 * k;
    throw Error(ErrorCode::ResolutionTooCoarse, os.str());
  }
  return base;
}

int multiplicity(const GeodesicRecord& geo, double tol) {
  const double T = geo.curve.duration();
  if (!(T > 0.0)) return 1;
  constexpr int kMaxMultiplicity = 16;
  constexpr int kProbes = 128;
  for (int m = kMaxMultiplicity; m >= 2; --m) {
    bool invariant = true;
    for (int i = 0; i < kProbes && invariant; ++i) {
      const double t = T * i / kProbes;
      invariant = (geo.curve.position_at(t + T / m) - geo.curve.position_at(t)).norm() < tol;
    }
    if (invariant) return m;
  }
  return 1;
}

GeodesicRecord make_record(const MetricSpec& metric, const TangentVector& init, double prime_length, int m,
                           bool measure_index) {
  GeodesicRecord rec;
  rec.multiplicity = m;
  rec.prime_length = prime_length;
  rec.length = m * prime_length;
  rec.energy = 0.5 * rec.length * rec.length;
  rec.curve = integrate_geodesic(metric, init, rec.length, 1e-12);
  rec.closure_residual = closure_residual(rec.curve);
  rec.poincare = linearized_poincare(metric, rec, 1e-6);
  if (measure_index) {
    const IndexPair ip = hessian_index(metric, rec, default_vertex_count(rec.length));
    rec.measured_index = ip.index;
    rec.measured_nullspace_dim = ip.nullspace_dim;
  }
  return rec;
}

std::vector<GeodesicRecord> find_closed_geodesics(const MetricSpec& metric, int k, double energy_cap,
                                                  const SeedSpec& seeds, std::vector<SeedFailure>* failures) {
  metric.validate();
  if (k < 3) throw Error(ErrorCode::InvalidInput, "need at least three vertices");
  auto fail = [&](const std::string& seed, const std::string& reason) {
    if (failures) failures->push_back({seed, reason});
  };

  std::vector<GeodesicRecord> primes;
  for (double tilt : seeds.tilts) {
    for (double azimuth : seeds.azimuths) {
      for (int orient = 0; orient < (seeds.both_orientations ? 2 : 1); ++orient) {
        std::ostringstream label;
        label << "tilt=" << tilt << " azimuth=" << azimuth << (orient ? " reversed" : "");
        const Vec3 pole(std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth), std::cos(tilt));
        std::vector<Vec3> x = great_circle(pole, k, orient == 1);
        try {
          const double gnorm = newton_polish(metric, x, seeds.max_newton_iterations, 1e-10);
          if (gnorm > 1e-8) {
            fail(label.str(), "gradient did not vanish");
            continue;
          }
          double length = 0.0, shortest = std::numeric_limits<double>::infinity();
          for (int i = 0; i < k; ++i) {
            const double l = segment_length(metric, x[i], x[(i + 1) % k]);
            length += l;
            shortest = std::min(shortest, l);
          }
          if (shortest < 1e-3 * length / k) {
            fail(label.str(), "polygon collapsed");
            continue;
          }
          if (0.5 * length * length > energy_cap) {
            fail(label.str(), "critical point above the energy cap");
            continue;
          }
          const ShootResult sr = shoot(metric, x[0], segment_initial_velocity(metric, x[0], x[1]), length);
          if (!(sr.residual < 1e-8)) {
            fail(label.str(), "shooting did not close");
            continue;
          }
          GeodesicRecord probe;
          probe.curve = integrate_geodesic(metric, sr.init, sr.length, 1e-12);
          probe.prime_length = sr.length;
          const int m = multiplicity(probe, 1e-6);
          if (m > 1) {
            probe.curve = integrate_geodesic(metric, sr.init, sr.length / m, 1e-12);
            probe.prime_length = sr.length / m;
          }
          probe.length = probe.prime_length;
          const bool duplicate = std::any_of(primes.begin(), primes.end(),
                                             [&](const GeodesicRecord& r) { return same_geodesic(probe, r); });
          if (!duplicate) primes.push_back(std::move(probe));
        } catch (const Error& e) {
          fail(label.str(), e.what());
        }
      }
    }
  }

  std::vector<GeodesicRecord> out;
  for (const auto& p : primes) {
    const double e1 = 0.5 * p.prime_length * p.prime_length;
    for (int m = 1; m * m * e1 <= energy_cap; ++m) {
      out.push_back(make_record(metric, p.curve.initial(), p.prime_length, m));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GeodesicRecord& a, const GeodesicRecord& b) { return a.energy < b.energy; });
  return out;
}

namespace {

nlohmann::json state_json(const TangentVector& t) {
  return {{"chart", t.base.chart == Chart::north ? "north" : "south"},
          {"u", {t.base.u.x(), t.base.u.y()}},
          {"v", {t.v.x(), t.v.y()}}};
}

TangentVector state_from_json(const nlohmann::json& j) {
  TangentVector t;
  const std::string chart = j.at("chart").get<std::string>();
  if (chart != "north" && chart != "south") throw Error(ErrorCode::InvalidInput, "unknown chart " + chart);
  t.base.chart = chart == "north" ? Chart::north : Chart::south;
  t.base.u = Vec2(j.at("u").at(0).get<double>(), j.at("u").at(1).get<double>());
  t.v = Vec2(j.at("v").at(0).get<double>(), j.at("v").at(1).get<double>());
  return t;
}

}  // namespace

std::string records_to_json(const MetricSpec& metric, const std::vector<GeodesicRecord>& records,
                            int max_curve_samples) {
  nlohmann::json doc;
  doc["metric"] = {{"kind", metric.kind == MetricKind::round ? "round" : "katok"}, {"epsilon", metric.wind()}};
  doc["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j;
    j["energy"] = r.energy;
    j["length"] = r.length;
    j["multiplicity"] = r.multiplicity;
    j["prime_length"] = r.prime_length;
    j["poincare"] = {{r.poincare.m(0, 0), r.poincare.m(0, 1)}, {r.poincare.m(1, 0), r.poincare.m(1, 1)}};
    j["measured_index"] = r.measured_index;
    j["measured_nullspace_dim"] = r.measured_nullspace_dim;
    j["closure_residual"] = r.closure_residual;
    nlohmann::json curve = nlohmann::json::array();
    const std::size_t n = r.curve.samples.size();
    const std::size_t stride = std::max<std::size_t>(1, (n + max_curve_samples - 1) / std::max(1, max_curve_samples));
    for (std::size_t i = 0; i < n; i += stride) {
      nlohmann::json s = state_json(r.curve.samples[i].state);
      s["t"] = r.curve.samples[i].time;
      curve.push_back(s);
    }
    if (n > 0 && (n - 1) % stride != 0) {
      nlohmann::json s = state_json(r.curve.samples.back().state);
      s["t"] = r.curve.samples.back().time;
      curve.push_back(s);
    }
    j["curve"] = curve;
    doc["records"].push_back(j);
  }
  return doc.dump(2);
}

std::vector<GeodesicRecord> records_from_json(const std::string& text, MetricSpec* metric) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, e.what());
  }
  try {
    if (metric && doc.contains("metric")) {
      const std::string kind = doc["metric"].at("kind").get<std::string>();
      *metric = kind == "round" ? MetricSpec::round() : MetricSpec::katok(doc["metric"].at("epsilon").get<double>());
    }
    std::vector<GeodesicRecord> out;
    for (const auto& j : doc.at("records")) {
      GeodesicRecord r;
      r.energy = j.at("energy").get<double>();
      r.length = j.at("length").get<double>();
      r.multiplicity = j.at("multiplicity").get<int>();
      r.prime_length = j.at("prime_length").get<double>();
      const auto& p = j.at("poincare");
      Mat2 m;
      m << p.at(0).at(0).get<double>(), p.at(0).at(1).get<double>(), p.at(1).at(0).get<double>(),
          p.at(1).at(1).get<double>();
      r.poincare.m = m;
      r.measured_index = j.value("measured_index", -1);
      r.measured_nullspace_dim = j.value("measured_nullspace_dim", -1);
      r.closure_residual = j.value("closure_residual", 0.0);
      if (j.contains("curve")) {
        for (const auto& s : j["curve"]) {
          const TangentVector st = state_from_json(s);
          r.curve.samples.push_back({s.at("t").get<double>(), st, embed(st.base), embed_velocity(st)});
        }
      }
      out.push_back(std::move(r));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, e.what());
  }
}

}  // namespace finsler
