#include "finsler/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace finsler {

namespace {

using Eigen::Matrix4d;
using Eigen::VectorXd;

constexpr double kSwitchRadius = 1.5;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Fixed interface: rhs(t, y) -> dy; post(t, y) may rewrite y after each
// accepted step (chart switching) and records output.
template <class Rhs, class Post>
void integrate_adaptive(Rhs&& rhs, VectorXd& y, double duration, double tol, double max_step, Post&& post) {
  if (duration <= 0.0) return;
  double t = 0.0;
  double h = std::min(max_step, 0.01 * duration);
  const double h_min = 1e-14 * std::max(1.0, duration);
  VectorXd k1 = rhs(t, y);
  while (duration - t > 1e-15 * duration) {
    h = std::min({h, max_step, duration - t});
    const VectorXd k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const VectorXd k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const VectorXd k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const VectorXd k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const VectorXd k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const VectorXd y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const VectorXd k7 = rhs(t + h, y5);
    const VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = tol + tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err_norm = std::max(err_norm, std::abs(err[i]) / scale);
    }
    if (!std::isfinite(err_norm)) err_norm = 1e10;
    if (err_norm <= 1.0) {
      t += h;
      y = y5;
      const bool rewritten = post(t, y);
      k1 = rewritten ? rhs(t, y) : k7;
    }
    const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < h_min) throw Error(ErrorCode::StepFailure, "step size underflow");
  }
}

Eigen::Vector4d pack(const TangentVector& t) { return {t.base.u.x(), t.base.u.y(), t.v.x(), t.v.y()}; }

TangentVector unpack(Chart chart, const Eigen::Ref<const VectorXd>& y) {
  TangentVector t;
  t.base = {chart, Vec2(y[0], y[1])};
  t.v = Vec2(y[2], y[3]);
  return t;
}

// Derivative of (u, v) -> (u / |u|^2, D(u) v).
Matrix4d tangent_transition_jacobian(const Vec2& u, const Vec2& v) {
  const double q = u.squaredNorm();
  const Mat2 D = transition_jacobian(u);
  const Vec2 n = q * v - 2.0 * u * u.dot(v);
  Mat2 dDv;
  for (int k = 0; k < 2; ++k) {
    const Vec2 ek = k == 0 ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
    const Vec2 dn = 2.0 * u[k] * v - 2.0 * ek * u.dot(v) - 2.0 * u * v[k];
    dDv.col(k) = dn / (q * q) - 4.0 * u[k] * n / (q * q * q);
  }
  Matrix4d J = Matrix4d::Zero();
  J.block<2, 2>(0, 0) = D;
  J.block<2, 2>(2, 0) = dDv;
  J.block<2, 2>(2, 2) = D;
  return J;
}

Matrix4d flow_jacobian(const MetricSpec& metric, Chart chart, const Eigen::Vector4d& x) {
  Matrix4d A = Matrix4d::Zero();
  A.block<2, 2>(0, 2) = Mat2::Identity();
  for (int k = 0; k < 4; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
    Eigen::Vector4d xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const Vec2 ap = spray(metric, unpack(chart, xp));
    const Vec2 am = spray(metric, unpack(chart, xm));
    A.block<2, 1>(2, k) = (ap - am) / (2.0 * h);
  }
  return A;
}

TrajectorySample make_sample(double t, const TangentVector& s) {
  return {t, s, embed(s.base), embed_velocity(s)};
}

struct Propagation {
  TangentVector end;
  Matrix4d stm = Matrix4d::Identity();
};

Propagation propagate(const MetricSpec& metric, const TangentVector& init, double duration, double tol,
                      double max_step, bool with_stm, Trajectory* out) {
  if (init.v.norm() == 0.0) throw Error(ErrorCode::ZeroVector, "geodesic with zero initial velocity");
  Chart chart = init.base.chart;
  const int dim = with_stm ? 20 : 4;
  VectorXd y(dim);
  y.head<4>() = pack(init);
  if (with_stm) Eigen::Map<Matrix4d>(y.data() + 4) = Matrix4d::Identity();

  auto rhs = [&](double, const VectorXd& s) {
    VectorXd d(dim);
    const TangentVector tv = unpack(chart, s.head<4>());
    d.segment<2>(0) = tv.v;
    d.segment<2>(2) = spray(metric, tv);
    if (with_stm) {
      const Matrix4d A = flow_jacobian(metric, chart, s.head<4>());
      Eigen::Map<Matrix4d>(d.data() + 4) = A * Eigen::Map<const Matrix4d>(s.data() + 4);
    }
    return d;
  };
  auto post = [&](double t, VectorXd& s) {
    bool rewritten = false;
    const Vec2 u(s[0], s[1]);
    if (u.norm() > kSwitchRadius) {
      const Vec2 v(s[2], s[3]);
      if (with_stm) {
        Eigen::Map<Matrix4d> phi(s.data() + 4);
        phi = tangent_transition_jacobian(u, v) * Matrix4d(phi);
      }
      const TangentVector switched = to_chart(unpack(chart, s.head<4>()), other(chart));
      chart = other(chart);
      s.head<4>() = pack(switched);
      rewritten = true;
    }
    if (out) out->samples.push_back(make_sample(t, unpack(chart, s.head<4>())));
    return rewritten;
  };

  if (out) {
    out->samples.clear();
    out->tolerance = tol;
    out->samples.push_back(make_sample(0.0, init));
  }
  integrate_adaptive(rhs, y, duration, tol, max_step, post);

  Propagation result;
  result.end = unpack(chart, y.head<4>());
  if (with_stm) result.stm = Eigen::Map<const Matrix4d>(y.data() + 4);
  if (chart != init.base.chart && result.end.base.u.norm() > 0.0 &&
      1.0 / result.end.base.u.norm() <= kChartRadius) {
    if (with_stm) result.stm = tangent_transition_jacobian(result.end.base.u, result.end.v) * result.stm;
    result.end = to_chart(result.end, init.base.chart);
  }
  return result;
}

Eigen::Vector4d finsler_gradient(const MetricSpec& metric, const TangentVector& x) {
  Eigen::Vector4d g;
  const Eigen::Vector4d x0 = pack(x);
  for (int k = 0; k < 4; ++k) {
    const double h = 1e-7 * std::max(1.0, std::abs(x0[k]));
    Eigen::Vector4d xp = x0, xm = x0;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (eval_F(metric, unpack(x.base.chart, xp)) - eval_F(metric, unpack(x.base.chart, xm))) / (2.0 * h);
  }
  return g;
}

}  // namespace

Vec3 Trajectory::position_at(double t) const {
  if (samples.empty()) throw Error(ErrorCode::InvalidInput, "empty trajectory");
  const double t0 = samples.front().time;
  const double T = duration();
  if (T > 0.0) {
    t = std::fmod(t - t0, T);
    if (t < 0.0) t += T;
    t += t0;
  }
  auto it = std::upper_bound(samples.begin(), samples.end(), t,
                             [](double value, const TrajectorySample& s) { return value < s.time; });
  if (it == samples.begin()) return samples.front().position;
  if (it == samples.end()) return samples.back().position;
  const TrajectorySample& a = *(it - 1);
  const TrajectorySample& b = *it;
  const double h = b.time - a.time;
  const double s = (t - a.time) / h;
  const double h00 = 2 * s * s * s - 3 * s * s + 1;
  const double h10 = s * s * s - 2 * s * s + s;
  const double h01 = -2 * s * s * s + 3 * s * s;
  const double h11 = s * s * s - s * s;
  const Vec3 p = h00 * a.position + h10 * h * a.velocity + h01 * b.position + h11 * h * b.velocity;
  return p.normalized();
}

std::string Trajectory::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "time,chart,u1,u2,v1,v2\n";
  for (const auto& s : samples) {
    os << s.time << ',' << (s.state.base.chart == Chart::north ? "north" : "south") << ','
       << s.state.base.u.x() << ',' << s.state.base.u.y() << ',' << s.state.v.x() << ',' << s.state.v.y()
       << '\n';
  }
  return os.str();
}

SymplecticMatrix2 SymplecticMatrix2::from(const Mat2& m, double tol) {
  if (!(std::abs(m.determinant() - 1.0) <= tol)) {
    std::ostringstream os;
    os << "determinant " << m.determinant() << " differs from 1";
    throw Error(ErrorCode::NotSymplectic, os.str());
  }
  return SymplecticMatrix2{m};
}

Trajectory integrate_geodesic(const MetricSpec& metric, const TangentVector& init, double duration,
                              double tol, double max_step) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tolerance must be positive");
  Trajectory traj;
  propagate(metric, init, duration, tol, max_step, false, &traj);
  return traj;
}

TangentVector flow_endpoint(const MetricSpec& metric, const TangentVector& init, double duration, double tol) {
  return propagate(metric, init, duration, tol, 0.25, false, nullptr).end;
}

FlowWithVariation flow_with_variation(const MetricSpec& metric, const TangentVector& init, double duration,
                                      double tol) {
  const Propagation p = propagate(metric, init, duration, tol, 0.25, true, nullptr);
  return {p.end, p.stm};
}

Eigen::MatrixXd integrate_linear_system(const std::function<Eigen::MatrixXd(double)>& A, int dim,
                                        double duration, double tol) {
  VectorXd y = VectorXd::Zero(dim * dim);
  Eigen::Map<Eigen::MatrixXd>(y.data(), dim, dim) = Eigen::MatrixXd::Identity(dim, dim);
  auto rhs = [&](double t, const VectorXd& s) {
    VectorXd d(dim * dim);
    Eigen::Map<Eigen::MatrixXd>(d.data(), dim, dim) =
        A(t) * Eigen::Map<const Eigen::MatrixXd>(s.data(), dim, dim);
    return d;
  };
  integrate_adaptive(rhs, y, duration, tol, duration, [](double, VectorXd&) { return false; });
  return Eigen::Map<Eigen::MatrixXd>(y.data(), dim, dim);
}

Mat2 transverse_block(const MetricSpec& metric, const TangentVector& x0, const Matrix4d& stm) {
  const Vec2 v = x0.v;
  const Vec2 normal(-v.y(), v.x());
  const Eigen::Vector4d dF = finsler_gradient(metric, x0);

  Eigen::Vector4d X, S, n1, n2;
  X << v, spray(metric, x0);
  S << 0.0, 0.0, v;
  n1 << normal, 0.0, 0.0;
  n2 << 0.0, 0.0, normal;
  const double dFS = dF.dot(S);
  n1 -= dF.dot(n1) / dFS * S;
  n2 -= dF.dot(n2) / dFS * S;

  Matrix4d B;
  B << X, S, n1, n2;
  const Matrix4d C = B.partialPivLu().solve(stm * B);
  return C.block<2, 2>(2, 2);
}

Mat2 to_momentum_first(const Mat2& k) {
  Mat2 p;
  p << k(1, 1), k(1, 0), k(0, 1), k(0, 0);
  return p;
}

double closure_residual(const Trajectory& curve) {
  const auto& a = curve.samples.front();
  const auto& b = curve.samples.back();
  return (b.position - a.position).norm() + (b.velocity - a.velocity).norm();
}

SymplecticMatrix2 linearized_poincare(const MetricSpec& metric, const GeodesicRecord& geo, double tol,
                                      double integration_tol) {
  if (geo.curve.samples.size() < 2) throw Error(ErrorCode::NotClosed, "record has no curve");
  const double residual = closure_residual(geo.curve);
  if (!(residual <= tol)) {
    std::ostringstream os;
    os << "closure residual " << residual << " exceeds " << tol;
    throw Error(ErrorCode::NotClosed, os.str());
  }
  const TangentVector& x0 = geo.curve.initial();
  const FlowWithVariation fv = flow_with_variation(metric, x0, geo.curve.duration(), integration_tol);
  return SymplecticMatrix2::from(to_momentum_first(transverse_block(metric, x0, fv.stm)));
}

SymplecticMatrix2 linearized_poincare_fd(const MetricSpec& metric, const GeodesicRecord& geo,
                                         double integration_tol, double step) {
  const TangentVector& x0 = geo.curve.initial();
  const double T = geo.curve.duration();
  const Eigen::Vector4d base = pack(x0);
  Matrix4d M;
  for (int k = 0; k < 4; ++k) {
    Eigen::Vector4d xp = base, xm = base;
    xp[k] += step;
    xm[k] -= step;
    const TangentVector ep = flow_endpoint(metric, unpack(x0.base.chart, xp), T, integration_tol);
    const TangentVector em = flow_endpoint(metric, unpack(x0.base.chart, xm), T, integration_tol);
    if (ep.base.chart != x0.base.chart || em.base.chart != x0.base.chart) {
      throw Error(ErrorCode::ChartDomain, "perturbed orbit ended outside the starting chart");
    }
    M.col(k) = (pack(ep) - pack(em)) / (2.0 * step);
  }
  return SymplecticMatrix2::from(to_momentum_first(transverse_block(metric, x0, M)), 1e-6);
}

}  // namespace finsler
