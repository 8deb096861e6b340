#pragma once

// Geodesic flow and its linearization.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "finsler/metric.hpp"

namespace finsler {

struct TrajectorySample {
  double time = 0.0;
  TangentVector state;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// Samples at the accepted integrator steps. Positions between samples are
/// recovered by cubic Hermite interpolation in R^3.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  double tolerance = 0.0;

  double duration() const { return samples.empty() ? 0.0 : samples.back().time - samples.front().time; }
  const TangentVector& initial() const { return samples.front().state; }
  const TangentVector& final() const { return samples.back().state; }

  Vec3 position_at(double t) const;

  /// Columns: time, chart, u1, u2, v1, v2.
  std::string to_csv() const;
};

/// Real 2x2 matrix with unit determinant.
struct SymplecticMatrix2 {
  Mat2 m = Mat2::Identity();

  /// Throws NotSymplectic if |det - 1| > tol.
  static SymplecticMatrix2 from(const Mat2& m, double tol = 1e-8);

  double trace() const { return m.trace(); }
  double det() const { return m.determinant(); }
};

/// A closed geodesic found by the loop-space search. `curve` covers the full
/// (possibly iterated) loop at unit F-speed, so its duration equals `length`.
struct GeodesicRecord {
  Trajectory curve;
  double energy = 0.0;
  double length = 0.0;
  int multiplicity = 1;
  double prime_length = 0.0;
  SymplecticMatrix2 poincare;
  int measured_index = -1;
  int measured_nullspace_dim = -1;
  double closure_residual = 0.0;
};

/// Adaptive Dormand-Prince 5(4) integration of the spray ODE. The chart is
/// switched whenever |u| exceeds the switching radius.
Trajectory integrate_geodesic(const MetricSpec& metric, const TangentVector& init, double duration,
                              double tol, double max_step = 0.05);

/// End state of the flow, expressed in the chart of `init` when possible.
TangentVector flow_endpoint(const MetricSpec& metric, const TangentVector& init, double duration,
                            double tol);

/// Flow endpoint together with the 4x4 derivative of the time-`duration` map
/// in (u, v) coordinates of init's chart.
struct FlowWithVariation {
  TangentVector end;
  Eigen::Matrix4d stm;
};
FlowWithVariation flow_with_variation(const MetricSpec& metric, const TangentVector& init,
                                      double duration, double tol);

/// Monodromy X(T) of X' = A(t) X, X(0) = I, by the same adaptive integrator.
Eigen::MatrixXd integrate_linear_system(const std::function<Eigen::MatrixXd(double)>& A, int dim,
                                        double duration, double tol);

/// Reduces a 4x4 return-map derivative at a closed orbit to the 2x2 map of the
/// transverse (displacement, velocity) pair, in displacement-first order.
Mat2 transverse_block(const MetricSpec& metric, const TangentVector& x0, const Eigen::Matrix4d& stm);

/// Converts displacement-first ordering to the momentum-first ordering used by
/// the normal-form classification (conjugation by the coordinate swap).
Mat2 to_momentum_first(const Mat2& displacement_first);

/// Linearized Poincare map of a closed geodesic in momentum-first ordering.
/// Throws NotClosed if the curve does not close within `tol`.
SymplecticMatrix2 linearized_poincare(const MetricSpec& metric, const GeodesicRecord& geo, double tol,
                                      double integration_tol = 1e-11);

/// Same map from central differences of the nonlinear flow (independent check).
SymplecticMatrix2 linearized_poincare_fd(const MetricSpec& metric, const GeodesicRecord& geo,
                                         double integration_tol = 1e-12, double step = 1e-6);

/// |x(T) - x(0)| + |y(T) - y(0)| in R^3 for a closed curve.
double closure_residual(const Trajectory& curve);

}  // namespace finsler
