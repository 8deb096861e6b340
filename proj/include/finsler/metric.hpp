#pragma once

// Finsler metrics on S^2 of Randers type, obtained by Zermelo navigation on the
// round sphere under a rotational wind W = eps * (z x p). eps = 0 is the round
// metric; 0 < eps < 1 is the Katok family.
//
// Points are handled in two stereographic charts. The north chart sends the
// north pole to the origin, u = (x, y) / (1 + z); the south chart is
// u = (x, y) / (1 - z). On the overlap the transition is the inversion
// u -> u / |u|^2 in both directions.

#include <array>
#include <string>

#include <Eigen/Dense>

#include "finsler/error.hpp"

namespace finsler {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

enum class Chart { north, south };

/// Coordinates beyond this radius are outside the chart's validity disk.
inline constexpr double kChartRadius = 2.0;

struct SurfacePoint {
  Chart chart = Chart::north;
  Vec2 u = Vec2::Zero();
};

struct TangentVector {
  SurfacePoint base;
  Vec2 v = Vec2::Zero();
};

Chart other(Chart chart);

/// Re-expresses a point in another chart. Throws ChartDomain if the point is
/// not inside the target chart's validity disk.
SurfacePoint to_chart(const SurfacePoint& p, Chart target);
TangentVector to_chart(const TangentVector& t, Chart target);

/// Jacobian of the chart transition evaluated at u (same formula both ways).
Mat2 transition_jacobian(const Vec2& u);

Vec3 embed(const SurfacePoint& p);
Vec3 embed_velocity(const TangentVector& t);
/// 3x2 derivative of the inverse stereographic map.
Eigen::Matrix<double, 3, 2> embedding_jacobian(const SurfacePoint& p);

/// Chart coordinates of a unit vector, choosing the chart in which |u| <= 1.
SurfacePoint from_embedding(const Vec3& x);
SurfacePoint from_embedding(const Vec3& x, Chart chart);
/// Tangent vector y at x (both in R^3, y orthogonal to x) in the given chart.
TangentVector tangent_from_embedding(const Vec3& x, const Vec3& y, Chart chart);
TangentVector tangent_from_embedding(const Vec3& x, const Vec3& y);

enum class MetricKind { round, katok };

struct MetricSpec {
  MetricKind kind = MetricKind::round;
  double epsilon = 0.0;

  static MetricSpec round() { return {}; }
  static MetricSpec katok(double eps);

  /// Wind strength actually used in formulas (0 for the round metric).
  double wind() const { return kind == MetricKind::katok ? epsilon : 0.0; }

  /// Throws InvalidMetric unless 0 <= eps < 1.
  void validate() const;

  /// Key-value text, one `key = value` per line; keys `kind` and `epsilon`.
  std::string to_config() const;
  static MetricSpec from_config(const std::string& text);
};

/// Randers data F(u, v) = sqrt(v^T a v) + b . v in chart coordinates, with the
/// coordinate derivatives of a and b.
struct RandersData {
  Mat2 a;
  Vec2 b;
  std::array<Mat2, 2> da;
  std::array<Vec2, 2> db;
};

RandersData randers_data(const MetricSpec& metric, const SurfacePoint& p);

double eval_F(const MetricSpec& metric, const TangentVector& t);
/// Same norm evaluated on R^3 data (x on the unit sphere, y tangent at x).
double eval_F(const MetricSpec& metric, const Vec3& x, const Vec3& y);

/// Acceleration of the constant-speed geodesic through t, in t's chart.
Vec2 spray(const MetricSpec& metric, const TangentVector& t);

/// max |F(x,-y) - F(x,y)| / F(x,y) over a deterministic sample of unit
/// tangent vectors.
double reversibility_defect(const MetricSpec& metric, int sample_count);

/// Checks Randers positivity h(W, W) < 1 and F > 0 on a sample grid.
bool validate_on_grid(const MetricSpec& metric, int samples);

}  // namespace finsler
