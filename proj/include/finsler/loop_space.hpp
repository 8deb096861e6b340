#pragma once

// Broken-geodesic approximation of the free loop space, closed-geodesic
// search and the Hessian index oracle.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "finsler/flow.hpp"
#include "finsler/metric.hpp"

namespace finsler {

/// Longest F-segment accepted between consecutive vertices.
inline constexpr double kMaxSegmentLength = 1.5707963267948966;

/// Closed polygon whose k vertices are joined by minimal F-geodesics; vertex
/// k-1 connects back to vertex 0.
struct PolygonLoop {
  std::vector<SurfacePoint> vertices;

  int k() const { return static_cast<int>(vertices.size()); }
  std::vector<Vec3> embedded() const;
  static PolygonLoop from_embedded(const std::vector<Vec3>& points);
  /// The m-fold traversal, m*k vertices.
  PolygonLoop iterate(int m) const;
};

/// F-length of the minimal geodesic from p to q (unit vectors). Exact for the
/// rotational winds supported by MetricSpec.
double segment_length(const MetricSpec& metric, const Vec3& p, const Vec3& q);

/// Segment length with its gradients in R^3 (tangent to the sphere at p and q).
struct SegmentGradient {
  double length;
  Vec3 d_p;
  Vec3 d_q;
};
SegmentGradient segment_gradient(const MetricSpec& metric, const Vec3& p, const Vec3& q);

/// Unit-speed initial velocity at p of the minimal segment from p to q.
Vec3 segment_initial_velocity(const MetricSpec& metric, const Vec3& p, const Vec3& q);

/// E = (k/2) * sum of squared segment lengths; S^1 = R/Z parametrization.
/// Throws SegmentTooLong if a segment exceeds kMaxSegmentLength.
double energy(const MetricSpec& metric, const PolygonLoop& loop);
double energy(const MetricSpec& metric, const std::vector<Vec3>& vertices);

/// Gradient in the 2k local vertex coordinates (orthonormal tangent frame at
/// each vertex, see tangent_frame).
Eigen::VectorXd energy_gradient(const MetricSpec& metric, const std::vector<Vec3>& vertices);

/// Symmetrized Hessian in the same coordinates, by central differences of the
/// analytic gradient.
Eigen::MatrixXd energy_hessian(const MetricSpec& metric, const std::vector<Vec3>& vertices,
                               double step = 1e-5);

/// Deterministic orthonormal basis of the tangent plane at x.
std::pair<Vec3, Vec3> tangent_frame(const Vec3& x);

/// Great-circle seeds: the circle with pole obtained by tilting the z axis by
/// `tilts[i]` towards azimuth `azimuths[j]`, traversed in both directions.
struct SeedSpec {
  std::vector<double> tilts = {0.0, 0.05, 0.2};
  std::vector<double> azimuths = {0.0, 1.3};
  bool both_orientations = true;
  int max_newton_iterations = 60;
};

struct SeedFailure {
  std::string seed;
  std::string reason;
};

/// Critical points of E on the k-vertex polygon space below energy_cap,
/// deduplicated modulo parameter shift, refined by shooting and returned with
/// their iterates (m^2 E <= cap), sorted by energy.
std::vector<GeodesicRecord> find_closed_geodesics(const MetricSpec& metric, int k, double energy_cap,
                                                  const SeedSpec& seeds = {},
                                                  std::vector<SeedFailure>* failures = nullptr);

/// Builds a full record (curve, energy, Poincare map, multiplicity, measured
/// index) for the closed geodesic with unit-speed initial state `init` and
/// prime length `prime_length`, traversed `m` times.
GeodesicRecord make_record(const MetricSpec& metric, const TangentVector& init, double prime_length, int m,
                           bool measure_index = true);

struct IndexPair {
  int index;
  int nullspace_dim;
};

/// Morse index and null space dimension of the polygon-space Hessian at the
/// k-vertex sampling of geo. null_threshold is relative to the largest
/// eigenvalue. Throws ResolutionTooCoarse if the counts at 2k differ.
IndexPair hessian_index(const MetricSpec& metric, const GeodesicRecord& geo, int k,
                        double null_threshold = 1e-5);

/// Counts only, without the resolution check.
IndexPair hessian_counts(const MetricSpec& metric, const std::vector<Vec3>& vertices,
                         double null_threshold = 1e-5);

/// Default vertex count used for a curve of the given F-length.
int default_vertex_count(double length);

/// Largest m such that the curve is invariant under the shift by 1/m of its
/// period within tol (positions in R^3).
int multiplicity(const GeodesicRecord& geo, double tol);

/// Polishes a polygon towards a critical point by Newton's method on E.
/// Returns the final gradient norm.
double newton_polish(const MetricSpec& metric, std::vector<Vec3>& vertices, int max_iterations,
                     double gradient_tol = 1e-10);

std::string records_to_json(const MetricSpec& metric, const std::vector<GeodesicRecord>& records,
                            int max_curve_samples = 200);
/// Reads records written by records_to_json. Curves are rebuilt from the
/// stored samples only.
std::vector<GeodesicRecord> records_from_json(const std::string& text, MetricSpec* metric = nullptr);

}  // namespace finsler
