#pragma once

// Normal-form classes of 2x2 symplectic matrices.

#include <cstdint>
#include <optional>
#include <string>

#include <boost/rational.hpp>

#include "finsler/flow.hpp"

namespace finsler {

using Rational = boost::rational<std::int64_t>;

enum class CGClass { CG1 = 1, CG2, CG3, CG4, CG5, CG6, CG7, CG8, CG9 };

/// "CG-1" ... "CG-9".
std::string class_name(CGClass tag);
/// Accepts "CG-4", "CG4", "cg4" or "4".
CGClass parse_class_name(const std::string& text);

struct PoincareClass {
  CGClass tag = CGClass::CG2;
  /// Shear size (CG-1/3/4/6) or the eigenvalue of modulus > 1 (CG-9).
  double b = 0.0;
  /// Rotation number theta / 2pi for CG-7/8, in (0, 1).
  double sigma = 0.0;
  /// Exact rotation number for CG-7.
  Rational sigma_exact{0};

  static PoincareClass cg1(double b);
  static PoincareClass cg2();
  static PoincareClass cg3(double b);
  static PoincareClass cg4(double b);
  static PoincareClass cg5();
  static PoincareClass cg6(double b);
  /// k/n reduced, n >= 3.
  static PoincareClass cg7(std::int64_t k, std::int64_t n);
  static PoincareClass cg8(double sigma);
  static PoincareClass cg9(double b);

  std::string name() const { return class_name(tag); }
  /// Human readable form, e.g. "CG-7(sigma=1/3)".
  std::string describe() const;
};

inline constexpr double kDefaultEigTol = 1e-7;
inline constexpr int kDefaultMaxDenominator = 64;
inline constexpr double kDefaultRationalTol = 1e-6;

struct ClassifyOptions {
  double eig_tol = kDefaultEigTol;
  /// Rational rotation detection is attempted only when set.
  std::optional<int> max_denominator;
  double rational_tol = kDefaultRationalTol;
};

/// Throws NotSymplectic if |det - 1| >= 1e-6 and AmbiguousBoundary when the
/// trace sits on +-2 but the matrix is neither +-I nor a clear shear.
PoincareClass classify(const SymplecticMatrix2& P, const ClassifyOptions& options = {});
PoincareClass classify(const Mat2& P, const ClassifyOptions& options = {});

/// Representative matrix of the class.
SymplecticMatrix2 normal_form(const PoincareClass& cls);

/// Rotation angle in (0, 2pi) of an elliptic matrix, orientation taken from
/// the sign of the symplectic form on (v, Pv).
double rotation_angle(const Mat2& P);

/// Continued-fraction convergent k/n of theta/2pi with n <= max_denominator
/// and |theta/2pi - k/n| < tol, if any.
std::optional<Rational> detect_rational_angle(double theta, int max_denominator, double tol);

/// Parses "a,b,c,d" (row major).
Mat2 parse_matrix(const std::string& text);

}  // namespace finsler
