#include "finsler/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace finsler {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat2 rotation(double theta) {
  Mat2 r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

// Sign of omega(Nv, v) for a rank-one nilpotent N, using whichever basis
// vector N moves more. This sign is a symplectic conjugacy invariant.
double shear_sign(const Mat2& N) {
  const Vec2 v = N.col(0).norm() >= N.col(1).norm() ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
  const Vec2 nv = N * v;
  return nv.x() * v.y() - nv.y() * v.x();
}

}  // namespace

std::string class_name(CGClass tag) { return "CG-" + std::to_string(static_cast<int>(tag)); }

CGClass parse_class_name(const std::string& text) {
  std::string digits;
  for (char c : text) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
  }
  std::string prefix;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) prefix += static_cast<char>(std::tolower(c));
  }
  if (digits.size() != 1 || (!prefix.empty() && prefix != "cg") || digits[0] < '1') {
    throw Error(ErrorCode::InvalidInput, "unknown class '" + text + "'");
  }
  return static_cast<CGClass>(digits[0] - '0');
}

PoincareClass PoincareClass::cg1(double b) { return {CGClass::CG1, b, 0.0, Rational(0)}; }
PoincareClass PoincareClass::cg2() { return {CGClass::CG2, 0.0, 0.0, Rational(0)}; }
PoincareClass PoincareClass::cg3(double b) { return {CGClass::CG3, b, 0.0, Rational(0)}; }
PoincareClass PoincareClass::cg4(double b) { return {CGClass::CG4, b, 0.0, Rational(0)}; }
PoincareClass PoincareClass::cg5() { return {CGClass::CG5, 0.0, 0.0, Rational(0)}; }
PoincareClass PoincareClass::cg6(double b) { return {CGClass::CG6, b, 0.0, Rational(0)}; }

PoincareClass PoincareClass::cg7(std::int64_t k, std::int64_t n) {
  const Rational s(k, n);
  if (s <= 0 || s >= 1 || s.denominator() < 3) {
    throw Error(ErrorCode::InvalidInput, "CG-7 needs a reduced rotation number k/n in (0,1) with n >= 3");
  }
  return {CGClass::CG7, 0.0, boost::rational_cast<double>(s), s};
}

PoincareClass PoincareClass::cg8(double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0) || sigma == 0.5) {
    throw Error(ErrorCode::InvalidInput, "CG-8 needs a rotation number in (0,1) other than 1/2");
  }
  return {CGClass::CG8, 0.0, sigma, Rational(0)};
}

PoincareClass PoincareClass::cg9(double b) {
  if (!(std::abs(b) > 1.0)) throw Error(ErrorCode::InvalidInput, "CG-9 needs |b| > 1");
  return {CGClass::CG9, b, 0.0, Rational(0)};
}

std::string PoincareClass::describe() const {
  std::ostringstream os;
  os.precision(10);
  os << name();
  switch (tag) {
    case CGClass::CG1:
    case CGClass::CG3:
    case CGClass::CG4:
    case CGClass::CG6:
    case CGClass::CG9:
      os << "(b=" << b << ")";
      break;
    case CGClass::CG7:
      os << "(sigma=" << sigma_exact.numerator() << "/" << sigma_exact.denominator() << ")";
      break;
    case CGClass::CG8:
      os << "(sigma=" << sigma << ")";
      break;
    default:
      break;
  }
  return os.str();
}

double rotation_angle(const Mat2& P) {
  const double half = std::clamp(0.5 * P.trace(), -1.0, 1.0);
  // omega(e1, P e1) = P(1,0); nonzero for elliptic matrices.
  const double s = P(1, 0) >= 0.0 ? 1.0 : -1.0;
  double theta = std::atan2(s * std::sqrt(1.0 - half * half), half);
  if (theta <= 0.0) theta += kTwoPi;
  return theta;
}

std::optional<Rational> detect_rational_angle(double theta, int max_denominator, double tol) {
  const double x = theta / kTwoPi;
  // Convergents h/k of the continued fraction of x.
  std::int64_t h_prev = 1, h = static_cast<std::int64_t>(std::floor(x));
  std::int64_t k_prev = 0, k = 1;
  double rest = x - std::floor(x);
  for (int iter = 0; iter < 64; ++iter) {
    if (k > max_denominator) break;
    if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) < tol) return Rational(h, k);
    if (rest < 1e-15) break;
    const double inv = 1.0 / rest;
    const auto a = static_cast<std::int64_t>(std::floor(inv));
    rest = inv - std::floor(inv);
    const std::int64_t h_next = a * h + h_prev, k_next = a * k + k_prev;
    h_prev = h;
    k_prev = k;
    h = h_next;
    k = k_next;
  }
  return std::nullopt;
}

PoincareClass classify(const Mat2& P, const ClassifyOptions& options) {
  if (!(std::abs(P.determinant() - 1.0) < 1e-6)) {
    std::ostringstream os;
    os << "determinant " << P.determinant() << " is not 1";
    throw Error(ErrorCode::NotSymplectic, os.str());
  }
  const double tr = P.trace();
  const double tol = options.eig_tol;
  for (const double sign : {1.0, -1.0}) {
    if (std::abs(tr - 2.0 * sign) >= tol) continue;
    const Mat2 N = P - sign * Mat2::Identity();
    const double size = N.cwiseAbs().maxCoeff();
    if (size <= 10.0 * tol) return sign > 0 ? PoincareClass::cg2() : PoincareClass::cg5();
    if (size >= std::sqrt(tol)) {
      const double s = shear_sign(N);
      const double b = N.norm();
      if (sign > 0) return s > 0 ? PoincareClass::cg1(b) : PoincareClass::cg3(b);
      return s < 0 ? PoincareClass::cg4(b) : PoincareClass::cg6(b);
    }
    std::ostringstream os;
    os << "trace " << tr << " on the parabolic boundary with |P -+ I| = " << size;
    throw Error(ErrorCode::AmbiguousBoundary, os.str());
  }
  if (std::abs(tr) < 2.0) {
    const double theta = rotation_angle(P);
    if (options.max_denominator) {
      if (auto r = detect_rational_angle(theta, *options.max_denominator, options.rational_tol);
          r && r->denominator() >= 3) {
        return PoincareClass::cg7(r->numerator(), r->denominator());
      }
    }
    return PoincareClass::cg8(theta / kTwoPi);
  }
  const double disc = std::sqrt(0.25 * tr * tr - 1.0);
  const double b = tr > 0 ? 0.5 * tr + disc : 0.5 * tr - disc;
  return PoincareClass::cg9(b);
}

PoincareClass classify(const SymplecticMatrix2& P, const ClassifyOptions& options) {
  return classify(P.m, options);
}

SymplecticMatrix2 normal_form(const PoincareClass& cls) {
  Mat2 m;
  switch (cls.tag) {
    case CGClass::CG1: m << 1, cls.b, 0, 1; break;
    case CGClass::CG2: m = Mat2::Identity(); break;
    case CGClass::CG3: m << 1, -cls.b, 0, 1; break;
    case CGClass::CG4: m << -1, -cls.b, 0, -1; break;
    case CGClass::CG5: m = -Mat2::Identity(); break;
    case CGClass::CG6: m << -1, cls.b, 0, -1; break;
    case CGClass::CG7:
    case CGClass::CG8: m = rotation(kTwoPi * cls.sigma); break;
    case CGClass::CG9: m << cls.b, 0, 0, 1.0 / cls.b; break;
  }
  return SymplecticMatrix2{m};
}

Mat2 parse_matrix(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, "bad matrix entry '" + item + "'");
    }
  }
  if (values.size() != 4) throw Error(ErrorCode::InvalidInput, "matrix needs four comma-separated numbers");
  Mat2 m;
  m << values[0], values[1], values[2], values[3];
  return m;
}

}  // namespace finsler
