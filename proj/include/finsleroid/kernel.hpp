#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "finsleroid/error.hpp"
#include "finsleroid/fields.hpp"
#include "finsleroid/linalg.hpp"

namespace finsleroid {

/// Charge combinations of the positive-definite space.
struct ChargeParams {
  double g = 0.0;
  double h = 1.0;  // sqrt(1 - g^2/4)
  double G = 0.0;  // g / h
  double g_plus = 1.0;
  double g_minus = -1.0;
  double discriminant = -4.0;  // of B as a quadratic form in (b, q)
};

inline ChargeParams charge_params(double g) {
  if (!(std::abs(g) < 2.0)) {
    throw Error(Errc::ConstraintViolation, "charge g = " + std::to_string(g) + " violates -2 < g < 2");
  }
  ChargeParams c;
  c.g = g;
  c.h = std::sqrt(1.0 - 0.25 * g * g);
  c.G = g / c.h;
  c.g_plus = 0.5 * g + c.h;
  c.g_minus = 0.5 * g - c.h;
  c.discriminant = -4.0 * c.h * c.h;
  return c;
}

/// Angle function for b >= 0.
inline double angle_branch_nonneg(double b, double q, double g) {
  const ChargeParams c = charge_params(g);
  const double L = q + 0.5 * g * b;
  return -std::atan(0.5 * c.G) + std::atan(L / (c.h * b));
}

/// Angle function for b <= 0; differs from the b >= 0 branch by pi.
inline double angle_branch_nonpos(double b, double q, double g) {
  const ChargeParams c = charge_params(g);
  const double L = q + 0.5 * g * b;
  return std::numbers::pi - std::atan(0.5 * c.G) + std::atan(L / (c.h * b));
}

inline double angle_function(double b, double q, double g) {
  if (b > 0.0) return angle_branch_nonneg(b, q, g);
  if (b < 0.0) return angle_branch_nonpos(b, q, g);
  return 0.5 * std::numbers::pi - std::atan(0.5 * charge_params(g).G);
}

inline double quadratic_form_B(double b, double q, double g) { return b * b + g * q * b + q * q; }

/// K as a function of the two invariants (b, q) and the charge.
inline double metric_function(double b, double q, double g) {
  const ChargeParams c = charge_params(g);
  return std::sqrt(quadratic_form_B(b, q, g)) * std::exp(-0.5 * c.G * angle_function(b, q, g));
}

/// All pointwise scalars of the positive-definite metric at (x, y).
struct ScalarKernel {
  int dim = 0;
  double b = 0.0;
  double S2 = 0.0;
  double S = 0.0;
  double q = 0.0;
  double w = std::numeric_limits<double>::quiet_NaN();  // q / b, undefined on b = 0
  double B = 0.0;
  double L = 0.0;
  double f = 0.0;
  double J = 1.0;
  double K = 0.0;
  double g = 0.0;
  double h = 1.0;
  double G = 0.0;
  double g_plus = 1.0;
  double g_minus = -1.0;
  double discriminant = -4.0;
  double eta = 1.0;
  double nu = 0.0;
  double X = 0.0;
  double inv_X = 0.0;
  double c = 0.0;
  double c2 = 0.0;
};

inline ScalarKernel eval_kernel(const PointData& p, const Vec& y) {
  if (p.signature != Signature::PositiveDefinite) {
    throw Error(Errc::WrongSignature, "positive-definite kernel evaluated on a time-space field set");
  }
  if (y.size() != p.dim) throw Error(Errc::SchemaError, "tangent vector has wrong dimension");
  if (y.cwiseAbs().maxCoeff() == 0.0) throw Error(Errc::ZeroVector, "tangent vector y must be nonzero");

  const ChargeParams cp = charge_params(p.g);
  ScalarKernel k;
  k.dim = p.dim;
  k.c = p.c;
  k.c2 = p.c2;
  k.g = cp.g;
  k.h = cp.h;
  k.G = cp.G;
  k.g_plus = cp.g_plus;
  k.g_minus = cp.g_minus;
  k.discriminant = cp.discriminant;

  k.b = p.b_low.dot(y);
  k.S2 = y.dot(p.a * y);
  k.S = std::sqrt(k.S2);
  const double q2 = k.S2 - k.b * k.b;
  if (!(q2 > 0.0)) throw Error(Errc::ConstraintViolation, "S^2 - b^2 must be positive");
  k.q = std::sqrt(q2);
  if (k.b != 0.0) k.w = k.q / k.b;

  k.B = quadratic_form_B(k.b, k.q, k.g);
  k.L = k.q + 0.5 * k.g * k.b;
  k.f = angle_function(k.b, k.q, k.g);
  k.J = std::exp(-0.5 * k.G * k.f);
  k.K = std::sqrt(k.B) * k.J;
  k.eta = 1.0 / (1.0 + k.g * k.c * std::sqrt(1.0 - k.c2));
  k.nu = k.q + (1.0 - k.c2) * k.g * k.b;
  k.inv_X = k.dim + (1.0 - k.c2) * k.B / (k.q * k.nu);
  k.X = 1.0 / k.inv_X;
  return k;
}

inline ScalarKernel eval_kernel(const FieldSet& fields, const Vec& x, const Vec& y) {
  return eval_kernel(evaluate_point(fields, x), y);
}

inline double finsler_norm(const FieldSet& fields, const Vec& x, const Vec& y) { return eval_kernel(fields, x, y).K; }

/// K = b V(w) with w = q / b, plus the first two w-derivatives of V.
struct GeneratingV {
  double w = 0.0;
  double V = 0.0;
  double dV = 0.0;
  double d2V = 0.0;
};

inline GeneratingV generating_V(const ScalarKernel& k) {
  if (k.b == 0.0) throw Error(Errc::AxisPlane, "generating function V is undefined on the plane b = 0");
  GeneratingV v;
  v.w = k.q / k.b;
  v.V = k.K / k.b;
  // ln|V| = (1/2) ln B1 - (G/2) f up to a constant, with B1 = B / b^2 and
  // f depending on w only through arctan(L1 / h), L1 = L / b.
  const double B1 = 1.0 + k.g * v.w + v.w * v.w;
  const double L1 = v.w + 0.5 * k.g;
  const double den = k.h * k.h + L1 * L1;
  const double dlog = (0.5 * k.g + v.w) / B1 - 0.5 * k.g / den;
  const double d2log = (B1 - (0.5 * k.g + v.w) * (k.g + 2.0 * v.w)) / (B1 * B1) + k.g * L1 / (den * den);
  v.dV = v.V * dlog;
  v.d2V = v.V * (d2log + dlog * dlog);
  return v;
}

}  // namespace finsleroid
