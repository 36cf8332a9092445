#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "finsleroid/error.hpp"
#include "finsleroid/fields.hpp"
#include "finsleroid/linalg.hpp"
#include "finsleroid/oracle.hpp"
#include "finsleroid/tensors.hpp"

namespace finsleroid {

/// Charge combinations of the indefinite space; g is unrestricted.
struct PseudoChargeParams {
  double g = 0.0;
  double h = 1.0;  // sqrt(1 + g^2/4)
  double G = 0.0;
  double g_plus = 1.0;   // -g/2 + h
  double g_minus = -1.0;  // -g/2 - h
  double G_plus = 1.0;
  double G_minus = -1.0;
  double discriminant = 4.0;
};

inline PseudoChargeParams pseudo_charge_params(double g) {
  PseudoChargeParams c;
  c.g = g;
  c.h = std::sqrt(1.0 + 0.25 * g * g);
  c.G = g / c.h;
  c.g_plus = -0.5 * g + c.h;
  c.g_minus = -0.5 * g - c.h;
  c.G_plus = c.g_plus / c.h;
  c.G_minus = c.g_minus / c.h;
  c.discriminant = 4.0 * c.h * c.h;
  return c;
}

inline double pseudo_quadratic_form(double b, double q, double g) { return b * b - g * q * b - q * q; }

/// F as the product of powers, evaluated through logarithms so that large
/// |g| does not overflow.
inline double pseudo_metric_function(double b, double q, double g) {
  const PseudoChargeParams c = pseudo_charge_params(g);
  const double lm = std::log(std::abs(b + c.g_minus * q));
  const double lp = std::log(std::abs(b + c.g_plus * q));
  return std::exp(0.5 * c.G_plus * lm - 0.5 * c.G_minus * lp);
}

/// F as sqrt(|B|) J.
inline double pseudo_metric_function_sqrtB(double b, double q, double g) {
  const PseudoChargeParams c = pseudo_charge_params(g);
  const double J = std::pow(std::abs((b + c.g_minus * q) / (b + c.g_plus * q)), -0.25 * c.G);
  return std::sqrt(std::abs(pseudo_quadratic_form(b, q, g))) * J;
}

struct PseudoKernel {
  int dim = 0;
  double b = 0.0;
  double S2 = 0.0;
  double q = 0.0;  // sqrt(b^2 - S^2)
  double B = 0.0;
  double L = 0.0;  // q + (g/2) b, so that h^2 b^2 - L^2 = B
  double J = 1.0;
  double F = 0.0;          // product-of-powers form
  double F_sqrtB = 0.0;    // sqrt(|B|) J form
  double g = 0.0;
  double h = 1.0;
  double G = 0.0;
  double g_plus = 1.0;
  double g_minus = -1.0;
  double G_plus = 1.0;
  double G_minus = -1.0;
  double discriminant = 4.0;
  double c = 0.0;
  double c2 = 0.0;
};

/// Admissible vectors: b > 0 and b^2 > S^2 > 0, off the null set B = 0.
inline void check_pseudo_admissible(double b, double S2, double q, double B) {
  if (!(b > 0.0)) throw Error(Errc::InadmissibleVector, "time-space case needs b > 0");
  if (!(S2 > 0.0)) throw Error(Errc::InadmissibleVector, "time-space case needs S^2 > 0");
  if (!(b * b - S2 > 0.0)) throw Error(Errc::InadmissibleVector, "time-space case needs b^2 > S^2");
  if (!(std::abs(B) > 1e-12 * b * b)) throw Error(Errc::InadmissibleVector, "vector lies on the null set B = 0");
  (void)q;
}

inline PseudoKernel eval_pseudo_kernel(const PointData& p, const Vec& y) {
  if (p.signature != Signature::TimeSpace) {
    throw Error(Errc::WrongSignature, "indefinite kernel needs a time-space field set");
  }
  if (y.size() != p.dim) throw Error(Errc::SchemaError, "tangent vector has wrong dimension");
  if (y.cwiseAbs().maxCoeff() == 0.0) throw Error(Errc::ZeroVector, "tangent vector y must be nonzero");
  const PseudoChargeParams cp = pseudo_charge_params(p.g);
  PseudoKernel k;
  k.dim = p.dim;
  k.c = p.c;
  k.c2 = p.c2;
  k.g = cp.g;
  k.h = cp.h;
  k.G = cp.G;
  k.g_plus = cp.g_plus;
  k.g_minus = cp.g_minus;
  k.G_plus = cp.G_plus;
  k.G_minus = cp.G_minus;
  k.discriminant = cp.discriminant;
  k.b = p.b_low.dot(y);
  k.S2 = y.dot(p.a * y);
  k.q = std::sqrt(std::max(0.0, k.b * k.b - k.S2));
  k.B = pseudo_quadratic_form(k.b, k.q, k.g);
  check_pseudo_admissible(k.b, k.S2, k.q, k.B);
  k.L = k.q + 0.5 * k.g * k.b;
  k.J = std::pow(std::abs((k.b + k.g_minus * k.q) / (k.b + k.g_plus * k.q)), -0.25 * k.G);
  k.F = pseudo_metric_function(k.b, k.q, k.g);
  k.F_sqrtB = std::sqrt(std::abs(k.B)) * k.J;
  return k;
}

inline double pseudo_norm(const PointData& p, const Vec& y) { return eval_pseudo_kernel(p, y).F; }

struct PseudoMetric {
  Vec y_low;
  Mat g;
  double y_certificate = 0.0;
  double g_certificate = 0.0;
  int positive_eigenvalues = 0;
  int negative_eigenvalues = 0;
};

/// Smallest of q, S, |b + g_- q| and |b + g_+ q| relative to max |y^i|: how
/// far y is from the light cone (q = 0, S = 0) and from B = 0.
inline double pseudo_regularity_margin(const PseudoKernel& k, const Vec& y) {
  const double d = std::min({k.q, std::sqrt(k.S2), std::abs(k.b + k.g_minus * k.q), std::abs(k.b + k.g_plus * k.q)});
  return d / y.cwiseAbs().maxCoeff();
}

/// y_i and g_ij of the indefinite space by certified differentiation of
/// F^2/2. Near the light cone F^2 is far from its Taylor polynomial at the
/// usual step sizes while at g = 0 it is exactly quadratic, so no single
/// step suits every sample; the base step is searched instead.
inline PseudoMetric pseudo_metric_numeric(const PointData& p, const Vec& y) {
  auto half_F2 = [&p](const Vec& yy) {
    const double F = pseudo_norm(p, yy);
    return 0.5 * F * F;
  };
  const PseudoKernel k = eval_pseudo_kernel(p, y);
  const double ymax = y.cwiseAbs().maxCoeff();
  PseudoMetric m;
  oracle::DiffOptions gopt;
  gopt.scale_step = false;
  gopt.step = 1e-3 * ymax;
  gopt.rel_tol = 1e-7;
  const auto grad = oracle::search_step([&](const oracle::DiffOptions& o) { return oracle::gradient(half_F2, y, o); }, gopt);
  oracle::DiffOptions hopt;
  hopt.scale_step = false;
  hopt.step = 1e-2 * ymax;
  hopt.rel_tol = 1e-6;
  hopt.abs_tol = 1e-9 * k.F * k.F / (ymax * ymax);
  const auto hess = oracle::search_step([&](const oracle::DiffOptions& o) { return oracle::hessian(half_F2, y, o); }, hopt);
  m.y_low = grad.value;
  m.y_certificate = grad.certificate;
  m.g = hess.value;
  m.g_certificate = hess.certificate;
  const Vec ev = symmetric_eigenvalues(m.g);
  const double tol = 1e-12 * ev.cwiseAbs().sum();
  m.positive_eigenvalues = static_cast<int>((ev.array() > tol).count());
  m.negative_eigenvalues = static_cast<int>((ev.array() < -tol).count());
  return m;
}

/// The closed forms of the positive-definite space that the duality
/// substitution is applied to.
enum class DualForm { CovariantY, MetricTensor, InverseMetric, CartanVector, CartanTensor };

inline const char* to_string(DualForm f) {
  switch (f) {
    case DualForm::CovariantY: return "covariant-y";
    case DualForm::MetricTensor: return "metric-tensor";
    case DualForm::InverseMetric: return "inverse-metric";
    case DualForm::CartanVector: return "cartan-vector";
    case DualForm::CartanTensor: return "cartan-tensor";
  }
  return "unknown";
}

/// Image of a real scalar under g -> i g (and likewise q -> i q).
inline std::complex<double> imaginary_image(double v) { return {0.0, v}; }

/// Positive-definite inputs with g -> i g, q -> i q and K -> F. Every
/// monomial in (g, q) of total degree d thereby picks up i^d, so real output
/// certifies that only even-degree monomials survive.
inline FormInputs<std::complex<double>> dual_inputs(const PointData& p, const PseudoKernel& k, const Vec& y) {
  using C = std::complex<double>;
  FormInputs<C> s;
  s.dim = p.dim;
  s.g = imaginary_image(k.g);
  s.q = imaginary_image(k.q);
  s.b = C(k.b);
  s.S2 = C(k.S2);
  s.c2 = C(k.c2);
  s.B = s.b * s.b + s.g * s.q * s.b + s.q * s.q;
  s.nu = s.q + (C(1.0) - s.c2) * s.g * s.b;
  s.inv_X = C(static_cast<double>(p.dim)) + (C(1.0) - s.c2) * s.B / (s.q * s.nu);
  s.K = C(k.F);
  s.K2 = C(k.F * k.F);
  s.a = p.a;
  s.a_inv = p.a_inv;
  s.det_a = p.det_a;
  s.y = y;
  s.u = p.a * y;
  s.b_low = p.b_low;
  s.b_up = p.b_up;
  s.v_low = s.u - k.b * p.b_low;
  s.v_up = y - k.b * p.b_up;
  s.z = k.b * s.u - k.S2 * p.b_low;
  return s;
}

/// Evaluates any positive-definite closed form `expr` (a callable on
/// FormInputs<std::complex<double>> returning a complex scalar) under the
/// duality substitution and returns its real value; a surviving imaginary
/// part means the expression had an odd-degree monomial in (g, q).
template <class Expr>
double substitute_scalar(const PointData& p, const PseudoKernel& k, const Vec& y, const Expr& expr,
                         double imag_tol = 1e-12) {
  const std::complex<double> v = expr(dual_inputs(p, k, y));
  if (!(std::abs(v.imag()) <= imag_tol * std::max(std::abs(v.real()), 1e-300))) {
    throw Error(Errc::OddDegreeMonomial, "substituted expression keeps an imaginary part " + std::to_string(v.imag()));
  }
  return v.real();
}

struct DualComponents {
  DualForm form = DualForm::MetricTensor;
  Vec vector;
  Mat matrix;
  Tensor3<double> tensor;
  double max_imag = 0.0;  // relative to the largest real part
};

namespace detail {
template <class Derived>
double imag_ratio(const Eigen::MatrixBase<Derived>& m) {
  return max_abs(m.imag()) / std::max(max_abs(m.real()), 1e-300);
}
}  // namespace detail

inline DualComponents duality_substitution(DualForm form, const PointData& p, const PseudoKernel& k, const Vec& y,
                                           double imag_tol = 1e-12) {
  const auto s = dual_inputs(p, k, y);
  DualComponents out;
  out.form = form;
  switch (form) {
    case DualForm::CovariantY: {
      const VecT<std::complex<double>> v = forms::covariant_y_u(s);
      out.vector = v.real();
      out.max_imag = detail::imag_ratio(v);
      break;
    }
    case DualForm::CartanVector: {
      const VecT<std::complex<double>> v = forms::cartan_low(s);
      out.vector = v.real();
      out.max_imag = detail::imag_ratio(v);
      break;
    }
    case DualForm::MetricTensor:
    case DualForm::InverseMetric: {
      const MatT<std::complex<double>> m = form == DualForm::MetricTensor ? forms::metric_u(s) : forms::inverse_u(s);
      out.matrix = m.real();
      out.max_imag = detail::imag_ratio(m);
      break;
    }
    case DualForm::CartanTensor: {
      const Tensor3<std::complex<double>> t = forms::cartan_tensor_e(s);
      out.tensor = Tensor3<double>(p.dim);
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < t.data().size(); ++i) {
        out.tensor.data()[i] = t.data()[i].real();
        re = std::max(re, std::abs(t.data()[i].real()));
        im = std::max(im, std::abs(t.data()[i].imag()));
      }
      out.max_imag = im / std::max(re, 1e-300);
      break;
    }
  }
  if (!(out.max_imag <= imag_tol)) {
    throw Error(Errc::OddDegreeMonomial, std::string("substituted ") + to_string(form) +
                                             " keeps an imaginary part of relative size " +
                                             std::to_string(out.max_imag));
  }
  return out;
}

}  // namespace finsleroid
