#pragma once

#include <cmath>
#include <complex>

#include "finsleroid/error.hpp"
#include "finsleroid/fields.hpp"
#include "finsleroid/kernel.hpp"
#include "finsleroid/linalg.hpp"
#include "finsleroid/oracle.hpp"

namespace finsleroid {

/// Scalars and vectors the closed-form tensors are built from. The scalar
/// type T is double for the positive-definite space; the indefinite space
/// reuses the same formulas with T = std::complex<double> (see pseudo.hpp).
/// Vectors built only from a_ij, b_i and y stay real in both cases.
template <class T>
struct FormInputs {
  int dim = 0;
  T g{}, q{}, b{}, S2{}, B{}, nu{}, K{}, K2{}, inv_X{}, c2{};
  Mat a, a_inv;
  Vec y, u, b_low, b_up, v_low, v_up, z;
  double det_a = 0.0;
};

namespace forms {

template <class T>
VecT<T> cast(const Vec& v) {
  return v.template cast<T>();
}
template <class T>
MatT<T> cast(const Mat& m) {
  return m.template cast<T>();
}
template <class T>
MatT<T> sym_outer(const Vec& a, const Vec& b) {
  return cast<T>(Mat(a * b.transpose() + b * a.transpose()));
}

template <class T>
MatT<T> eta_low(const FormInputs<T>& s) {
  const Mat r = s.a - outer(s.b_low, s.b_low);
  return cast<T>(r) - cast<T>(Mat(outer(s.v_low, s.v_low))) / (s.q * s.q);
}

template <class T>
VecT<T> e_vector(const FormInputs<T>& s) {
  return -cast<T>(s.b_low) + cast<T>(s.v_low) * (s.b / (s.q * s.q));
}

// covariant tangent vector y_i

template <class T>
VecT<T> covariant_y_v(const FormInputs<T>& s) {
  return (cast<T>(s.v_low) + cast<T>(s.b_low) * (s.b + s.g * s.q)) * (s.K2 / s.B);
}
template <class T>
VecT<T> covariant_y_u(const FormInputs<T>& s) {
  return (cast<T>(s.u) + cast<T>(s.b_low) * (s.g * s.q)) * (s.K2 / s.B);
}
template <class T>
VecT<T> covariant_y_z(const FormInputs<T>& s) {
  return (cast<T>(s.b_low) * s.B + cast<T>(s.z)) * (s.K2 / (s.b * s.B));
}

// metric tensor g_ij

template <class T>
MatT<T> metric_v(const FormInputs<T>& s) {
  const T g = s.g, q = s.q, b = s.b, B = s.B;
  MatT<T> m = cast<T>(Mat(outer(s.b_low, s.b_low))) * (q * (b + g * q)) + sym_outer<T>(s.b_low, s.v_low) * q -
              cast<T>(Mat(outer(s.v_low, s.v_low))) * (b / q);
  return (cast<T>(s.a) + m * (g / B)) * (s.K2 / B);
}
template <class T>
MatT<T> metric_u(const FormInputs<T>& s) {
  const T g = s.g, q = s.q, b = s.b, B = s.B, S2 = s.S2;
  MatT<T> m = cast<T>(Mat(outer(s.b_low, s.b_low))) * (g * q * q - b * S2 / q) -
              cast<T>(Mat(outer(s.u, s.u))) * (b / q) + sym_outer<T>(s.b_low, s.u) * (S2 / q);
  return (cast<T>(s.a) + m * (g / B)) * (s.K2 / B);
}
template <class T>
MatT<T> metric_z(const FormInputs<T>& s) {
  const T g = s.g, q = s.q, b = s.b, B = s.B, K2 = s.K2;
  return eta_low(s) * (K2 / B) + cast<T>(Mat(outer(s.b_low, s.b_low))) * (K2 / (b * b)) +
         sym_outer<T>(s.b_low, s.z) * (K2 / (b * b * B)) +
         cast<T>(Mat(outer(s.z, s.z))) * ((B - g * b * q) / (b * b * q * q) * K2 / (B * B));
}

// inverse metric g^ij

template <class T>
MatT<T> inverse_v(const FormInputs<T>& s) {
  const T g = s.g, q = s.q, b = s.b, B = s.B;
  MatT<T> m = cast<T>(Mat(outer(s.b_up, s.b_up))) * (-b * q) - sym_outer<T>(s.b_up, s.v_up) * q +
              cast<T>(Mat(outer(s.v_up, s.v_up))) * ((b + g * s.c2 * q) / s.nu);
  return (cast<T>(s.a_inv) + m * (g / B)) * (B / s.K2);
}
template <class T>
MatT<T> inverse_u(const FormInputs<T>& s) {
  const T g = s.g, q = s.q, b = s.b, B = s.B, nu = s.nu;
  MatT<T> m = (cast<T>(Mat(outer(s.b_up, s.b_up))) * b - sym_outer<T>(s.b_up, s.y)) * (g / nu) +
              cast<T>(Mat(outer(s.y, s.y))) * (g / (B * nu) * (b + g * s.c2 * q));
  return (cast<T>(s.a_inv) + m) * (B / s.K2);
}

// angular metric h_ij

template <class T>
MatT<T> angular_z(const FormInputs<T>& s) {
  return (eta_low(s) + cast<T>(Mat(outer(s.z, s.z))) / (s.B * s.q * s.q)) * (s.K2 / s.B);
}
template <class T>
MatT<T> angular_u(const FormInputs<T>& s) {
  const T g = s.g, q = s.q, b = s.b, B = s.B, S2 = s.S2;
  MatT<T> m = cast<T>(Mat(outer(s.b_low, s.b_low))) * (-g * b * S2) - cast<T>(Mat(outer(s.u, s.u))) * (q + g * b) +
              sym_outer<T>(s.b_low, s.u) * (g * b * b);
  return (cast<T>(s.a) + m / (q * B)) * (s.K2 / B);
}

template <class T>
T determinant(const FormInputs<T>& s) {
  return s.nu / s.q * std::pow(s.K2 / s.B, s.dim) * s.det_a;
}

// Cartan family

template <class T>
VecT<T> cartan_low(const FormInputs<T>& s) {
  return (cast<T>(s.b_low) * (s.q * s.q) - cast<T>(s.v_low) * s.b) * (s.K * s.g / (T(2) * s.q * s.B) * s.inv_X);
}
template <class T>
VecT<T> cartan_up(const FormInputs<T>& s) {
  return (cast<T>(s.b_up) * s.B - cast<T>(s.y) * (s.b + s.g * s.q * s.c2)) * (s.g * s.inv_X / (T(2) * s.K * s.nu));
}
template <class T>
T cartan_normsq(const FormInputs<T>& s) {
  return s.g * s.g / T(4) * s.inv_X * s.inv_X * (T(s.dim + 1) - s.inv_X);
}

/// A_ijk through A_i and h_ij. Undefined when A_h A^h vanishes (g = 0).
template <class T>
Tensor3<T> cartan_tensor_h(const FormInputs<T>& s, const VecT<T>& A, const MatT<T>& h) {
  const int n = s.dim;
  const T coef = (T(n + 1) - s.inv_X) / cartan_normsq(s);
  const T X = T(1) / s.inv_X;
  Tensor3<T> t(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        t(i, j, k) = X * (A(i) * h(j, k) + A(j) * h(i, k) + A(k) * h(i, j) - coef * A(i) * A(j) * A(k));
      }
    }
  }
  return t;
}

/// A_ijk through e_i and eta_ij; regular for every charge including g = 0.
template <class T>
Tensor3<T> cartan_tensor_e(const FormInputs<T>& s) {
  const int n = s.dim;
  const VecT<T> e = e_vector(s);
  const MatT<T> eta = eta_low(s);
  const T pre = s.K * s.K2 / (s.B * s.B);
  const T c1 = T(-0.5) * s.g * s.q;
  const T c3 = -s.g * s.q * s.q * s.q / s.B;
  Tensor3<T> t(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        t(i, j, k) = pre * (c1 * (e(k) * eta(i, j) + e(i) * eta(k, j) + e(j) * eta(i, k)) + c3 * e(i) * e(j) * e(k));
      }
    }
  }
  return t;
}

}  // namespace forms

/// Real inputs for the positive-definite space.
inline FormInputs<double> pd_inputs(const PointData& p, const ScalarKernel& k, const Vec& y) {
  FormInputs<double> s;
  s.dim = p.dim;
  s.g = k.g;
  s.q = k.q;
  s.b = k.b;
  s.S2 = k.S2;
  s.B = k.B;
  s.nu = k.nu;
  s.K = k.K;
  s.K2 = k.K * k.K;
  s.inv_X = k.inv_X;
  s.c2 = k.c2;
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

struct AuxiliaryVectors {
  Vec u;      // a_ij y^j
  Vec v_up;   // y^i - b b^i
  Vec v_low;  // u_i - b b_i
  Vec z;      // b u_i - S^2 b_i
  Vec e;      // -b_i + b v_i / q^2
  Mat r;      // a_ij - b_i b_j
  Mat r_up;   // a^ij - b^i b^j
};

inline AuxiliaryVectors auxiliary_vectors(const ScalarKernel& k, const PointData& p, const Vec& y) {
  AuxiliaryVectors v;
  v.u = p.a * y;
  v.v_up = y - k.b * p.b_up;
  v.v_low = v.u - k.b * p.b_low;
  v.z = k.b * v.u - k.S2 * p.b_low;
  v.e = -p.b_low + (k.b / (k.q * k.q)) * v.v_low;
  v.r = p.a - outer(p.b_low, p.b_low);
  v.r_up = p.a_inv - outer(p.b_up, p.b_up);
  return v;
}

struct EtaTensors {
  Mat low;    // eta_ij
  Mat mixed;  // eta^i_j
  Mat up;     // eta^ij
};

inline EtaTensors eta_tensors(const ScalarKernel& k, const PointData& p, const AuxiliaryVectors& v) {
  const double q2 = k.q * k.q;
  EtaTensors e;
  e.low = v.r - outer(v.v_low, v.v_low) / q2;
  const Mat r_mixed = Mat::Identity(p.dim, p.dim) - outer(p.b_up, p.b_low);
  e.mixed = r_mixed - outer(v.v_up, v.v_low) / q2;
  e.up = v.r_up - outer(v.v_up, v.v_up) / q2;
  return e;
}

/// Which of the algebraically equivalent closed-form families to use.
enum class Representation { V, U, Z };

struct TensorBundle {
  Vec y_low;
  Mat g;
  Mat g_inv;
  Mat h;
  double det = 0.0;
};

inline Vec covariant_y(const FormInputs<double>& s, Representation r = Representation::V) {
  switch (r) {
    case Representation::U: return forms::covariant_y_u(s);
    case Representation::Z:
      if (s.b == 0.0) throw Error(Errc::AxisPlane, "z-representation divides by b");
      return forms::covariant_y_z(s);
    default: return forms::covariant_y_v(s);
  }
}

inline Mat metric_tensor(const FormInputs<double>& s, Representation r = Representation::V) {
  switch (r) {
    case Representation::U: return forms::metric_u(s);
    case Representation::Z:
      if (s.b == 0.0) throw Error(Errc::AxisPlane, "z-representation divides by b");
      return forms::metric_z(s);
    default: return forms::metric_v(s);
  }
}

inline Mat inverse_metric(const FormInputs<double>& s, Representation r = Representation::V) {
  return r == Representation::U ? forms::inverse_u(s) : forms::inverse_v(s);
}

inline Mat angular_metric(const FormInputs<double>& s, Representation r = Representation::U) {
  if (r == Representation::Z) return forms::angular_z(s);
  if (r == Representation::U) return forms::angular_u(s);
  const Vec yl = forms::covariant_y_v(s);
  return Mat(forms::metric_v(s) - outer(yl, yl) / s.K2);
}

inline double metric_determinant(const FormInputs<double>& s) { return forms::determinant(s); }

inline TensorBundle tensor_bundle(const FormInputs<double>& s) {
  TensorBundle t;
  t.y_low = covariant_y(s);
  t.g = metric_tensor(s);
  t.g_inv = inverse_metric(s);
  t.h = t.g - outer(t.y_low, t.y_low) / s.K2;
  t.det = metric_determinant(s);
  return t;
}

struct CartanData {
  Vec A_low;
  Vec A_up;
  Tensor3<double> A;
  double normsq = 0.0;
  bool zero_charge = false;  // Cartan tensor vanishes identically
  bool used_e_form = false;  // A_h A^h too small for the h-form
};

inline CartanData cartan(const FormInputs<double>& s, const TensorBundle& t) {
  CartanData c;
  c.normsq = forms::cartan_normsq(s);
  if (std::abs(s.g) <= 1e-14) {
    c.zero_charge = true;
    c.A_low = Vec::Zero(s.dim);
    c.A_up = Vec::Zero(s.dim);
    c.A = Tensor3<double>(s.dim);
    return c;
  }
  c.A_low = forms::cartan_low(s);
  c.A_up = forms::cartan_up(s);
  if (c.normsq < 1e-24) {
    c.used_e_form = true;
    c.A = forms::cartan_tensor_e(s);
  } else {
    c.A = forms::cartan_tensor_h<double>(s, c.A_low, t.h);
  }
  return c;
}

/// Closed-form metric tensor as a function of y at fixed x.
inline Mat metric_at_y(const PointData& p, const Vec& y) { return metric_tensor(pd_inputs(p, eval_kernel(p, y), y)); }

struct CartanOracleResult {
  double residual = 0.0;  // max |A_ijk - (K/2) dg_ij/dy^k|
  double scale = 0.0;     // max |A_ijk|
  double certificate = 0.0;
};

/// Compares the closed-form Cartan tensor against (K/2) times a certified
/// numerical y-derivative of the assembled metric tensor.
inline CartanOracleResult cartan_oracle_check(const PointData& p, const Vec& y) {
  const ScalarKernel k = eval_kernel(p, y);
  const FormInputs<double> s = pd_inputs(p, k, y);
  const CartanData c = cartan(s, tensor_bundle(s));
  const int n = p.dim;
  auto flat_metric = [&p](const Vec& yy) { return Vec(metric_at_y(p, yy).reshaped()); };
  oracle::DiffOptions opt;
  opt.step = 1e-4;
  opt.rel_tol = 1e-7;
  opt.abs_tol = 1e-9;
  const auto jac = oracle::jacobian(flat_metric, y, opt);
  CartanOracleResult r;
  r.certificate = jac.certificate;
  r.scale = max_abs(c.A);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int kk = 0; kk < n; ++kk) {
        const double numeric = 0.5 * k.K * jac.value(j * n + i, kk);
        r.residual = std::max(r.residual, std::abs(c.A(i, j, kk) - numeric));
      }
    }
  }
  return r;
}

}  // namespace finsleroid
