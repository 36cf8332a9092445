#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "finsleroid/error.hpp"
#include "finsleroid/fields.hpp"
#include "finsleroid/kernel.hpp"
#include "finsleroid/linalg.hpp"
#include "finsleroid/oracle.hpp"
#include "finsleroid/tensors.hpp"

namespace finsleroid {

struct IdentityResult {
  std::string name;
  std::string formula;
  double residual = 0.0;
  double tolerance = 0.0;
  bool derivative = false;
  bool applicable = true;
  std::string note;
  std::string tolerance_key;  // which BatteryTolerances entry set the bound

  bool pass() const { return !applicable || residual <= tolerance; }
};

struct BatteryTolerances {
  double algebraic = 1e-9;
  double exact = 1e-10;       // reciprocity and determinant
  double trace = 1e-8;        // g^jk A_ijk against A_i
  double representation = 1e-12;
  double derivative = 1e-6;
};

/// Everything the battery needs at one (x, y), recomputable at shifted y.
struct PointGeometry {
  ScalarKernel k;
  FormInputs<double> s;
  AuxiliaryVectors aux;
  EtaTensors eta;
  TensorBundle t;
  CartanData cartan;
};

inline PointGeometry point_geometry(const PointData& p, const Vec& y) {
  PointGeometry pg;
  pg.k = eval_kernel(p, y);
  pg.s = pd_inputs(p, pg.k, y);
  pg.aux = auxiliary_vectors(pg.k, p, y);
  pg.eta = eta_tensors(pg.k, p, pg.aux);
  pg.t = tensor_bundle(pg.s);
  pg.cartan = cartan(pg.s, pg.t);
  return pg;
}

namespace detail {

/// A tolerance value together with the name of the setting it came from.
struct TolRef {
  double value;
  const char* key;
  TolRef(double v, const char* k = "fixed") : value(v), key(k) {}  // NOLINT(google-explicit-constructor)
};

class Battery {
 public:
  explicit Battery(const BatteryTolerances& tol) : tol_(tol) {}

  void add(std::string name, std::string formula, double residual, TolRef tolerance, bool derivative = false) {
    out_.push_back({std::move(name), std::move(formula), residual, tolerance.value, derivative, true, {}, tolerance.key});
  }

  void skip(std::string name, std::string formula, std::string why, bool derivative = false) {
    out_.push_back({std::move(name), std::move(formula), 0.0, 0.0, derivative, false, std::move(why),
                    derivative ? "derivative" : "algebraic"});
  }

  template <class Closed, class Numeric>
  void add_derivative(std::string name, std::string formula, const Numeric& numeric, const Closed& closed) {
    try {
      const Mat num = numeric();
      const Mat cf = closed();
      out_.push_back({std::move(name), std::move(formula), relative_residual(num, cf), tol_.derivative, true, true, {},
                      "derivative"});
    } catch (const Error& e) {
      out_.push_back({std::move(name), std::move(formula), INFINITY, tol_.derivative, true, true, e.what(),
                      "derivative"});
    }
  }

  std::vector<IdentityResult> take() { return std::move(out_); }

 private:
  BatteryTolerances tol_;
  std::vector<IdentityResult> out_;
};

inline Mat as_mat(const Vec& v) { return Mat(v); }

inline Mat numeric_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& y) {
  oracle::DiffOptions opt;
  opt.rel_tol = 1e-7;
  opt.abs_tol = 1e-10;
  return oracle::jacobian(f, y, opt).value;
}

}  // namespace detail

/// Runs every closed-form identity of the positive-definite space at one
/// sample. Failures are reported, never thrown.
inline std::vector<IdentityResult> identity_battery(const PointData& p, const Vec& y,
                                                    const BatteryTolerances& tol = {}) {
  detail::Battery bat(tol);
  const PointGeometry pg = point_geometry(p, y);
  const ScalarKernel& k = pg.k;
  const FormInputs<double>& s = pg.s;
  const AuxiliaryVectors& v = pg.aux;
  const EtaTensors& eta = pg.eta;
  const TensorBundle& t = pg.t;
  const CartanData& cd = pg.cartan;
  const int n = p.dim;
  const Mat I = Mat::Identity(n, n);
  const double K2 = k.K * k.K;
  const double S2 = k.S2;
  const double one_c2 = 1.0 - k.c2;
  const double g = k.g, b = k.b, q = k.q, B = k.B, nu = k.nu, X = k.X;
  const bool has_b = std::abs(b) > 1e-12 * k.S;
  const bool has_g = g != 0.0;
  const detail::TolRef alg{tol.algebraic, "algebraic"};

  // kernel scalars
  bat.add("q-lower-bound", "q^2 >= (1-c^2)/c^2 b^2",
          std::max(0.0, -(q * q - one_c2 / k.c2 * b * b)) / S2, 1e-12);
  bat.add("B-positive", "B > 0", B > 0.0 ? 0.0 : 1.0, 0.0);
  bat.add("B-discriminant", "g^2 - 4 = -4h^2", relative_residual(g * g - 4.0, k.discriminant), alg);
  bat.add("B-sum-of-squares", "B = [(b+g+q)^2 + (b+g-q)^2]/2",
          relative_residual(B, 0.5 * (std::pow(b + k.g_plus * q, 2) + std::pow(b + k.g_minus * q, 2))), alg);
  bat.add("L-identity", "L^2 + h^2 b^2 = B", relative_residual(k.L * k.L + k.h * k.h * b * b, B), alg);
  bat.add("nu-positive", "nu > 0", nu > 0.0 ? 0.0 : 1.0, 0.0);
  bat.add("eta-positive", "eta > 0", k.eta > 0.0 ? 0.0 : 1.0, 0.0);
  {
    const ScalarKernel ax = eval_kernel(p, p.b_up);
    bat.add("eta-on-axis", "eta B(y=b^i) = c^2", relative_residual(k.eta * ax.B, k.c2), alg);
  }
  bat.add("nu-ratio-identity", "(c^2S^2-b^2)/(q nu) = 1 - (1-c^2)B/(q nu)",
          relative_residual((k.c2 * S2 - b * b) / (q * nu), 1.0 - one_c2 * B / (q * nu), 1.0), alg);
  bat.add("nu-product-identity", "g b (c^2S^2-b^2) = qB - nu S^2",
          relative_residual(g * b * (k.c2 * S2 - b * b), q * B - nu * S2, q * B), alg);

  // auxiliary vectors
  bat.add("r-b-contraction", "r_ij b^j = (1-c^2) b_i", relative_residual(v.r * p.b_up, one_c2 * p.b_low, 1.0), alg);
  bat.add("r-square", "r_in r^nj = r^j_i - (1-c^2) b^j b_i",
          relative_residual(Mat(v.r * v.r_up), Mat(I - outer(p.b_low, p.b_up) - one_c2 * outer(p.b_low, p.b_up))), alg);
  bat.add("u-v-contraction", "u_i v^i = q^2", relative_residual(v.u.dot(v.v_up), q * q, S2), alg);
  bat.add("v-b-contraction", "v_i b^i = (1-c^2) b",
          relative_residual(v.v_low.dot(p.b_up), one_c2 * b, k.S), alg);
  bat.add("r-v-contraction", "r_in v^n = v_i - (1-c^2) b b_i",
          relative_residual(v.r * v.v_up, v.v_low - one_c2 * b * p.b_low, k.S), alg);
  bat.add("v-norm", "v_k v^k = q^2 - (1-c^2) b^2", relative_residual(v.v_low.dot(v.v_up), q * q - one_c2 * b * b, S2),
          alg);
  bat.add("z-y-orthogonal", "y^i z_i = 0", std::abs(y.dot(v.z)) / (S2 * k.S), alg);
  bat.add("z-b-contraction", "b^i z_i = b^2 - c^2 S^2", relative_residual(p.b_up.dot(v.z), b * b - k.c2 * S2, S2),
          alg);
  bat.add("z-norm", "a^ij z_i z_j = S^2 (c^2 S^2 - b^2)",
          relative_residual(v.z.dot(p.a_inv * v.z), S2 * (k.c2 * S2 - b * b), S2 * S2), alg);
  bat.add("e-y-orthogonal", "y^i e_i = 0", std::abs(y.dot(v.e)) / (k.S * max_abs(v.e) + 1e-300), alg);

  // eta tensors
  bat.add("eta-raise-mixed", "eta^n_j = a^nm eta_mj", relative_residual(eta.mixed, Mat(p.a_inv * eta.low)), alg);
  bat.add("eta-raise-up", "eta^ij = a^in eta_n^j", relative_residual(eta.up, Mat(eta.mixed * p.a_inv)), alg);
  bat.add("eta-y-null", "eta_ni y^n = 0", max_abs(Vec(eta.low * y)) / (max_abs(eta.low) * max_abs(y)), alg);
  bat.add("eta-b-contraction", "eta_ij b^j = -(1-c^2) z_i / q^2",
          relative_residual(eta.low * p.b_up, -one_c2 * v.z / (q * q), 1.0), alg);
  bat.add("eta-z-contraction", "eta_ij z^j = (1-c^2) S^2 z_i / q^2",
          relative_residual(eta.low * (p.a_inv * v.z), one_c2 * S2 / (q * q) * v.z, S2), alg);

  // generating function
  if (has_b) {
    const GeneratingV gv = generating_V(k);
    bat.add("V-first-derivative", "V V' = w K^2 / B", relative_residual(gv.V * gv.dV, gv.w * K2 / B, 1e-300), alg);
    bat.add("V-second-derivative", "V V'' = (b^2/B)(K^2/B)", relative_residual(gv.V * gv.d2V, b * b / B * K2 / B), alg);
    bat.add("V-representation", "K = b V", relative_residual(b * gv.V, k.K), alg);
  } else {
    bat.skip("V-first-derivative", "V V' = w K^2 / B", "b = 0");
    bat.skip("V-second-derivative", "V V'' = (b^2/B)(K^2/B)", "b = 0");
    bat.skip("V-representation", "K = b V", "b = 0");
  }

  // representation families
  const detail::TolRef rep{tol.representation, "representation"};
  bat.add("y-u-form", "y_i = (u_i + g q b_i) K^2/B", relative_residual(forms::covariant_y_u(s), t.y_low), rep);
  bat.add("g-u-form", "u-form metric tensor", relative_residual(forms::metric_u(s), t.g), rep);
  bat.add("ginv-u-form", "u-form inverse metric", relative_residual(forms::inverse_u(s), t.g_inv), rep);
  bat.add("h-u-form", "u-form angular metric", relative_residual(forms::angular_u(s), t.h), rep);
  bat.add("h-z-form", "h_ij = (K^2/B)(eta_ij + z_i z_j/(B q^2))", relative_residual(forms::angular_z(s), t.h), rep);
  if (has_b) {
    // the z-forms carry 1/b and 1/b^2; cancellation limits them to ~eps/|b|
    const detail::TolRef zt{std::max(rep.value, 1e-14 * k.S * k.S / (b * b)), "representation"};
    bat.add("y-z-form", "y_i = (B b_i + z_i) K^2/(bB)", relative_residual(forms::covariant_y_z(s), t.y_low), zt);
    bat.add("g-z-form", "z-form metric tensor", relative_residual(forms::metric_z(s), t.g), zt);
  } else {
    bat.skip("y-z-form", "y_i = (B b_i + z_i) K^2/(bB)", "b = 0");
    bat.skip("g-z-form", "z-form metric tensor", "b = 0");
  }

  // metric tensor family
  bat.add("reciprocity", "g_ij g^jk = delta", max_abs(Mat(t.g * t.g_inv - I)), detail::TolRef{tol.exact, "exact"});
  bat.add("determinant", "det g = (nu/q)(K^2/B)^N det a", relative_residual(t.det, t.g.determinant()), detail::TolRef{tol.exact, "exact"});
  bat.add("euler-covector", "y_i = g_ij y^j", relative_residual(Vec(t.g * y), t.y_low), alg);
  bat.add("euler-norm", "g_ij y^i y^j = K^2", relative_residual(y.dot(t.g * y), K2), alg);
  bat.add("euler-inverse", "y^i = g^ij y_j", relative_residual(Vec(t.g_inv * t.y_low), y), alg);
  bat.add("angular-null", "h_ij y^j = 0", max_abs(Vec(t.h * y)) / k.K, alg);
  bat.add("h-b-contraction", "h_ij b^j = -(nu z_i/(Bq)) K^2/B",
          relative_residual(Vec(t.h * p.b_up), Vec(-nu * v.z / (B * q) * K2 / B), 1.0), alg);
  bat.add("ginv-z-contraction", "g^ij z_i z_j = (q/nu)(c^2S^2-b^2) B^2/K^2",
          relative_residual(v.z.dot(t.g_inv * v.z), q / nu * (k.c2 * S2 - b * b) * B * B / K2, S2 * S2), alg);
  const Vec Wb = (S2 * p.b_up - g / nu * (k.c2 * S2 - b * b) * v.v_up);
  bat.add("ginv-b-contraction", "g^ij b_j = [S^2 b^i - (g/nu)(c^2S^2-b^2) v^i]/K^2",
          relative_residual(Vec(t.g_inv * p.b_low), Vec(Wb / K2), 1.0), alg);
  {
    Vec tv(n);
    for (int i = 0; i < n; ++i) tv(i) = 1.0 / (1.0 + i) * (i % 2 == 0 ? 1.0 : -1.0);
    const double yt = y.dot(tv), bt = p.b_up.dot(tv);
    const Vec rhs = (B * (p.a_inv * tv) - g * q * yt * p.b_up + g / nu * (-B * bt + (b + g * k.c2 * q) * yt) * v.v_up) / K2;
    bat.add("ginv-general-contraction", "g^ij t_j via a^ij, b^i, v^i", relative_residual(Vec(t.g_inv * tv), rhs), alg);
  }
  if (has_b) {
    bat.add("b-gc2q", "b + g c^2 q = (B - q nu)/b", relative_residual(b + g * k.c2 * q, (B - q * nu) / b, k.S), alg);
  } else {
    bat.skip("b-gc2q", "b + g c^2 q = (B - q nu)/b", "b = 0");
  }
  bat.add("v-decomposition", "v_k = (q^2/K^2) y_k + ((b+gq)/B) z_k",
          relative_residual(v.v_low, Vec(q * q / K2 * t.y_low + (b + g * q) / B * v.z), k.S), alg);
  bat.add("ginv-u-contraction", "g^ij u_j = [B y^i - g q W^i]/K^2",
          relative_residual(Vec(t.g_inv * v.u), Vec((B * y - g * q * Wb) / K2), k.S), alg);
  bat.add("ginv-v-contraction", "g^ij v_j = [B y^i - (b+gq) W^i]/K^2",
          relative_residual(Vec(t.g_inv * v.v_low), Vec((B * y - (b + g * q) * Wb) / K2), k.S), alg);
  bat.add("invX-w-form", "1/X via w",
          has_b ? relative_residual(k.inv_X, n + one_c2 / k.w * (1.0 + g * k.w + k.w * k.w) / (k.w + one_c2 * g)) : 0.0,
          alg);

  // Cartan family
  if (has_g) {
    const Vec& A = cd.A_low;
    const Vec& Au = cd.A_up;
    const double Anorm = std::sqrt(std::abs(cd.normsq));
    bat.add("cartan-norm", "A^i A_i = (g^2/4)(1/X^2)(N+1-1/X)", relative_residual(A.dot(Au), cd.normsq), alg);
    bat.add("cartan-raise", "g^ij A_j = A^i", relative_residual(Vec(t.g_inv * A), Au), alg);
    bat.add("cartan-y-null", "A_i y^i = 0", std::abs(A.dot(y)) / (Anorm * k.K), 1e-12);
    bat.add("cartan-b-contraction", "b_i A^i = (g/(2XK nu))(c^2S^2-b^2)",
            relative_residual(p.b_low.dot(Au), g / (2.0 * X * k.K * nu) * (k.c2 * S2 - b * b), Anorm), alg);
    bat.add("v-cartan-form", "v_i = (q^2/K^2) y_i - q(b+gq)(2X/(Kg)) A_i",
            relative_residual(v.v_low, Vec(q * q / K2 * t.y_low - q * (b + g * q) * 2.0 * X / (k.K * g) * A), k.S), alg);
    const Vec l = t.y_low / k.K;
    bat.add("b-cartan-form", "K b_n = b l_n + (2q/g) X A_n",
            relative_residual(Vec(k.K * p.b_low), Vec(b * l + 2.0 * q / g * X * A), k.K), alg);
    if (has_b) {
      bat.add("v-over-q-cartan-form", "K v_n/q = q l_n - ((B-q^2)/b)(2/g) X A_n",
              relative_residual(Vec(k.K * v.v_low / q), Vec(q * l - (B - q * q) / b * 2.0 / g * X * A), k.K), alg);
    } else {
      bat.skip("v-over-q-cartan-form", "K v_n/q = q l_n - ((B-q^2)/b)(2/g) X A_n", "b = 0");
    }
    const Tensor3<double> Ae = forms::cartan_tensor_e(s);
    bat.add("cartan-e-form", "A_ijk: h-form = e-form", max_abs_diff(cd.A, Ae) / max_abs(Ae), detail::TolRef{tol.exact, "exact"});
    double trace_res = 0.0, sym_res = 0.0, null_res = 0.0;
    for (int i = 0; i < n; ++i) {
      double tr = 0.0;
      for (int j = 0; j < n; ++j) {
        double yk = 0.0;
        for (int kk = 0; kk < n; ++kk) {
          tr += t.g_inv(j, kk) * cd.A(i, j, kk);
          yk += cd.A(i, j, kk) * y(kk);
          sym_res = std::max({sym_res, std::abs(cd.A(i, j, kk) - cd.A(j, i, kk)), std::abs(cd.A(i, j, kk) - cd.A(i, kk, j))});
        }
        null_res = std::max(null_res, std::abs(yk));
      }
      trace_res = std::max(trace_res, std::abs(tr - A(i)));
    }
    const double As = max_abs(cd.A);
    bat.add("cartan-trace", "g^jk A_ijk = A_i", trace_res / max_abs(A), detail::TolRef{tol.trace, "trace"});
    bat.add("cartan-symmetric", "A_ijk totally symmetric", sym_res / As, detail::TolRef{tol.exact, "exact"});
    bat.add("cartan-y-null-tensor", "A_ijk y^k = 0", null_res / (As * max_abs(y)), alg);
  } else {
    bat.add("cartan-zero", "g = 0 gives A_ijk = 0", max_abs(cd.A) + max_abs(cd.A_low), 0.0);
  }

  // derivative identities against certified differentiation
  const auto geo = [&p](const Vec& yy) { return point_geometry(p, yy); };
  bat.add_derivative(
      "r-from-v", "r_ij = d v_i / d y^j",
      [&] { return detail::numeric_jacobian([&](const Vec& yy) { return Vec(p.a * yy - p.b_low.dot(yy) * p.b_low); }, y); },
      [&] { return v.r; });
  bat.add_derivative(
      "db-dy", "d b / d y^i = b_i",
      [&] {
        return Mat(detail::numeric_jacobian([&](const Vec& yy) { return Vec::Constant(1, p.b_low.dot(yy)); }, y)
                       .transpose());
      },
      [&] { return detail::as_mat(p.b_low); });
  bat.add_derivative(
      "dq-dy", "d q / d y^i = v_i / q",
      [&] {
        return Mat(detail::numeric_jacobian([&](const Vec& yy) { return Vec::Constant(1, geo(yy).k.q); }, y).transpose());
      },
      [&] { return detail::as_mat(Vec(v.v_low / q)); });
  bat.add_derivative(
      "d-v-over-q", "d(v_k/q)/d y^j = eta_kj / q",
      [&] {
        return detail::numeric_jacobian(
            [&](const Vec& yy) {
              const PointGeometry o = geo(yy);
              return Vec(o.aux.v_low / o.k.q);
            },
            y);
      },
      [&] { return Mat(eta.low / q); });
  if (has_b) {
    bat.add_derivative(
        "dz-dy", "d z_i / d y^k = b eta_ik + v_k z_i/q^2 + (b_k z_i - z_k b_i)/b",
        [&] { return detail::numeric_jacobian([&](const Vec& yy) { return geo(yy).aux.z; }, y); },
        [&] {
          return Mat(b * eta.low + outer(v.z, v.v_low) / (q * q) + (outer(v.z, p.b_low) - outer(p.b_low, v.z)) / b);
        });
  } else {
    bat.skip("dz-dy", "d z_i / d y^k", "b = 0", true);
  }
  const auto dB_numeric = [&] {
    return Mat(detail::numeric_jacobian([&](const Vec& yy) { return Vec::Constant(1, geo(yy).k.B); }, y).transpose());
  };
  bat.add_derivative("dB-dy-z", "dB/dy^k = (2B/K^2) y_k + (g/q) z_k", dB_numeric,
                     [&] { return detail::as_mat(Vec(2.0 * B / K2 * t.y_low + g / q * v.z)); });
  bat.add_derivative(
      "covariant-y-gradient", "y_i = (1/2) dK^2/dy^i",
      [&] {
        return Mat(detail::numeric_jacobian(
                       [&](const Vec& yy) { return Vec::Constant(1, 0.5 * std::pow(geo(yy).k.K, 2)); }, y)
                       .transpose());
      },
      [&] { return detail::as_mat(t.y_low); });
  bat.add_derivative(
      "cartan-log-det", "A_i = K d ln sqrt(det g) / dy^i",
      [&] {
        return Mat(k.K * detail::numeric_jacobian(
                             [&](const Vec& yy) { return Vec::Constant(1, 0.5 * std::log(geo(yy).t.det)); }, y)
                             .transpose());
      },
      [&] { return detail::as_mat(cd.A_low); });
  if (has_g) {
    const Vec& A = cd.A_low;
    bat.add_derivative("dB-dy-cartan", "dB/dy^k = (2B/K^2) y_k - (2B/K) X A_k", dB_numeric,
                       [&] { return detail::as_mat(Vec(2.0 * B / K2 * t.y_low - 2.0 * B / k.K * X * A)); });
    bat.add_derivative(
        "d-q2-over-B", "d(q^2/B)/dy^k = -(2q(2b+gq)/(gKB)) X A_k",
        [&] {
          return Mat(detail::numeric_jacobian(
                         [&](const Vec& yy) {
                           const ScalarKernel o = geo(yy).k;
                           return Vec::Constant(1, o.q * o.q / o.B);
                         },
                         y)
                         .transpose());
        },
        [&] { return detail::as_mat(Vec(-2.0 * q * (2.0 * b + g * q) / (g * k.K * B) * X * A)); });
    if (has_b) {
      bat.add_derivative(
          "d-K-over-q", "d(K/q)/dy^n = (2/(g b q^2))(B-q^2) X A_n",
          [&] {
            return Mat(detail::numeric_jacobian(
                           [&](const Vec& yy) {
                             const ScalarKernel o = geo(yy).k;
                             return Vec::Constant(1, o.K / o.q);
                           },
                           y)
                           .transpose());
          },
          [&] { return detail::as_mat(Vec(2.0 / (g * b * q * q) * (B - q * q) * X * A)); });
      bat.add_derivative(
          "d-XA", "d(X A_k)/dy^n = -(1/K) l_k X A_n - (g/(2Kw)) h_kn + (2/(gKq))(b+gq) X^2 A_k A_n",
          [&] {
            return detail::numeric_jacobian(
                [&](const Vec& yy) {
                  const PointGeometry o = geo(yy);
                  return Vec(o.k.X * o.cartan.A_low);
                },
                y);
          },
          [&] {
            const Vec l = t.y_low / k.K;
            return Mat(-1.0 / k.K * outer(l, X * A) - g / (2.0 * k.K * k.w) * t.h +
                       2.0 / (g * k.K * q) * (b + g * q) * X * X * outer(A, A));
          });
    } else {
      bat.skip("d-K-over-q", "d(K/q)/dy^n", "b = 0", true);
      bat.skip("d-XA", "d(X A_k)/dy^n", "b = 0", true);
    }
  } else {
    bat.skip("dB-dy-cartan", "dB/dy^k via A_k", "g = 0", true);
    bat.skip("d-q2-over-B", "d(q^2/B)/dy^k", "g = 0", true);
    bat.skip("d-K-over-q", "d(K/q)/dy^n", "g = 0", true);
    bat.skip("d-XA", "d(X A_k)/dy^n", "g = 0", true);
  }
  return bat.take();
}

}  // namespace finsleroid
