#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "finsleroid/error.hpp"
#include "finsleroid/fields.hpp"
#include "finsleroid/kernel.hpp"
#include "finsleroid/linalg.hpp"
#include "finsleroid/oracle.hpp"
#include "finsleroid/tensors.hpp"

namespace finsleroid {

/// M = 2 d(ln K)/dg at fixed (b, q), obtained by differentiating the
/// closed form of K term by term.
inline double charge_response_M(const ScalarKernel& k) {
  const double h3 = k.h * k.h * k.h;
  const double dangle = -0.5 / k.h + k.b * (0.5 * k.h * k.b + 0.25 * k.L * k.g / k.h) / k.B;
  return k.q * k.b / k.B - k.f / h3 - k.G * dangle;
}

inline double charge_response_M(const FieldSet& fields, const Vec& x, const Vec& y) {
  return charge_response_M(eval_kernel(fields, x, y));
}

/// Oracle for M: certified central differences of ln K in g.
inline oracle::Certified<double> charge_response_M_numeric(const ScalarKernel& k, oracle::DiffOptions opt = {}) {
  opt.scale_step = false;
  const double b = k.b, q = k.q;
  auto lnK = [b, q](double g) { return std::log(metric_function(b, q, g)); };
  auto d = oracle::param_derivative(lnK, k.g, -2.0, 2.0, opt);
  d.value *= 2.0;
  d.certificate *= 2.0;
  return d;
}

/// Spray coefficients and their split into drift, torsion, charge-gradient
/// and Riemannian parts.
struct SprayData {
  Vec G;
  Vec E;
  Vec drift;
  Vec torsion;
  Vec riemann;
  double M = 0.0;
};

inline Vec riemann_spray(const Tensor3<double>& gamma, const Vec& y) {
  const int n = gamma.dim();
  Vec r = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) {
      for (int c = 0; c < n; ++c) r(i) += gamma(i, a, c) * y(a) * y(c);
    }
  }
  return r;
}

/// Charge-gradient part of the spray. The middle term is written without the
/// removable 1/g, so the result is finite for g = 0.
inline Vec e_coefficients(const PointData& p, const ScalarKernel& k, const Vec& y, const Mat& g_inv, double M) {
  const double yg = p.g_grad.dot(y);
  const double K2 = k.K * k.K;
  return M * yg * y + (k.q * k.q / (k.B * k.nu)) * yg * (k.B * p.b_up - (k.b + k.g * k.q * k.c2) * y) -
         0.5 * M * K2 * (g_inv * p.g_grad);
}

/// Literal form K (2 b^2 w^2/(g B)) (yg) X A^i for the middle term; needs g != 0 and b != 0.
inline Vec e_coefficients_literal(const PointData& p, const ScalarKernel& k, const Vec& y, const Mat& g_inv,
                                  const Vec& A_up, double M) {
  if (k.g == 0.0) throw Error(Errc::ConstraintViolation, "literal charge-gradient form divides by g");
  if (k.b == 0.0) throw Error(Errc::AxisPlane, "literal charge-gradient form uses w = q/b");
  const double yg = p.g_grad.dot(y);
  const double K2 = k.K * k.K;
  return M * yg * y + k.K * (2.0 * k.b * k.b * k.w * k.w / (k.g * k.B)) * yg * k.X * A_up -
         0.5 * M * K2 * (g_inv * p.g_grad);
}

inline Vec e_coefficients(const FieldSet& fields, const Vec& x, const Vec& y) {
  const PointData p = evaluate_point(fields, x);
  const ScalarKernel k = eval_kernel(p, y);
  return e_coefficients(p, k, y, tensor_bundle(pd_inputs(p, k, y)).g_inv, charge_response_M(k));
}

inline SprayData spray_closed_form(const FieldSet& fields, const Vec& x, const Vec& y) {
  const PointData p = evaluate_point(fields, x);
  const ScalarKernel k = eval_kernel(p, y);
  const FormInputs<double> s = pd_inputs(p, k, y);
  const Mat g_inv = inverse_metric(s);

  const Mat nabla = covariant_derivative_b(fields, x);
  const FTensors ft = f_tensors(fields, x, y);
  const Tensor3<double> gamma = riemann_christoffel(fields, x);

  SprayData sd;
  sd.M = charge_response_M(k);
  sd.drift = (k.g / k.nu) * (y.dot(nabla * y) + k.g * k.q * p.b_up.dot(ft.f_low)) * s.v_up;
  sd.torsion = -k.g * k.q * ft.f_up;
  sd.E = e_coefficients(p, k, y, g_inv, sd.M);
  sd.riemann = riemann_spray(gamma, y);
  sd.G = sd.drift + sd.torsion + sd.E + sd.riemann;
  return sd;
}

inline Vec spray_coefficients(const FieldSet& fields, const Vec& x, const Vec& y) {
  return spray_closed_form(fields, x, y).G;
}

/// Brute-force spray: Finslerian Christoffel symbols from certified
/// x-differences of the closed-form metric tensor at fixed y, contracted
/// twice with y and raised with g^ij.
inline oracle::Certified<Vec> spray_oracle(const FieldSet& fields, const Vec& x, const Vec& y,
                                           oracle::DiffOptions opt = {1e-5, true, 1, 1e-6, 1e-9}) {
  const int n = fields.dim;
  auto flat_metric = [&fields, &y](const Vec& xx) {
    const PointData p = evaluate_point(fields, xx);
    return Vec(metric_tensor(pd_inputs(p, eval_kernel(p, y), y)).reshaped());
  };
  const auto jac = oracle::jacobian(flat_metric, x, opt);
  auto dg = [&](int i, int j, int m) { return jac.value(j * n + i, m); };  // d g_ij / d x^m

  const PointData p = evaluate_point(fields, x);
  const Mat g_inv = inverse_metric(pd_inputs(p, eval_kernel(p, y), y));
  Vec lowered = Vec::Zero(n);
  for (int l = 0; l < n; ++l) {
    for (int a = 0; a < n; ++a) {
      for (int c = 0; c < n; ++c) lowered(l) += (dg(l, a, c) - 0.5 * dg(a, c, l)) * y(a) * y(c);
    }
  }
  oracle::Certified<Vec> out;
  out.value = g_inv * lowered;
  out.certificate = jac.certificate;  // of the metric x-derivatives
  out.level_certificates = jac.level_certificates;
  return out;
}

struct BerwaldOptions {
  double tolerance = 1e-6;
  bool use_oracle = false;
};

/// Outcome of the Berwald test. The residual at a sample is
/// max_i |G^i - a^i_nm y^n y^m| / (1 + max_i |a^i_nm y^n y^m|).
struct BerwaldVerdict {
  bool pass = false;
  double max_residual = 0.0;
  std::size_t witness = 0;
  bool charge_constant = false;
  double max_nabla_b = 0.0;
  std::vector<double> residuals;
  std::string reason;
};

inline BerwaldVerdict berwald_check(const FieldSet& fields, const std::vector<std::pair<Vec, Vec>>& samples,
                                    const BerwaldOptions& opt = {}) {
  if (samples.size() < 10) throw Error(Errc::SchemaError, "Berwald check needs at least 10 samples");
  BerwaldVerdict v;
  v.charge_constant = fields.g.is_constant();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [x, y] = samples[i];
    const Vec riem = riemann_spray(riemann_christoffel(fields, x), y);
    const Vec G = opt.use_oracle ? spray_oracle(fields, x, y).value : spray_coefficients(fields, x, y);
    const double r = max_abs(Vec(G - riem)) / (1.0 + max_abs(riem));
    v.residuals.push_back(r);
    if (r > v.max_residual || i == 0) {
      v.max_residual = r;
      v.witness = i;
    }
    v.max_nabla_b = std::max(v.max_nabla_b, max_abs(covariant_derivative_b(fields, x)));
  }
  const bool parallel_b = v.max_nabla_b <= opt.tolerance;
  v.pass = v.max_residual <= opt.tolerance && v.charge_constant && parallel_b;
  if (v.pass) {
    v.reason = "spray equals the Riemannian spray; charge constant and b parallel";
  } else if (v.max_residual > opt.tolerance) {
    v.reason = "spray differs from the Riemannian spray at sample " + std::to_string(v.witness);
  } else if (!v.charge_constant) {
    v.reason = "charge field is not constant";
  } else {
    v.reason = "b is not parallel";
  }
  return v;
}

struct GeodesicState {
  double t = 0.0;
  Vec x;
  Vec y;
  double K = 0.0;
  double residual = 0.0;  // |K(t) - K(0)| / K(0)
  double max_spray = 0.0;
};

/// Integrates x'' + G(x, x') = 0 with classical fixed-step RK4. Every
/// accepted state, including the initial one, is passed to observe before
/// the next step is attempted.
template <class Observer>
void integrate_geodesic(const FieldSet& fields, const Vec& x0, const Vec& y0, double t_end, double step,
                        Observer&& observe) {
  if (!(step > 0.0) || !std::isfinite(step) || !(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw Error(Errc::StepRejected, "step and end parameter must be positive and finite");
  }
  const int n = fields.dim;
  auto rhs = [&](const Vec& state) {
    try {
      Vec d(2 * n);
      d.head(n) = state.tail(n);
      d.tail(n) = -spray_coefficients(fields, state.head(n), state.tail(n));
      return d;
    } catch (const Error& e) {
      if (e.is_domain_error()) throw Error(Errc::LeftAdmissibleDomain, e.message());
      throw;
    }
  };
  auto norm = [&](const Vec& state) {
    try {
      return finsler_norm(fields, state.head(n), state.tail(n));
    } catch (const Error& e) {
      if (e.is_domain_error()) throw Error(Errc::LeftAdmissibleDomain, e.message());
      throw;
    }
  };

  Vec state(2 * n);
  state << x0, y0;
  const long steps = std::max(1L, std::lround(t_end / step));
  const double h = t_end / static_cast<double>(steps);
  const double K0 = norm(state);
  Vec k1 = rhs(state);
  observe(GeodesicState{0.0, x0, y0, K0, 0.0, max_abs(Vec(k1.tail(n)))});
  for (long i = 1; i <= steps; ++i) {
    const Vec k2 = rhs(state + 0.5 * h * k1);
    const Vec k3 = rhs(state + 0.5 * h * k2);
    const Vec k4 = rhs(state + h * k3);
    state += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!state.allFinite()) throw Error(Errc::StepRejected, "non-finite state after step " + std::to_string(i));
    const double K = norm(state);
    k1 = rhs(state);
    observe(GeodesicState{h * static_cast<double>(i), state.head(n), state.tail(n), K, std::abs(K - K0) / K0,
                          max_abs(Vec(k1.tail(n)))});
  }
}

inline std::vector<GeodesicState> geodesic_integrate(const FieldSet& fields, const Vec& x0, const Vec& y0, double t_end,
                                                     double step) {
  std::vector<GeodesicState> traj;
  integrate_geodesic(fields, x0, y0, t_end, step, [&traj](GeodesicState s) { traj.push_back(std::move(s)); });
  return traj;
}

}  // namespace finsleroid
