#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "finsleroid/error.hpp"
#include "finsleroid/linalg.hpp"

namespace finsleroid::oracle {

/// Settings for one certified differentiation. The step used along
/// coordinate i is step * (1 + |x_i|) when scale_step is set; every
/// Richardson level halves it.
struct DiffOptions {
  double step = 1e-5;
  bool scale_step = true;
  int levels = 2;
  double rel_tol = 1e-6;
  double abs_tol = 1e-12;
};

template <class V>
struct Certified {
  V value;
  double certificate = 0.0;
  std::vector<double> level_certificates;  // one per extrapolation level
};

namespace detail {

template <class F>
auto guarded(const F& f) {
  return [&f](const auto& arg) {
    try {
      return f(arg);
    } catch (const Error& e) {
      if (e.is_domain_error()) {
        throw Error(Errc::InadmissibleStencil, std::string("stencil point left the admissible domain (") + e.what() + ")");
      }
      throw;
    }
  };
}

/// Richardson table over h0, h0/2, ... for an estimator with an even error
/// expansion in h.
template <class Est>
Certified<Vec> richardson(const Est& est, double h0, const DiffOptions& opt) {
  const int levels = std::max(1, opt.levels);
  std::vector<std::vector<Vec>> t(static_cast<std::size_t>(levels) + 1);
  double h = h0;
  for (int j = 0; j <= levels; ++j, h *= 0.5) t[0].push_back(est(h));
  Certified<Vec> out;
  double factor = 1.0;
  for (int k = 1; k <= levels; ++k) {
    factor *= 4.0;
    const auto& prev = t[static_cast<std::size_t>(k) - 1];
    for (std::size_t j = 0; j + 1 < prev.size(); ++j) {
      t[static_cast<std::size_t>(k)].push_back((factor * prev[j + 1] - prev[j]) / (factor - 1.0));
    }
    out.level_certificates.push_back(max_abs(t[static_cast<std::size_t>(k)][0] - prev[1]));
  }
  out.value = t[static_cast<std::size_t>(levels)][0];
  out.certificate = out.level_certificates.back();
  const double bound = std::max(opt.rel_tol * max_abs(out.value), opt.abs_tol);
  if (!std::isfinite(out.certificate) || out.certificate > bound) {
    std::ostringstream os;
    os << "extrapolation did not converge: certificate " << out.certificate << " exceeds " << bound;
    throw Error(Errc::StepUnderflow, os.str());
  }
  return out;
}

inline Vec step_scales(const Vec& x, const DiffOptions& opt) {
  Vec s = Vec::Ones(x.size());
  if (opt.scale_step) s.array() += x.array().abs();
  return s;
}

}  // namespace detail

/// Derivative of a scalar function of one variable.
template <class F>
Certified<double> derivative(const F& f, double x, const DiffOptions& opt = {}) {
  const auto fg = detail::guarded(f);
  const double s = opt.scale_step ? 1.0 + std::abs(x) : 1.0;
  auto est = [&](double h) {
    Vec v(1);
    v(0) = (fg(x + h * s) - fg(x - h * s)) / (2.0 * h * s);
    return v;
  };
  const auto r = detail::richardson(est, opt.step, opt);
  return {r.value(0), r.certificate, r.level_certificates};
}

template <class F>
Certified<Vec> gradient(const F& f, const Vec& x, const DiffOptions& opt = {}) {
  const auto fg = detail::guarded(f);
  const Vec s = detail::step_scales(x, opt);
  auto est = [&](double h) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double hi = h * s(i);
      Vec xp = x, xm = x;
      xp(i) += hi;
      xm(i) -= hi;
      g(i) = (fg(xp) - fg(xm)) / (2.0 * hi);
    }
    return g;
  };
  return detail::richardson(est, opt.step, opt);
}

/// Defaults for second derivatives: the rounding error of the mixed
/// stencil grows like eps/h^2, so the base step is larger than for first
/// derivatives.
inline DiffOptions hessian_options() {
  DiffOptions opt;
  opt.step = 1e-3;
  return opt;
}

/// Symmetric Hessian from the four-point mixed stencil.
template <class F>
Certified<Mat> hessian(const F& f, const Vec& x, const DiffOptions& opt = hessian_options()) {
  const auto fg = detail::guarded(f);
  const Vec s = detail::step_scales(x, opt);
  const Eigen::Index n = x.size();
  auto est = [&](double h) {
    Vec flat(n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        const double hi = h * s(i), hj = h * s(j);
        auto at = [&](double si, double sj) {
          Vec p = x;
          p(i) += si * hi;
          p(j) += sj * hj;
          return fg(p);
        };
        const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
        flat(i * n + j) = v;
        flat(j * n + i) = v;
      }
    }
    return flat;
  };
  const auto r = detail::richardson(est, opt.step, opt);
  return {r.value.reshaped(n, n), r.certificate, r.level_certificates};
}

/// J(r, c) = d f_r / d x_c for a vector-valued f.
template <class F>
Certified<Mat> jacobian(const F& f, const Vec& x, const DiffOptions& opt = {}) {
  const auto fg = detail::guarded(f);
  const Vec s = detail::step_scales(x, opt);
  Eigen::Index rows = -1;
  auto est = [&](double h) {
    Mat j;
    for (Eigen::Index c = 0; c < x.size(); ++c) {
      const double hc = h * s(c);
      Vec xp = x, xm = x;
      xp(c) += hc;
      xm(c) -= hc;
      const Vec col = (fg(xp) - fg(xm)) / (2.0 * hc);
      if (j.size() == 0) j.resize(col.size(), x.size());
      j.col(c) = col;
    }
    rows = j.rows();
    return Vec(j.reshaped());
  };
  const auto r = detail::richardson(est, opt.step, opt);
  return {r.value.reshaped(rows, x.size()), r.certificate, r.level_certificates};
}

/// Runs `diff(opt)` (one of the differentiators above) at base steps
/// opt.step, opt.step/4, ... and keeps the result with the smallest
/// certificate. Steps whose stencil leaves the domain are skipped. Throws
/// StepUnderflow when even the best certificate misses the tolerance.
template <class Diff>
auto search_step(const Diff& diff, const DiffOptions& opt, int tries = 8) -> decltype(diff(opt)) {
  DiffOptions trial = opt;
  trial.rel_tol = std::numeric_limits<double>::infinity();
  std::optional<decltype(diff(opt))> best;
  for (int t = 0; t < tries; ++t, trial.step *= 0.25) {
    try {
      auto r = diff(trial);
      if (std::isfinite(r.certificate) && (!best || r.certificate < best->certificate)) best = std::move(r);
    } catch (const Error& e) {
      if (e.code() != Errc::InadmissibleStencil && e.code() != Errc::StepUnderflow) throw;
    }
  }
  if (!best) throw Error(Errc::StepUnderflow, "no trial step kept the stencil admissible");
  const double bound = std::max(opt.rel_tol * max_abs(best->value), opt.abs_tol);
  if (best->certificate > bound) {
    std::ostringstream os;
    os << "best certificate " << best->certificate << " over " << tries << " steps exceeds " << bound;
    throw Error(Errc::StepUnderflow, os.str());
  }
  return *best;
}

/// Derivative with respect to a bounded parameter; the whole stencil must
/// stay strictly inside (lo, hi).
template <class F>
Certified<double> param_derivative(const F& f, double p, double lo, double hi, const DiffOptions& opt = {}) {
  const double reach = opt.step * (opt.scale_step ? 1.0 + std::abs(p) : 1.0);
  if (!(p - reach > lo && p + reach < hi)) {
    std::ostringstream os;
    os << "parameter " << p << " with step " << reach << " leaves (" << lo << ", " << hi << ")";
    throw Error(Errc::RangeClamp, os.str());
  }
  return derivative(f, p, opt);
}

}  // namespace finsleroid::oracle
