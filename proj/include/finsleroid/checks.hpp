#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "finsleroid/error.hpp"
#include "finsleroid/fields.hpp"
#include "finsleroid/identities.hpp"
#include "finsleroid/kernel.hpp"
#include "finsleroid/linalg.hpp"
#include "finsleroid/oracle.hpp"
#include "finsleroid/pseudo.hpp"
#include "finsleroid/report.hpp"
#include "finsleroid/scenario.hpp"
#include "finsleroid/spray.hpp"
#include "finsleroid/tensors.hpp"

namespace finsleroid {

/// Named tolerances with the place each value came from ("default",
/// "scenario" or "override").
class ToleranceSet {
 public:
  ToleranceSet() {
    for (const auto& [k, v] : defaults()) entries_[k] = {v, "default"};
  }

  static const std::map<std::string, double>& defaults() {
    static const std::map<std::string, double> d = {
        {"algebraic", 1e-9},        {"exact", 1e-10},          {"trace", 1e-8},
        {"representation", 1e-12},  {"derivative", 1e-6},      {"hessian", 1e-6},
        {"cartan_numeric", 1e-6},   {"homogeneity", 1e-10},    {"spray", 1e-5},
        {"charge_response", 1e-6},  {"e_form", 1e-10},         {"berwald", 1e-6},
        {"berwald_witness", 1e-3},  {"reduction_norm", 1e-12}, {"reduction_metric", 1e-10},
        {"pseudo_forms", 1e-12},    {"pseudo_identity", 1e-12}, {"pseudo_reduction", 1e-7},
        {"duality_metric", 1e-5},   {"duality_covector", 1e-6}, {"euler", 1e-8},
    };
    return d;
  }

  void apply(const std::map<std::string, double>& values, const std::string& source) {
    for (const auto& [k, v] : values) {
      auto it = entries_.find(k);
      if (it == entries_.end()) throw Error(Errc::SchemaError, "unknown tolerance \"" + k + "\"");
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::SchemaError, "tolerance " + k + " must be finite and >= 0");
      it->second = {v, source};
    }
  }

  double operator[](const std::string& key) const { return entries_.at(key).first; }
  const std::string& source(const std::string& key) const { return entries_.at(key).second; }

  BatteryTolerances battery() const {
    return {(*this)["algebraic"], (*this)["exact"], (*this)["trace"], (*this)["representation"],
            (*this)["derivative"]};
  }

 private:
  std::map<std::string, std::pair<double, std::string>> entries_;
};

struct SuiteOptions {
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> overrides;
  unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

inline const std::vector<double>& homogeneity_factors() {
  static const std::vector<double> f = {0.5, 2.0, 3.7};
  return f;
}

/// Appends records for one sample; evaluation errors become failed records.
class SampleRecorder {
 public:
  SampleRecorder(const ToleranceSet& tol, long sample, std::vector<CheckRecord>& out)
      : tol_(tol), sample_(sample), out_(out) {}

  void record(std::string name, std::string battery, std::string ref, double residual, const std::string& key,
              std::optional<bool> pass = std::nullopt) {
    CheckRecord c;
    c.name = std::move(name);
    c.battery = std::move(battery);
    c.ref = std::move(ref);
    c.sample = sample_;
    c.residual = residual;
    c.tolerance = key == "fixed" ? 0.0 : tol_[key];
    c.tolerance_source = key == "fixed" ? "fixed" : tol_.source(key);
    c.pass = pass.value_or(residual <= c.tolerance);
    out_.push_back(std::move(c));
  }

  void record_fixed(std::string name, std::string battery, std::string ref, double residual, double tolerance,
                    bool pass) {
    CheckRecord c;
    c.name = std::move(name);
    c.battery = std::move(battery);
    c.ref = std::move(ref);
    c.sample = sample_;
    c.residual = residual;
    c.tolerance = tolerance;
    c.tolerance_source = "fixed";
    c.pass = pass;
    out_.push_back(std::move(c));
  }

  /// Runs fn; an Error thrown inside is recorded as a failure of `name`.
  void guarded(const std::string& name, const std::string& battery, const std::string& ref, const std::string& key,
               const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      CheckRecord c;
      c.name = name;
      c.battery = battery;
      c.ref = ref;
      c.sample = sample_;
      c.residual = std::numeric_limits<double>::infinity();
      c.tolerance = key == "fixed" ? 0.0 : tol_[key];
      c.tolerance_source = key == "fixed" ? "fixed" : tol_.source(key);
      c.pass = false;
      c.note = e.what();
      out_.push_back(std::move(c));
    }
  }

 private:
  const ToleranceSet& tol_;
  long sample_;
  std::vector<CheckRecord>& out_;
};

inline void positive_definite_sample(const FieldSet& fields, const Sample& smp, long index, const ToleranceSet& tol,
                                     std::vector<CheckRecord>& out) {
  SampleRecorder rec(tol, index, out);
  const Vec& x = smp.x;
  const Vec& y = smp.y;
  const PointData p = evaluate_point(fields, x);

  for (const auto& r : identity_battery(p, y, tol.battery())) {
    CheckRecord c;
    c.name = r.name;
    c.battery = "identities";
    c.ref = r.formula;
    c.sample = index;
    c.residual = r.residual;
    c.tolerance = r.tolerance;
    c.tolerance_source = r.tolerance_key == "fixed" || r.tolerance_key.empty() ? "fixed" : tol.source(r.tolerance_key);
    c.applicable = r.applicable;
    c.pass = r.pass();
    c.note = r.note;
    out.push_back(std::move(c));
  }

  const ScalarKernel k = eval_kernel(p, y);
  const FormInputs<double> s = pd_inputs(p, k, y);
  const TensorBundle t = tensor_bundle(s);

  rec.guarded("hessian-certification", "tensors", "g_ij = (1/2) d^2 K^2 / dy^i dy^j", "hessian", [&] {
    auto half_K2 = [&p](const Vec& yy) {
      const double K = eval_kernel(p, yy).K;
      return 0.5 * K * K;
    };
    oracle::DiffOptions hopt;
    hopt.step = 1e-3;
    hopt.abs_tol = 1e-9 * k.K * k.K;
    const auto h = oracle::hessian(half_K2, y, hopt);
    rec.record("hessian-certification", "tensors", "g_ij = (1/2) d^2 K^2 / dy^i dy^j",
               relative_residual(h.value, t.g), "hessian");
  });

  rec.guarded("cartan-numeric", "cartan", "A_ijk = (K/2) dg_ij/dy^k", "cartan_numeric", [&] {
    const CartanOracleResult c = cartan_oracle_check(p, y);
    rec.record("cartan-numeric", "cartan", "A_ijk = (K/2) dg_ij/dy^k", c.residual / std::max(c.scale, 1e-3),
               "cartan_numeric");
  });

  {
    const Vec ev = symmetric_eigenvalues(t.g);
    const double lmin = ev.minCoeff();
    rec.record_fixed("regularity", "tensors", "g_ij positive definite, det g > 0",
                     std::max(0.0, -lmin / ev.cwiseAbs().maxCoeff()), 0.0, lmin > 0.0 && t.det > 0.0);
  }

  {
    const PointData p0 = evaluate_point(fields.with_charge(0.0), x);
    const ScalarKernel k0 = eval_kernel(p0, y);
    rec.record("reduction-norm", "kernel", "K = S at g = 0", relative_residual(k0.K, k0.S), "reduction_norm");
    rec.record("reduction-metric", "tensors", "g_ij = a_ij at g = 0",
               max_abs(Mat(metric_tensor(pd_inputs(p0, k0, y)) - p0.a)), "reduction_metric");
  }

  rec.guarded("homogeneity", "kernel", "K(ly) = l K, g_ij(ly) = g_ij, G(ly) = l^2 G", "homogeneity", [&] {
    const Vec G = spray_coefficients(fields, x, y);
    double res = 0.0;
    for (double l : homogeneity_factors()) {
      const Vec ly = l * y;
      const ScalarKernel kl = eval_kernel(p, ly);
      res = std::max(res, relative_residual(kl.K, l * k.K));
      res = std::max(res, relative_residual(metric_tensor(pd_inputs(p, kl, ly)), t.g));
      res = std::max(res, relative_residual(spray_coefficients(fields, x, ly), Vec(l * l * G), 1e-300 + 1e-12 * k.K * k.K));
    }
    rec.record("homogeneity", "kernel", "K(ly) = l K, g_ij(ly) = g_ij, G(ly) = l^2 G", res, "homogeneity");
  });

  rec.guarded("charge-response", "spray", "M = 2 d(ln K)/dg", "charge_response", [&] {
    if (std::abs(k.g) + 1e-5 * (1.0 + std::abs(k.g)) * 1.01 >= 2.0) return;
    const double num = charge_response_M_numeric(k).value;
    rec.record("charge-response", "spray", "M = 2 d(ln K)/dg", relative_residual(charge_response_M(k), num, 1e-3),
               "charge_response");
  });

  const SprayData sd = spray_closed_form(fields, x, y);
  if (std::abs(k.g) >= 0.1 && std::abs(k.b) > 1e-12 * k.S) {
    const CartanData cd = cartan(s, t);
    const Vec lit = e_coefficients_literal(p, k, y, t.g_inv, cd.A_up, sd.M);
    rec.record("e-literal-form", "spray", "E^i: K(2b^2w^2/(gB))(yg)XA^i middle term = safe form",
               relative_residual(lit, sd.E, 1e-12 * k.K * k.K), "e_form");
  }

  rec.guarded("spray-oracle", "spray", "G^i closed form = g^il(d_m g_ln - (1/2) d_l g_nm) y^n y^m", "spray", [&] {
    const auto o = spray_oracle(fields, x, y);
    rec.record("spray-oracle", "spray", "G^i closed form = g^il(d_m g_ln - (1/2) d_l g_nm) y^n y^m",
               relative_residual(sd.G, o.value, 1e-4 * k.K * k.K), "spray");
  });
}

inline void time_space_sample(const FieldSet& fields, const Sample& smp, long index, const ToleranceSet& tol,
                              std::vector<CheckRecord>& out, std::vector<std::string>& warnings) {
  SampleRecorder rec(tol, index, out);
  const Vec& x = smp.x;
  const Vec& y = smp.y;
  const PointData p = evaluate_point(fields, x);
  const PseudoKernel k = eval_pseudo_kernel(p, y);
  const std::string bat = "pseudo";

  rec.record("F-forms", bat, "F = |b+g_-q|^(G_+/2) |b+g_+q|^(-G_-/2) = sqrt|B| J",
             relative_residual(k.F, k.F_sqrtB), "pseudo_forms");
  rec.record("L-identity", bat, "h^2 b^2 - L^2 = B with L = q + (g/2) b",
             std::abs(k.h * k.h * k.b * k.b - k.L * k.L - k.B) / std::max({k.L * k.L, k.h * k.h * k.b * k.b, std::abs(k.B)}),
             "pseudo_identity");
  rec.record("B-factorization", bat, "(b+g_+q)(b+g_-q) = B",
             relative_residual((k.b + k.g_plus * k.q) * (k.b + k.g_minus * k.q), k.B, k.b * k.b), "pseudo_identity");
  rec.record("charge-bookkeeping", bat, "G_+/2 - G_-/2 = 1, G_+ + G_- = -G",
             std::abs(0.5 * k.G_plus - 0.5 * k.G_minus - 1.0) + std::abs(k.G_plus + k.G_minus + k.G),
             "pseudo_identity");
  rec.record_fixed("F-positive", bat, "F > 0", k.F > 0.0 ? 0.0 : 1.0, 0.0, k.F > 0.0);

  {
    double res = 0.0;
    for (double l : homogeneity_factors()) res = std::max(res, relative_residual(pseudo_norm(p, l * y), l * k.F));
    rec.record("F-homogeneity", bat, "F(ly) = l F for l > 0", res, "homogeneity");
  }

  const PointData p0 = evaluate_point(fields.with_charge(0.0), x);
  rec.record("reduction-norm", bat, "F = S at g = 0", relative_residual(pseudo_norm(p0, y), std::sqrt(k.S2)),
             "reduction_norm");
  rec.guarded("reduction-metric", bat, "numeric g_ij = a_ij at g = 0", "pseudo_reduction", [&] {
    const PseudoMetric m0 = pseudo_metric_numeric(p0, y);
    rec.record("reduction-metric", bat, "numeric g_ij = a_ij at g = 0", relative_residual(m0.g, p0.a),
               "pseudo_reduction");
  });

  rec.guarded("duality", bat, "g -> ig, q -> iq applied to the positive-definite closed forms", "duality_metric", [&] {
    const PseudoMetric m = pseudo_metric_numeric(p, y);
    const DualComponents dy = duality_substitution(DualForm::CovariantY, p, k, y);
    const DualComponents dg = duality_substitution(DualForm::MetricTensor, p, k, y);
    const DualComponents di = duality_substitution(DualForm::InverseMetric, p, k, y);
    const DualComponents da = duality_substitution(DualForm::CartanVector, p, k, y);
    const DualComponents dt = duality_substitution(DualForm::CartanTensor, p, k, y);
    const double F2 = k.F * k.F;
    const int n = p.dim;

    rec.record("duality-covector", bat, "substituted y_i = (1/2) dF^2/dy^i", relative_residual(dy.vector, m.y_low),
               "duality_covector");
    rec.record("duality-metric", bat, "substituted g_ij = (1/2) d^2 F^2/dy^i dy^j", relative_residual(dg.matrix, m.g),
               "duality_metric");
    rec.record("duality-inverse", bat, "substituted g^ij g_jk = delta",
               max_abs(Mat(di.matrix * dg.matrix - Mat::Identity(n, n))), "exact");
    rec.record("duality-euler", bat, "substituted g_ij y^i y^j = F^2", relative_residual(y.dot(dg.matrix * y), F2),
               "euler");
    rec.record("duality-euler-covector", bat, "substituted g_ij y^j = y_i",
               relative_residual(Vec(dg.matrix * y), dy.vector), "euler");
    Vec trace = Vec::Zero(n), null = Vec::Zero(n * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          trace(i) += di.matrix(j, l) * dt.tensor(i, j, l);
          null(i * n + j) += dt.tensor(i, j, l) * y(l);
        }
      }
    }
    const double Ascale = std::max(max_abs(da.vector), 1e-12);
    rec.record("duality-cartan-trace", bat, "substituted g^jk A_ijk = A_i", max_abs(Vec(trace - da.vector)) / Ascale,
               "trace");
    rec.record("duality-cartan-null", bat, "substituted A_ijk y^k = 0",
               max_abs(null) / (std::max(max_abs(dt.tensor), 1e-12) * max_abs(y)), "algebraic");
    double hres = 0.0;
    for (double l : homogeneity_factors()) {
      const Vec ly = l * y;
      const PseudoKernel kl = eval_pseudo_kernel(p, ly);
      hres = std::max(hres, relative_residual(duality_substitution(DualForm::MetricTensor, p, kl, ly).matrix, dg.matrix));
    }
    rec.record("duality-metric-homogeneity", bat, "substituted g_ij(ly) = g_ij(y)", hres, "homogeneity");
    if (m.positive_eigenvalues != 1) {
      warnings.push_back("sample " + std::to_string(index) + ": g_ij has " + std::to_string(m.positive_eigenvalues) +
                         " positive eigenvalues, not the time-space signature");
    }
  });
}

inline void berwald_record(const Scenario& sc, const std::vector<Sample>& samples, const ToleranceSet& tol,
                           std::vector<CheckRecord>& out) {
  if (samples.size() < 10) return;
  std::vector<std::pair<Vec, Vec>> pairs;
  for (const auto& s : samples) pairs.emplace_back(s.x, s.y);
  CheckRecord c;
  c.battery = "berwald";
  c.sample = -1;
  try {
    const BerwaldVerdict v = berwald_check(sc.fields, pairs, {tol["berwald"], false});
    const bool predicted = v.charge_constant && v.max_nabla_b <= tol["berwald"];
    c.residual = v.max_residual;
    if (predicted) {
      c.name = "berwald-sufficiency";
      c.ref = "g constant and nabla b = 0 imply G^i = a^i_nm y^n y^m";
      c.tolerance = tol["berwald"];
      c.tolerance_source = tol.source("berwald");
      c.pass = v.max_residual <= c.tolerance;
    } else {
      c.name = "berwald-necessity";
      c.ref = "g varying or nabla b != 0 gives some sample with G^i != a^i_nm y^n y^m";
      c.tolerance = tol["berwald_witness"];
      c.tolerance_source = tol.source("berwald_witness");
      c.pass = v.max_residual > c.tolerance;
      c.note = "passes when the worst sample exceeds the tolerance; witness sample " + std::to_string(v.witness);
    }
  } catch (const Error& e) {
    c.name = "berwald";
    c.ref = "Berwald criterion";
    c.residual = std::numeric_limits<double>::infinity();
    c.pass = false;
    c.note = e.what();
  }
  out.push_back(std::move(c));
}

/// Runs fn(i) for i in [0, count) on a few threads; results land in slot i,
/// so the output order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, const Fn& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Validates every sample, then runs the positive-definite or time-space
/// battery at each one. Input problems throw; numerical disagreements are
/// reported as failed records.
inline Report run_check_suite(const Scenario& sc, const SuiteOptions& opt = {}) {
  ToleranceSet tol;
  tol.apply(sc.tolerances, "scenario");
  tol.apply(opt.overrides, "override");

  const std::vector<Sample> samples = scenario_samples(sc, opt.seed);

  Report r;
  r.scenario = sc.id;
  r.tag = sc.signature() == Signature::TimeSpace ? "pseudo" : "positive-definite";
  r.seed = opt.seed.value_or(sc.random ? sc.random->seed : 0);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const auto& w : evaluate_point(sc.fields, samples[i].x).warnings) {
      r.warnings.push_back("sample " + std::to_string(i) + ": " + w);
    }
  }

  std::vector<std::vector<CheckRecord>> per_sample(samples.size());
  std::vector<std::vector<std::string>> per_sample_warnings(samples.size());
  detail::parallel_for(samples.size(), opt.threads, [&](std::size_t i) {
    if (sc.signature() == Signature::PositiveDefinite) {
      detail::positive_definite_sample(sc.fields, samples[i], static_cast<long>(i), tol, per_sample[i]);
    } else {
      detail::time_space_sample(sc.fields, samples[i], static_cast<long>(i), tol, per_sample[i],
                                per_sample_warnings[i]);
    }
  });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (auto& c : per_sample[i]) r.checks.push_back(std::move(c));
    for (auto& w : per_sample_warnings[i]) r.warnings.push_back(std::move(w));
  }
  if (sc.signature() == Signature::PositiveDefinite) detail::berwald_record(sc, samples, tol, r.checks);
  return r;
}

}  // namespace finsleroid
