#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <functional>

#include "finsleroid/pseudo.hpp"
#include "test_support.hpp"

using namespace finsleroid;
using finsleroid::fixtures::random_samples;
using finsleroid::fixtures::vec;

namespace {

const Vec& P5() {
  static const Vec p = vec({1, 0.8, 0, 0});
  return p;
}

PointData origin(const FieldSet& f) { return evaluate_point(f, Vec::Zero(4)); }

Errc error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::SchemaError;
}

}  // namespace

// Reference digits from an independent 30-digit evaluation at
// a = diag(1, -1, -1, -1), b = (0.8, 0, 0, 0), g = 0.5, y = (1, 0.8, 0, 0).
TEST(Pseudo, FrozenValuesAtP5) {
  const PseudoKernel k = eval_pseudo_kernel(origin(scenarios::s5().fields), P5());
  EXPECT_NEAR(k.S2, 0.36, 1e-15);
  EXPECT_NEAR(k.b, 0.8, 1e-15);
  EXPECT_NEAR(k.q, 0.52915026221291812, 1e-15);
  EXPECT_NEAR(k.B, 0.14833989511483275, 1e-15);
  EXPECT_NEAR(k.h, 1.0307764064044151, 1e-15);
  EXPECT_NEAR(k.g_plus, 0.78077640640441514, 1e-15);
  EXPECT_NEAR(k.g_minus, -1.2807764064044151, 1e-15);
  EXPECT_NEAR(k.F, 0.50872233267507085, 1e-15);
  EXPECT_NEAR(k.F_sqrtB, 0.50872233267507085, 1e-15);
}

TEST(Pseudo, ScalarIdentitiesOnRandomSamples) {
  const Scenario sc = scenarios::s5();
  for (const auto& s : random_samples(sc, 100, 51)) {
    const PseudoKernel k = eval_pseudo_kernel(evaluate_point(sc.fields, s.x), s.y);
    EXPECT_LE(relative_residual(k.F, k.F_sqrtB), 1e-12);
    EXPECT_NEAR(k.h * k.h * k.b * k.b - k.L * k.L, k.B, 1e-12 * std::max(k.L * k.L, std::abs(k.B)));
    EXPECT_NEAR((k.b + k.g_plus * k.q) * (k.b + k.g_minus * k.q), k.B, 1e-12 * k.b * k.b);
    EXPECT_NEAR(0.5 * k.G_plus - 0.5 * k.G_minus, 1.0, 1e-15);
    EXPECT_NEAR(k.G_plus + k.G_minus, -k.G, 1e-15);
    EXPECT_GT(k.F, 0.0);
  }
}

TEST(Pseudo, HomogeneityAndReduction) {
  const Scenario sc = scenarios::s5();
  const FieldSet flat = sc.fields.with_charge(0.0);
  for (const auto& s : random_samples(sc, 30, 52)) {
    const PointData p = evaluate_point(sc.fields, s.x);
    const double F = pseudo_norm(p, s.y);
    for (double l : {0.5, 2.0, 3.7}) EXPECT_NEAR(pseudo_norm(p, l * s.y), l * F, 1e-12 * l * F);
    const PointData p0 = evaluate_point(flat, s.x);
    const PseudoKernel k0 = eval_pseudo_kernel(p0, s.y);
    EXPECT_NEAR(k0.F, std::sqrt(k0.S2), 1e-12 * k0.F);
    EXPECT_LT(relative_residual(pseudo_metric_numeric(p0, s.y).g, p0.a), 1e-7);
  }
}

TEST(Pseudo, LargeChargeStaysFinite) {
  for (double g : {-50.0, -5.0, 5.0, 50.0}) {
    const PointData p = origin(scenarios::s5().fields.with_charge(g));
    const PseudoKernel k = eval_pseudo_kernel(p, P5());
    EXPECT_TRUE(std::isfinite(k.F)) << g;
    EXPECT_GT(k.F, 0.0);
    EXPECT_LE(relative_residual(k.F, k.F_sqrtB), 1e-12);
  }
}

TEST(Pseudo, AdmissibleDomainGuard) {
  const PointData p = origin(scenarios::s5().fields);
  EXPECT_EQ(error_code([&] { (void)eval_pseudo_kernel(p, vec({-1, 0.5, 0, 0})); }), Errc::InadmissibleVector);
  EXPECT_EQ(error_code([&] { (void)eval_pseudo_kernel(p, vec({0.5, 1, 0, 0})); }), Errc::InadmissibleVector);
  EXPECT_EQ(error_code([&] { (void)eval_pseudo_kernel(p, vec({1, 0, 0, 0})); }), Errc::InadmissibleVector);
  EXPECT_EQ(error_code([&] { (void)eval_pseudo_kernel(p, Vec::Zero(4)); }), Errc::ZeroVector);
  EXPECT_EQ(error_code([&] { (void)eval_pseudo_kernel(evaluate_point(scenarios::s1().fields, Vec::Zero(3)), vec({1, 1, 1})); }),
            Errc::WrongSignature);
}

TEST(Pseudo, DualityAtP5) {
  const PointData p = origin(scenarios::s5().fields);
  const PseudoKernel k = eval_pseudo_kernel(p, P5());
  const PseudoMetric m = pseudo_metric_numeric(p, P5());
  const DualComponents g = duality_substitution(DualForm::MetricTensor, p, k, P5());
  const DualComponents y = duality_substitution(DualForm::CovariantY, p, k, P5());
  EXPECT_LT(relative_residual(g.matrix, m.g), 1e-5);
  EXPECT_LT(relative_residual(y.vector, m.y_low), 1e-6);
  EXPECT_NEAR(P5().dot(g.matrix * P5()), k.F * k.F, 1e-12);
  EXPECT_EQ(m.positive_eigenvalues, 1);
  EXPECT_EQ(m.negative_eigenvalues, 3);
  const DualComponents gi = duality_substitution(DualForm::InverseMetric, p, k, P5());
  EXPECT_LT(max_abs(Mat(gi.matrix * g.matrix - Mat::Identity(4, 4))), 1e-12);
}

TEST(Pseudo, DualityOnRandomSamples) {
  const Scenario sc = scenarios::s5();
  for (const auto& s : random_samples(sc, 50, 53)) {
    const PointData p = evaluate_point(sc.fields, s.x);
    const PseudoKernel k = eval_pseudo_kernel(p, s.y);
    const PseudoMetric m = pseudo_metric_numeric(p, s.y);
    const DualComponents g = duality_substitution(DualForm::MetricTensor, p, k, s.y);
    EXPECT_LT(relative_residual(g.matrix, m.g), 1e-5);
    EXPECT_LT(g.max_imag, 1e-12);
    // Wherever the signature departs from (+,-,-,-) the closed form agrees.
    const Vec ev = symmetric_eigenvalues(g.matrix);
    EXPECT_EQ(static_cast<int>((ev.array() > 0.0).count()), m.positive_eigenvalues);
  }
}

TEST(Pseudo, SubstitutionKeepsEvenMonomialsReal) {
  const PointData p = origin(scenarios::s5().fields);
  const PseudoKernel k = eval_pseudo_kernel(p, P5());
  using C = std::complex<double>;
  const double gq = substitute_scalar(p, k, P5(), [](const FormInputs<C>& s) { return s.g * s.q; });
  EXPECT_NEAR(gq, -k.g * k.q, 1e-15);
  const double ratio = substitute_scalar(p, k, P5(), [](const FormInputs<C>& s) { return s.g / s.q; });
  EXPECT_NEAR(ratio, k.g / k.q, 1e-15);
  EXPECT_EQ(error_code([&] { (void)substitute_scalar(p, k, P5(), [](const FormInputs<C>& s) { return s.q * s.b; }); }),
            Errc::OddDegreeMonomial);
}

TEST(Pseudo, FormNames) {
  EXPECT_STREQ(to_string(DualForm::MetricTensor), "metric-tensor");
}

TEST(Pseudo, SamplerKeepsClearOfLightCone) {
  const Scenario sc = scenarios::s5();
  for (const auto& s : random_samples(sc, 200, 54)) {
    const PseudoKernel k = eval_pseudo_kernel(evaluate_point(sc.fields, s.x), s.y);
    EXPECT_GE(pseudo_regularity_margin(k, s.y), kTimeSpaceSampleMargin);
  }
}
