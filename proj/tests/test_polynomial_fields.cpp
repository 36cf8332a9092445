#include <gtest/gtest.h>

#include <cmath>
#include <span>
#include <stdexcept>

#include "finsleroid/fields.hpp"
#include "finsleroid/oracle.hpp"
#include "test_support.hpp"

using namespace finsleroid;
using finsleroid::fixtures::vec;

namespace {

double eval(const Polynomial& p, const Vec& x) { return p(std::span<const double>(x.data(), x.size())); }

Polynomial sample_poly() {
  // 1 + 2 x0 x1^2 - 0.5 x2^3 + x0^2 x2
  Polynomial p(3);
  p.add_term(1.0, {0, 0, 0});
  p.add_term(2.0, {1, 2, 0});
  p.add_term(-0.5, {0, 0, 3});
  p.add_term(1.0, {2, 0, 1});
  return p;
}

}  // namespace

TEST(Polynomial, EvaluatesTermsAndArithmetic) {
  const Polynomial p = sample_poly();
  const Vec x = vec({0.5, -1.0, 2.0});
  EXPECT_NEAR(eval(p, x), 1.0 + 2.0 * 0.5 * 1.0 - 0.5 * 8.0 + 0.25 * 2.0, 1e-15);
  const Polynomial q = Polynomial::variable(3, 1) * Polynomial::variable(3, 1) + Polynomial::constant(3, 3.0);
  EXPECT_NEAR(eval(p * q, x), eval(p, x) * 4.0, 1e-14);
  EXPECT_NEAR(eval(p - p, x), 0.0, 0.0);
  EXPECT_EQ((p - p).terms().size(), 0u);
  EXPECT_EQ(p.degree(), 3);
  EXPECT_TRUE(Polynomial::constant(3, 2.0).is_constant());
  EXPECT_FALSE(p.is_constant());
}

TEST(Polynomial, ExactDerivativeMatchesCentralDifferences) {
  const Polynomial p = sample_poly();
  SampleRng rng(11);
  for (int s = 0; s < 50; ++s) {
    const Vec x = rng.in_box(Box(3, {-1.0, 1.0}));
    const auto num = oracle::gradient([&](const Vec& v) { return eval(p, v); }, x);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(eval(p.derivative(k), x), num.value(k), 1e-8);
  }
}

TEST(Polynomial, ComposeSubstitutesPolynomials) {
  const Polynomial p = sample_poly();
  std::vector<Polynomial> subs = {Polynomial::variable(3, 0) + 0.05 * Polynomial::variable(3, 1) * Polynomial::variable(3, 1),
                                  Polynomial::variable(3, 1), Polynomial::variable(3, 2)};
  const Vec x = vec({0.3, -0.7, 0.2});
  const Vec z = vec({0.3 + 0.05 * 0.49, -0.7, 0.2});
  EXPECT_NEAR(eval(p.compose(subs), x), eval(p, z), 1e-14);
}

TEST(Polynomial, RejectsMismatchedVariableCounts) {
  EXPECT_THROW(Polynomial(3) + Polynomial(2), std::invalid_argument);
  Polynomial p(3);
  EXPECT_THROW(p.add_term(1.0, {1, 0}), Error);
}

TEST(Fields, RejectsAsymmetricMetric) {
  std::vector<ScalarField> e;
  for (int i = 0; i < 4; ++i) e.push_back(ScalarField::constant(2, i == 0 || i == 3 ? 1.0 : 0.0));
  e[1] = ScalarField::constant(2, 0.1);
  try {
    SymmetricField f(2, e);
    FAIL() << "asymmetric field accepted";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::SchemaError);
  }
}

TEST(Fields, ChristoffelSymbolsOfAPolarLikeMetric) {
  // a = diag(1, (1 + 0.1 x0)^2, 1): a^1_01 = 0.1 / (1 + 0.1 x0), a^0_11 = -0.1 (1 + 0.1 x0).
  const int n = 3;
  const Polynomial r = Polynomial::constant(n, 1.0) + 0.1 * Polynomial::variable(n, 0);
  std::vector<ScalarField> e;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        e.push_back(ScalarField::constant(n, 0.0));
      } else {
        e.emplace_back(i == 1 ? r * r : Polynomial::constant(n, 1.0));
      }
    }
  }
  const FieldSet f(Signature::PositiveDefinite, SymmetricField(n, e), CovectorField::constant(vec({0.5, 0, 0})),
                   ScalarField::constant(n, 0.3));
  const Vec x = vec({0.5, 0.2, -0.1});
  const auto gamma = riemann_christoffel(f, x);
  EXPECT_NEAR(gamma(1, 0, 1), 0.1 / 1.05, 1e-14);
  EXPECT_NEAR(gamma(0, 1, 1), -0.1 * 1.05, 1e-14);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) EXPECT_DOUBLE_EQ(gamma(k, i, j), gamma(k, j, i));
    }
  }
}

TEST(Fields, CovariantDerivativeAndCurlOfVaryingB) {
  const FieldSet f = scenarios::s2().fields;
  const Vec x = vec({0, 1, 0});
  const Mat nabla = covariant_derivative_b(f, x);
  EXPECT_NEAR(nabla(1, 0), 0.1, 1e-15);
  EXPECT_NEAR(max_abs(nabla) - 0.1, 0.0, 1e-15);
  const FTensors t = f_tensors(f, x, fixtures::P1());
  EXPECT_NEAR(t.f(1, 0), 0.1, 1e-15);
  EXPECT_NEAR(t.f(0, 1), -0.1, 1e-15);
  EXPECT_NEAR(t.f_low(0), -0.1, 1e-15);
  EXPECT_NEAR(t.f_low(1), 0.1, 1e-15);
}

TEST(Fields, ChargeGradient) {
  const ChargeGradient cg = charge_gradient(scenarios::s3().fields, Vec::Zero(3), fixtures::P1());
  EXPECT_NEAR(cg.g_h(0), 0.1, 1e-15);
  EXPECT_NEAR(cg.g_h(1), 0.0, 0.0);
  EXPECT_NEAR(cg.yg, 0.1, 1e-15);
}

TEST(Fields, ParallelBInCurvilinearCoordinates) {
  const FieldSet f = scenarios::s4().fields;
  SampleRng rng(4);
  for (int s = 0; s < 20; ++s) EXPECT_LT(max_abs(covariant_derivative_b(f, rng.in_box(Box(3, {-1.0, 1.0})))), 1e-14);
}

TEST(Fields, PointValidation) {
  auto fields = [](double b0, double g, Mat a) {
    return FieldSet(Signature::PositiveDefinite, SymmetricField::constant(a), CovectorField::constant(vec({b0, 0, 0})),
                    ScalarField::constant(3, g));
  };
  const Mat id = Mat::Identity(3, 3);
  auto code = [](const FieldSet& f) {
    try {
      (void)evaluate_point(f, Vec::Zero(3));
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::SchemaError;
  };
  EXPECT_EQ(code(fields(1.2, 0.5, id)), Errc::NormOutOfRange);
  EXPECT_EQ(code(fields(1.0, 0.5, id)), Errc::NormOutOfRange);
  EXPECT_EQ(code(fields(0.0, 0.5, id)), Errc::NormOutOfRange);
  EXPECT_EQ(code(fields(0.8, 2.0, id)), Errc::ConstraintViolation);
  EXPECT_EQ(code(fields(0.8, -2.5, id)), Errc::ConstraintViolation);
  Mat neg = id;
  neg(2, 2) = -1.0;
  EXPECT_EQ(code(fields(0.8, 0.5, neg)), Errc::NotPositiveDefinite);
  Mat sing = id;
  sing(2, 2) = 0.0;
  EXPECT_EQ(code(fields(0.8, 0.5, sing)), Errc::SingularMetric);
  EXPECT_EQ(evaluate_point(fields(0.8, 0.5, id), Vec::Zero(3)).c, 0.8);
}

TEST(Fields, TimeSpaceValidation) {
  Mat a = Mat::Identity(4, 4);
  a(1, 1) = a(2, 2) = a(3, 3) = -1.0;
  const FieldSet sr(Signature::TimeSpace, SymmetricField::constant(a), CovectorField::constant(vec({1.5, 0, 0, 0})),
                    ScalarField::constant(4, 5.0));
  const PointData p = evaluate_point(sr, Vec::Zero(4));
  EXPECT_EQ(p.warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(p.g, 5.0);
  try {
    (void)evaluate_point(FieldSet(Signature::TimeSpace, SymmetricField::constant(Mat::Identity(4, 4)),
                                  CovectorField::constant(vec({0.5, 0, 0, 0})), ScalarField::constant(4, 0.5)),
                         Vec::Zero(4));
    FAIL() << "definite metric accepted for a time-space field set";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::WrongSignature);
  }
}
