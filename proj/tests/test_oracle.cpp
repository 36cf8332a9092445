#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "finsleroid/kernel.hpp"
#include "finsleroid/oracle.hpp"
#include "finsleroid/tensors.hpp"
#include "test_support.hpp"

using namespace finsleroid;
using finsleroid::fixtures::P1;
using finsleroid::fixtures::vec;

namespace {

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

TEST(Oracle, GradientOfSquaredNorm) {
  const auto g = oracle::gradient([](const Vec& y) { return y.squaredNorm(); }, P1());
  EXPECT_LT(max_abs(Vec(g.value - vec({2, 2, 2}))), 1e-10);
  EXPECT_LE(g.certificate, 1e-12);
}

TEST(Oracle, HessianOfQuadraticIsExact) {
  Mat Q(3, 3);
  Q << 2, 0.5, -1, 0.5, 3, 0.25, -1, 0.25, 1;
  const auto h = oracle::hessian([&](const Vec& y) { return 0.5 * y.dot(Q * y); }, vec({0.3, -0.2, 0.9}));
  EXPECT_LT(max_abs(Mat(h.value - Q)), 1e-9);
}

TEST(Oracle, JacobianLayout) {
  auto f = [](const Vec& x) { return vec({x(0) * x(1), std::sin(x(2)), x(0) + 3 * x(2)}); };
  const Vec x = vec({0.5, 2.0, 0.1});
  const auto j = oracle::jacobian(f, x);
  Mat exact(3, 3);
  exact << 2.0, 0.5, 0, 0, 0, std::cos(0.1), 1, 0, 3;
  EXPECT_LT(max_abs(Mat(j.value - exact)), 1e-9);
}

TEST(Oracle, MetricFunctionGradientAndHessian) {
  const PointData p = evaluate_point(scenarios::s1().fields, Vec::Zero(3));
  const ScalarKernel k = eval_kernel(p, P1());
  const auto g = oracle::gradient([&](const Vec& y) { return eval_kernel(p, y).K; }, P1());
  const TensorBundle t = tensor_bundle(pd_inputs(p, k, P1()));
  EXPECT_LT(max_abs(Vec(g.value - t.y_low / k.K)), 1e-7);
  const auto h = oracle::hessian(
      [&](const Vec& y) {
        const double K = eval_kernel(p, y).K;
        return 0.5 * K * K;
      },
      P1());
  EXPECT_LT(max_abs(Mat(h.value - t.g)), 1e-6);
}

TEST(Oracle, HalvingTheStepShrinksTheCertificate) {
  auto f = [](double x) { return std::exp(std::sin(x)); };
  oracle::DiffOptions a;
  a.step = 0.1;
  a.rel_tol = a.abs_tol = 1.0;
  oracle::DiffOptions b = a;
  b.step = 0.05;
  const auto ra = oracle::derivative(f, 0.4, a);
  const auto rb = oracle::derivative(f, 0.4, b);
  EXPECT_GE(ra.certificate / rb.certificate, 4.0);
  EXPECT_NEAR(rb.value, std::cos(0.4) * std::exp(std::sin(0.4)), 1e-9);
}

TEST(Oracle, UnresolvableFunctionUnderflows) {
  // The kink at 1e-6 sits inside every stencil, so successive steps never agree.
  auto f = [](double x) { return std::abs(x - 1e-6); };
  EXPECT_EQ(error_code([&] { (void)oracle::derivative(f, 0.0); }), Errc::StepUnderflow);
}

TEST(Oracle, StencilLeavingTheDomain) {
  // b = (x0, 0, 0): c reaches 1 at x0 = 1, inside the stencil around 0.999999999.
  const FieldSet f(Signature::PositiveDefinite, SymmetricField::constant(Mat::Identity(3, 3)),
                   CovectorField({ScalarField(Polynomial::variable(3, 0)), ScalarField::constant(3, 0.0),
                                  ScalarField::constant(3, 0.0)}),
                   ScalarField::constant(3, 0.5));
  auto K_of_x0 = [&](double x0) { return finsler_norm(f, vec({x0, 0, 0}), P1()); };
  EXPECT_EQ(error_code([&] { (void)oracle::derivative(K_of_x0, 0.999999999); }), Errc::InadmissibleStencil);
  EXPECT_NO_THROW((void)oracle::derivative(K_of_x0, 0.5));
}

TEST(Oracle, ParameterDerivativeRespectsTheRange) {
  const PointData p = evaluate_point(scenarios::s1().fields, Vec::Zero(3));
  const ScalarKernel k = eval_kernel(p, P1());
  auto lnK = [&](double g) { return std::log(metric_function(k.b, k.q, g)); };
  EXPECT_EQ(error_code([&] { (void)oracle::param_derivative(lnK, 1.99999, -2.0, 2.0); }), Errc::RangeClamp);
  // d ln K / dg at g = 0, frozen from a 30-digit evaluation; M = 2 d ln K / dg.
  const auto d = oracle::param_derivative(lnK, 0.0, -2.0, 2.0);
  EXPECT_NEAR(2.0 * d.value, -0.68102130436250544, 1e-9);
}

TEST(Oracle, StepSearchKeepsTheBestCertificate) {
  auto f = [](const Vec& y) { return std::exp(y(0)) * std::cos(y(1)); };
  oracle::DiffOptions opt;
  opt.step = 0.5;
  const auto h = oracle::search_step([&](const oracle::DiffOptions& o) { return oracle::hessian(f, vec({0.2, 0.3}), o); },
                                     opt);
  Mat exact(2, 2);
  const double e = std::exp(0.2), c = std::cos(0.3), s = std::sin(0.3);
  exact << e * c, -e * s, -e * s, -e * c;
  EXPECT_LT(max_abs(Mat(h.value - exact)), 1e-8);
}
