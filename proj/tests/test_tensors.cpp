#include <gtest/gtest.h>

#include <cmath>

#include "finsleroid/identities.hpp"
#include "finsleroid/tensors.hpp"
#include "test_support.hpp"

using namespace finsleroid;
using finsleroid::fixtures::P1;
using finsleroid::fixtures::random_samples;
using finsleroid::fixtures::vec;

namespace {

struct AtPoint {
  PointData p;
  ScalarKernel k;
  FormInputs<double> s;
  TensorBundle t;
};

AtPoint at(const FieldSet& f, const Vec& x, const Vec& y) {
  AtPoint a;
  a.p = evaluate_point(f, x);
  a.k = eval_kernel(a.p, y);
  a.s = pd_inputs(a.p, a.k, y);
  a.t = tensor_bundle(a.s);
  return a;
}

std::vector<Scenario> pd_scenarios() {
  return {scenarios::s1(), scenarios::s2(), scenarios::s3(), scenarios::s23(), scenarios::s4()};
}

}  // namespace

// Reference digits from an independent 30-digit evaluation at S1, P1.
TEST(Tensors, FrozenCartanVectorAndDeterminantAtP1) {
  const AtPoint a = at(scenarios::s1().fields, Vec::Zero(3), P1());
  const CartanData c = cartan(a.s, a.t);
  EXPECT_NEAR(c.A_low(0), 0.38054650257253285, 1e-14);
  EXPECT_NEAR(c.A_low(1), -0.19027325128626643, 1e-14);
  EXPECT_NEAR(c.A_low(2), -0.19027325128626643, 1e-14);
  EXPECT_NEAR(c.normsq, 0.38055804160262384, 1e-14);
  EXPECT_NEAR(c.A_low.dot(c.A_up), c.normsq, 1e-14);
  EXPECT_NEAR(a.t.det / a.p.det_a, 0.27190072536767140, 1e-14);
  EXPECT_NEAR(a.t.g.determinant(), a.t.det, 1e-14);
}

TEST(Tensors, RepresentationsAgree) {
  for (const auto& sc : pd_scenarios()) {
    for (const auto& smp : random_samples(sc, 20, 21)) {
      const AtPoint a = at(sc.fields, smp.x, smp.y);
      const Mat gv = metric_tensor(a.s, Representation::V);
      const Mat gu = metric_tensor(a.s, Representation::U);
      EXPECT_LT(relative_residual(gv, gu), 1e-12);
      EXPECT_LT(relative_residual(covariant_y(a.s, Representation::V), covariant_y(a.s, Representation::U)), 1e-12);
      EXPECT_LT(relative_residual(inverse_metric(a.s, Representation::V), inverse_metric(a.s, Representation::U)), 1e-12);
      if (std::abs(a.k.b) > 1e-3) {
        EXPECT_LT(relative_residual(gv, metric_tensor(a.s, Representation::Z)), 1e-10);
      }
    }
  }
}

TEST(Tensors, EulerAndReciprocity) {
  for (const auto& sc : pd_scenarios()) {
    for (const auto& smp : random_samples(sc, 20, 22)) {
      const AtPoint a = at(sc.fields, smp.x, smp.y);
      const double K2 = a.k.K * a.k.K;
      const int n = a.p.dim;
      EXPECT_NEAR(smp.y.dot(a.t.g * smp.y), K2, 1e-12 * K2);
      EXPECT_LT(max_abs(Vec(a.t.g * smp.y - a.t.y_low)), 1e-12 * K2);
      EXPECT_LT(max_abs(Mat(a.t.g_inv * a.t.g - Mat::Identity(n, n))), 1e-10);
      EXPECT_LT(max_abs(Vec(a.t.h * smp.y)), 1e-12 * a.k.K);
      EXPECT_GT(symmetric_eigenvalues(a.t.g).minCoeff(), 0.0);
    }
  }
}

TEST(Tensors, CartanTensorMatchesNumericDerivative) {
  for (const auto& sc : pd_scenarios()) {
    for (const auto& smp : random_samples(sc, 10, 23)) {
      const CartanOracleResult r = cartan_oracle_check(evaluate_point(sc.fields, smp.x), smp.y);
      EXPECT_LT(r.residual / std::max(r.scale, 1e-3), 1e-6);
    }
  }
}

TEST(Tensors, CartanVanishesAtZeroCharge) {
  const AtPoint a = at(scenarios::s2().fields.with_charge(0.0), vec({0, 1, 0}), P1());
  const CartanData c = cartan(a.s, a.t);
  EXPECT_TRUE(c.zero_charge);
  EXPECT_EQ(max_abs(c.A), 0.0);
  EXPECT_LT(max_abs(Mat(a.t.g - a.p.a)), 1e-14);
}

TEST(Tensors, TinyChargeFallsBackToTheEForm) {
  const AtPoint a = at(scenarios::s1().fields.with_charge(1e-13), Vec::Zero(3), P1());
  const CartanData c = cartan(a.s, a.t);
  EXPECT_TRUE(c.used_e_form);
  EXPECT_FALSE(c.zero_charge);
  // Cartan tensor is linear in g to leading order: compare with g = 1e-8.
  const AtPoint b = at(scenarios::s1().fields.with_charge(1e-8), Vec::Zero(3), P1());
  const CartanData cb = cartan(b.s, b.t);
  EXPECT_FALSE(cb.used_e_form);
  Tensor3<double> scaled = c.A;
  for (auto& v : scaled.data()) v *= 1e5;
  EXPECT_LT(max_abs_diff(scaled, cb.A), 1e-6 * max_abs(cb.A));
}

TEST(Tensors, RegularityAcrossChargeAndNorm) {
  for (double g : {-1.9, -1.0, 0.0, 1.0, 1.9}) {
    for (double c : {0.1, 0.5, 0.9}) {
      const FieldSet f(Signature::PositiveDefinite, SymmetricField::constant(Mat::Identity(3, 3)),
                       CovectorField::constant(vec({c, 0, 0})), ScalarField::constant(3, g));
      Scenario sc = scenarios::s1();
      sc.fields = f;
      for (const auto& smp : random_samples(sc, 10, 24)) {
        const AtPoint a = at(f, smp.x, smp.y);
        EXPECT_GT(symmetric_eigenvalues(a.t.g).minCoeff(), 0.0) << "g=" << g << " c=" << c;
        EXPECT_GT(a.t.det, 0.0);
      }
    }
  }
}

TEST(Tensors, IdentityBatteryPassesOnEveryScenario) {
  for (const auto& sc : pd_scenarios()) {
    for (const auto& smp : random_samples(sc, 5, 25)) {
      const auto results = identity_battery(evaluate_point(sc.fields, smp.x), smp.y);
      EXPECT_EQ(results.size(), 73u);
      for (const auto& r : results) EXPECT_TRUE(r.pass()) << sc.id << " " << r.name << " residual " << r.residual;
    }
  }
}

TEST(Tensors, IdentityBatteryOnTheAxisPlane) {
  // b = 0 makes the w- and z-representations inapplicable; they are skipped.
  const auto results = identity_battery(evaluate_point(scenarios::s1().fields, Vec::Zero(3)), vec({0, 1, 0.5}));
  std::size_t skipped = 0;
  for (const auto& r : results) {
    EXPECT_TRUE(r.pass()) << r.name;
    if (!r.applicable) ++skipped;
  }
  EXPECT_GT(skipped, 0u);
}
