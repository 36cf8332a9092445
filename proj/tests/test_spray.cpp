#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "finsleroid/spray.hpp"
#include "test_support.hpp"

using namespace finsleroid;
using finsleroid::fixtures::P1;
using finsleroid::fixtures::random_samples;
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

std::vector<std::pair<Vec, Vec>> pairs(const std::vector<Sample>& s) {
  std::vector<std::pair<Vec, Vec>> out;
  for (const auto& v : s) out.emplace_back(v.x, v.y);
  return out;
}

void expect_close(const Vec& got, const Vec& want, double rel) {
  EXPECT_LT(max_abs(Vec(got - want)), rel * max_abs(want)) << "got " << got.transpose() << " want " << want.transpose();
}

}  // namespace

// Reference sprays from an independent 30-digit computation that builds
// g_ij as the Hessian of K^2/2 and contracts its x-derivatives into the
// Finslerian Christoffel symbols.
TEST(Spray, FrozenReferenceValues) {
  expect_close(spray_coefficients(scenarios::s2().fields, vec({0, 1, 0}), P1()),
               vec({0.0833182636145582191, -0.0660492438152297112, 0.0120132311647502664}), 1e-10);
  expect_close(spray_coefficients(scenarios::s3().fields, Vec::Zero(3), P1()),
               vec({0.0809431896266089414, -0.106276157977868540, -0.106276157977868540}), 1e-10);
  expect_close(spray_coefficients(scenarios::s23().fields, vec({0.1, 0.5, -0.3}), vec({1, 0.3, -0.7})),
               vec({0.0201766286535729313, -0.0492548339286009179, 0.0533132969182496673}), 1e-10);
}

TEST(Spray, DecompositionAtTheReferencePoints) {
  const SprayData s2 = spray_closed_form(scenarios::s2().fields, vec({0, 1, 0}), P1());
  expect_close(s2.drift, vec({0.00525578863458, 0.0120132311648, 0.0120132311648}), 1e-10);
  expect_close(s2.torsion, vec({0.07806247498, -0.07806247498, 0}), 1e-9);
  EXPECT_EQ(max_abs(s2.E), 0.0);
  EXPECT_EQ(max_abs(s2.riemann), 0.0);
  const SprayData s3 = spray_closed_form(scenarios::s3().fields, Vec::Zero(3), P1());
  EXPECT_EQ(max_abs(s3.drift), 0.0);
  EXPECT_EQ(max_abs(s3.torsion), 0.0);
  expect_close(s3.E, s3.G, 1e-15);
}

TEST(Spray, ChargeResponseFrozenValues) {
  EXPECT_NEAR(charge_response_M(scenarios::s1().fields, Vec::Zero(3), P1()), -0.453010929827085773, 1e-13);
  EXPECT_NEAR(charge_response_M(scenarios::s2().fields, vec({0, 1, 0}), P1()), -0.488863652827057210, 1e-13);
  EXPECT_NEAR(charge_response_M(scenarios::s23().fields, vec({0.1, 0.5, -0.3}), vec({1, 0.3, -0.7})),
              -0.329693132308037561, 1e-13);
}

TEST(Spray, ChargeResponseMatchesParameterDerivative) {
  for (const auto& smp : random_samples(scenarios::s23(), 40, 31)) {
    const ScalarKernel k = eval_kernel(scenarios::s23().fields, smp.x, smp.y);
    const auto num = charge_response_M_numeric(k);
    EXPECT_NEAR(charge_response_M(k), num.value, 1e-6 * std::max(1.0, std::abs(num.value)));
  }
}

TEST(Spray, ClosedFormMatchesChristoffelOracle) {
  for (const auto& sc : {scenarios::s2(), scenarios::s3(), scenarios::s23(), scenarios::s4()}) {
    for (const auto& smp : random_samples(sc, 15, 32)) {
      const Vec G = spray_coefficients(sc.fields, smp.x, smp.y);
      const auto o = spray_oracle(sc.fields, smp.x, smp.y);
      const double K = finsler_norm(sc.fields, smp.x, smp.y);
      EXPECT_LT(max_abs(Vec(G - o.value)) / std::max(max_abs(o.value), 1e-4 * K * K), 1e-5) << sc.id;
    }
  }
}

TEST(Spray, TermsVanishWhenTheirSourcesDo) {
  for (const auto& smp : random_samples(scenarios::s2(), 20, 33)) {
    EXPECT_EQ(max_abs(spray_closed_form(scenarios::s2().fields, smp.x, smp.y).E), 0.0);
  }
  for (const auto& sc : {scenarios::s3(), scenarios::s4()}) {
    for (const auto& smp : random_samples(sc, 20, 34)) {
      const SprayData sd = spray_closed_form(sc.fields, smp.x, smp.y);
      EXPECT_LT(max_abs(sd.drift) + max_abs(sd.torsion), 1e-14) << sc.id;
    }
  }
}

TEST(Spray, LiteralChargeGradientFormAgrees) {
  const FieldSet f = scenarios::s23().fields;
  for (const auto& smp : random_samples(scenarios::s23(), 30, 35)) {
    const PointData p = evaluate_point(f, smp.x);
    const ScalarKernel k = eval_kernel(p, smp.y);
    if (std::abs(k.g) < 0.1 || std::abs(k.b) < 1e-3) continue;
    const FormInputs<double> s = pd_inputs(p, k, smp.y);
    const TensorBundle t = tensor_bundle(s);
    const CartanData c = cartan(s, t);
    const double M = charge_response_M(k);
    const Vec safe = e_coefficients(p, k, smp.y, t.g_inv, M);
    const Vec literal = e_coefficients_literal(p, k, smp.y, t.g_inv, c.A_up, M);
    EXPECT_LT(relative_residual(safe, literal), 1e-10);
  }
  const PointData p0 = evaluate_point(f.with_charge(0.0), vec({0.1, 0.5, -0.3}));
  const ScalarKernel k0 = eval_kernel(p0, P1());
  EXPECT_EQ(error_code([&] { (void)e_coefficients_literal(p0, k0, P1(), p0.a_inv, Vec::Zero(3), 0.0); }),
            Errc::ConstraintViolation);
  EXPECT_TRUE(e_coefficients(f.with_charge(0.0), vec({0.1, 0.5, -0.3}), P1()).allFinite());
}

TEST(Spray, QuadraticHomogeneity) {
  const FieldSet f = scenarios::s23().fields;
  for (const auto& smp : random_samples(scenarios::s23(), 20, 36)) {
    const Vec G = spray_coefficients(f, smp.x, smp.y);
    for (double l : {0.5, 2.0, 3.7}) {
      EXPECT_LT(max_abs(Vec(spray_coefficients(f, smp.x, Vec(l * smp.y)) - l * l * G)), 1e-12 * l * l * max_abs(G) + 1e-15);
    }
  }
}

TEST(Berwald, ConstantChargeAndParallelAxisPass) {
  const BerwaldVerdict flat = berwald_check(scenarios::s1().fields, pairs(random_samples(scenarios::s1(), 20, 37)));
  EXPECT_TRUE(flat.pass) << flat.reason;
  EXPECT_LE(flat.max_residual, 1e-8);
  const BerwaldVerdict curved = berwald_check(scenarios::s4().fields, pairs(random_samples(scenarios::s4(), 20, 38)));
  EXPECT_TRUE(curved.pass) << curved.reason;
  EXPECT_LE(curved.max_residual, 1e-6);
  BerwaldOptions opt;
  opt.use_oracle = true;
  EXPECT_TRUE(berwald_check(scenarios::s4().fields, pairs(random_samples(scenarios::s4(), 10, 39)), opt).pass);
}

TEST(Berwald, VaryingAxisOrChargeFailWithWitness) {
  for (const auto& sc : {scenarios::s2(), scenarios::s3()}) {
    const auto samples = random_samples(sc, 20, 40);
    const BerwaldVerdict v = berwald_check(sc.fields, pairs(samples));
    EXPECT_FALSE(v.pass) << sc.id;
    EXPECT_GT(v.max_residual, 1e-3) << sc.id;
    EXPECT_DOUBLE_EQ(v.residuals[v.witness], v.max_residual);
  }
  EXPECT_FALSE(berwald_check(scenarios::s3().fields, pairs(random_samples(scenarios::s3(), 10, 41))).charge_constant);
  EXPECT_GT(berwald_check(scenarios::s2().fields, pairs(random_samples(scenarios::s2(), 10, 42))).max_nabla_b, 1e-3);
}

TEST(Berwald, NeedsTenSamples) {
  EXPECT_EQ(error_code([] { (void)berwald_check(scenarios::s1().fields, pairs(random_samples(scenarios::s1(), 9, 43))); }),
            Errc::SchemaError);
}

TEST(Geodesic, FlatSpaceGivesStraightLines) {
  const Vec x0 = vec({0, 0.5, 0}), y0 = P1();
  const auto traj = geodesic_integrate(scenarios::s1().fields, x0, y0, 1.0, 1e-2);
  ASSERT_EQ(traj.size(), 101u);
  for (const auto& s : traj) {
    EXPECT_LT(max_abs(Vec(s.x - (x0 + s.t * y0))), 1e-12);
    EXPECT_LT(max_abs(Vec(s.y - y0)), 1e-12);
    EXPECT_LE(s.residual, 1e-14);
  }
}

TEST(Geodesic, NormIsConserved) {
  const auto traj = geodesic_integrate(scenarios::s2().fields, vec({0, 0.5, 0}), P1(), 1.0, 1e-3);
  double drift = 0.0;
  for (const auto& s : traj) drift = std::max(drift, s.residual);
  EXPECT_LE(drift, 1e-6);
  EXPECT_NEAR(traj.back().t, 1.0, 1e-12);
}

TEST(Geodesic, FourthOrderConvergence) {
  auto end = [](double h) {
    const auto traj = geodesic_integrate(scenarios::s23().fields, vec({0, 0.5, 0}), P1(), 1.0, h);
    Vec v(6);
    v << traj.back().x, traj.back().y;
    return v;
  };
  const Vec e1 = end(0.1), e2 = end(0.05), e3 = end(0.025);
  const double ratio = max_abs(Vec(e1 - e2)) / max_abs(Vec(e2 - e3));
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Geodesic, LeavingTheDomainStopsTheIntegration) {
  // b = 0.5 + 0.4 x0 reaches c = 1 at x0 = 1.25, and the path heads there.
  const FieldSet f(Signature::PositiveDefinite, SymmetricField::constant(Mat::Identity(3, 3)),
                   CovectorField({ScalarField(Polynomial::constant(3, 0.5) + 0.4 * Polynomial::variable(3, 0)),
                                  ScalarField::constant(3, 0.0), ScalarField::constant(3, 0.0)}),
                   ScalarField::constant(3, 0.5));
  std::size_t seen = 0;
  try {
    integrate_geodesic(f, Vec::Zero(3), vec({1, 0.2, 0}), 3.0, 1e-2, [&](const GeodesicState&) { ++seen; });
    FAIL() << "integration did not stop";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LeftAdmissibleDomain);
    EXPECT_EQ(e.message().find("LeftAdmissibleDomain"), std::string::npos);
  }
  EXPECT_GT(seen, 10u);
}

TEST(Geodesic, RejectsBadSteps) {
  const FieldSet f = scenarios::s1().fields;
  EXPECT_EQ(error_code([&] { (void)geodesic_integrate(f, Vec::Zero(3), P1(), 1.0, 0.0); }), Errc::StepRejected);
  EXPECT_EQ(error_code([&] { (void)geodesic_integrate(f, Vec::Zero(3), P1(), 1.0, -1e-3); }), Errc::StepRejected);
  EXPECT_EQ(error_code([&] { (void)geodesic_integrate(f, Vec::Zero(3), P1(), std::nan(""), 1e-3); }), Errc::StepRejected);
}
