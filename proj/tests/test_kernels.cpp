#include <doctest.h>

#include <cmath>

#include "levyhomog/errors.hpp"
#include "levyhomog/kernels.hpp"

using namespace levyhomog;

namespace {

TrigPoly2 xi_trig(double c0, double amp, int k, double phase) {
  std::vector<TrigTerm> t;
  if (c0 != 0.0) t.push_back(TrigTerm{c0, {0, 0}, {0, 0}, 0.0});
  if (amp != 0.0) t.push_back(TrigTerm{amp, {0, 0}, {k, 0}, phase});
  return TrigPoly2(std::move(t));
}

LevyKernel separable_1d(TrigPoly2 factor, bool symmetric = true,
                        ZProfile zp = {}, double C_K = 8.0, double gamma = 1.0,
                        int n_fast = 128) {
  return LevyKernel(KernelFamily::Separable, 1, TorusGrid(1, n_fast),
                    {KernelControlParams{std::move(factor), {}, {}}}, symmetric,
                    C_K, gamma, zp);
}

}  // namespace

TEST_CASE("evaluate: matrix family with identity in 1d") {
  KernelControlParams cp;
  cp.matrix[0] = TrigPoly2::constant(1.0);
  LevyKernel k(KernelFamily::MatrixAnisotropic, 1, TorusGrid(1, 64), {cp}, true,
               8.0, 1.0);
  CHECK(k.evaluate(0, Point{0.3, 0.0}, Point{0.5, 0.0}) == doctest::Approx(4.0));
  CHECK_THROWS_AS(k.evaluate(0, Point{0.0, 0.0}, Point{0.0, 0.0}),
                  ValidationError);
}

TEST_CASE("evaluate: half-space support") {
  KernelControlParams cp;
  cp.spatial = TrigPoly2::constant(1.0);
  LevyKernel k(KernelFamily::HalfSpace, 1, TorusGrid(1, 64), {cp}, false, 8.0,
               1.0, {}, 0);
  CHECK(k.evaluate(0, Point{0.1, 0.0}, Point{-0.4, 0.0}) == 0.0);
  CHECK(k.evaluate(0, Point{0.1, 0.0}, Point{0.4, 0.0}) ==
        doctest::Approx(1.0 / (0.4 * 0.4)));
}

TEST_CASE("evaluate: separable unit factor is the pure power law") {
  LevyKernel k1 = separable_1d(TrigPoly2::constant(1.0));
  CHECK(k1.evaluate(0, Point{0.7, 0.0}, Point{0.25, 0.0}) ==
        doctest::Approx(std::pow(0.25, -2.0)));
  KernelControlParams cp;
  cp.spatial = TrigPoly2::constant(1.0);
  LevyKernel k2(KernelFamily::Separable, 2, TorusGrid(2, 32), {cp}, true, 8.0, 1.0);
  const double r = std::hypot(0.3, 0.4);
  CHECK(k2.evaluate(0, Point{0.0, 0.0}, Point{0.3, 0.4}) ==
        doctest::Approx(std::pow(r, -3.0)));
}

TEST_CASE("kernel periodicity and symmetry in the fast variable") {
  LevyKernel k = separable_1d(xi_trig(2.0, 1.0, 1, 0.0));
  for (double xi : {0.13, 0.77}) {
    for (double z : {0.21, -1.3, 4.0}) {
      CHECK(k.evaluate(0, Point{xi, 0.0}, Point{z, 0.0}) ==
            doctest::Approx(k.evaluate(0, Point{xi + 3.0, 0.0}, Point{z, 0.0})));
      CHECK(k.evaluate(0, Point{xi, 0.0}, Point{z, 0.0}) ==
            doctest::Approx(k.evaluate(0, Point{xi, 0.0}, Point{-z, 0.0})));
    }
  }
}

TEST_CASE("Ks homogeneity of order d+1") {
  KernelControlParams cp;
  cp.matrix[0] = xi_trig(2.0, 0.5, 1, 0.25);
  LevyKernel k(KernelFamily::MatrixAnisotropic, 1, TorusGrid(1, 64), {cp}, true,
               8.0, 1.0);
  const Point xi{0.4, 0.0};
  for (double eps : {0.5, 0.25}) {
    for (double z : {0.8, -0.37}) {
      const double lhs = k.evaluate(0, xi, Point{eps * z, 0.0});
      const double rhs = std::pow(eps, -2.0) * k.evaluate(0, xi, Point{z, 0.0});
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("(K1) Levy bound on the pure power law") {
  // d=1, K=|z|^-2: integral of min(1,z^2) K = 2 + 2 = 4
  LevyKernel k = separable_1d(TrigPoly2::constant(1.0), true, {}, 4.2);
  AssumptionReport r = check_levy_bound(k);
  CHECK(r.measured == doctest::Approx(4.0).epsilon(0.02));
  CHECK(r.pass);

  LevyKernel zero = separable_1d(TrigPoly2::constant(0.0), true, {}, 4.2);
  AssumptionReport rz = check_levy_bound(zero);
  CHECK(rz.measured == doctest::Approx(0.0));
  CHECK(rz.pass);

  const double scale = 10.0 * 4.2 / 4.0;
  LevyKernel big = separable_1d(TrigPoly2::constant(scale), true, {}, 4.2);
  AssumptionReport rb = check_levy_bound(big);
  CHECK(rb.measured == doctest::Approx(scale * 4.0).epsilon(0.02));
  CHECK_FALSE(rb.pass);
}

TEST_CASE("(K2) cone ellipticity in 1d") {
  // the cone is the whole interval; integral of z^2 |z|^-2 over (-rho,rho) = 2 rho
  LevyKernel k = separable_1d(TrigPoly2::constant(1.0), true, {}, 1.9);
  for (double rho : {0.25, 1.0}) {
    AssumptionReport r = check_cone_ellipticity(k, Point{1.0, 0.0}, 0.5, rho);
    CHECK(r.measured == doctest::Approx(2.0 * rho).epsilon(0.02));
    CHECK(r.pass);
  }
  LevyKernel zero = separable_1d(TrigPoly2::constant(0.0), true, {}, 1.9);
  CHECK_FALSE(check_cone_ellipticity(zero, Point{1.0, 0.0}, 0.5, 0.5).pass);

  KernelControlParams cp;
  cp.spatial = TrigPoly2::constant(1.0);
  LevyKernel half(KernelFamily::HalfSpace, 1, TorusGrid(1, 64), {cp}, false, 0.9,
                  1.0, {}, 0);
  AssumptionReport rh = check_cone_ellipticity(half, Point{1.0, 0.0}, 0.5, 0.5);
  CHECK(rh.measured == doctest::Approx(0.5).epsilon(0.02));
  CHECK(rh.pass);
}

TEST_CASE("(K3) Holder continuity in xi") {
  LevyKernel k = separable_1d(xi_trig(2.0, 1.0, 1, -0.25), true, {}, 30.0, 1.0);
  SUBCASE("coincident points") {
    AssumptionReport r = check_holder_in_xi(k, Point{0.3, 0.0}, Point{0.3, 0.0}, 0.25);
    CHECK(r.pass);
    for (double d : r.details) CHECK(d == doctest::Approx(0.0));
  }
  SUBCASE("factor difference pulls out of the ball integral") {
    const Point xi1{0.1, 0.0}, xi2{0.35, 0.0};
    const double dk = std::abs(std::sin(2 * M_PI * 0.1) - std::sin(2 * M_PI * 0.35));
    const double rho = 0.25;
    AssumptionReport r = check_holder_in_xi(k, xi1, xi2, rho);
    CHECK(r.details[0] == doctest::Approx(dk * 2.0 * rho).epsilon(0.02));
    CHECK(r.pass);
  }
  SUBCASE("xi-independent kernels have zero difference") {
    LevyKernel ki = separable_1d(TrigPoly2::constant(1.5), true, {}, 1.0, 1.0);
    AssumptionReport r = check_holder_in_xi(ki, Point{0.0, 0.0}, Point{0.4, 0.0}, 0.1);
    CHECK(r.pass);
    for (double d : r.details) CHECK(d == doctest::Approx(0.0));
  }
}

TEST_CASE("(Kns) modulus integrability") {
  SUBCASE("z-independent factor") {
    LevyKernel k = separable_1d(xi_trig(2.0, 0.5, 1, 0.0), false, {}, 2.0);
    AssumptionReport r = check_modulus_integrability(k);
    CHECK(r.measured == doctest::Approx(0.0));
    CHECK(r.pass);
  }
  SUBCASE("k = 1 + |z| integrates to 1") {
    ZProfile zp{ZProfile::Type::Abs, 1.0, 0};
    LevyKernel k = separable_1d(TrigPoly2::constant(1.0), false, zp, 1.1);
    AssumptionReport r = check_modulus_integrability(k);
    CHECK(r.measured == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.pass);
  }
  SUBCASE("log-singular factor fails a small declared constant") {
    ZProfile zp{ZProfile::Type::LogSingular, 1.0, 0};
    LevyKernel k = separable_1d(TrigPoly2::constant(5.0), false, zp, 2.0);
    AssumptionReport r = check_modulus_integrability(k);
    CHECK(r.measured > 2.0);
    CHECK_FALSE(r.pass);
  }
  SUBCASE("symmetric family is a domain error") {
    LevyKernel k = separable_1d(TrigPoly2::constant(1.0), true);
    CHECK_THROWS_AS(check_modulus_integrability(k), ValidationError);
  }
}

TEST_CASE("drift correction b_K") {
  SUBCASE("even factors give a zero vector") {
    ZProfile zp{ZProfile::Type::EvenBall, 0.8, 0};
    LevyKernel k = separable_1d(xi_trig(2.0, 0.5, 1, 0.0), false, zp);
    DriftCorrection bk = drift_correction(k, 0, Point{0.37, 0.0});
    CHECK(std::abs(bk.value[0]) < 1e-10);
  }
  SUBCASE("k = 1 + z on B gives 2") {
    ZProfile zp{ZProfile::Type::LinearBall, 1.0, 0};
    LevyKernel k = separable_1d(TrigPoly2::constant(2.0), false, zp);
    DriftCorrection bk = drift_correction(k, 0, Point{0.0, 0.0});
    CHECK(bk.value[0] == doctest::Approx(2.0).epsilon(0.01));
  }
  SUBCASE("constant-in-z factor gives zero") {
    LevyKernel k = separable_1d(xi_trig(3.0, 1.0, 2, 0.3), false, {});
    DriftCorrection bk = drift_correction(k, 0, Point{0.21, 0.0});
    CHECK(std::abs(bk.value[0]) < 1e-12);
  }
  SUBCASE("linearity in the factor increment") {
    ZProfile zp1{ZProfile::Type::LinearBall, 0.7, 0};
    ZProfile zp2{ZProfile::Type::LinearBall, 1.4, 0};
    LevyKernel k1 = separable_1d(TrigPoly2::constant(2.0), false, zp1);
    LevyKernel k2 = separable_1d(TrigPoly2::constant(2.0), false, zp2);
    const double b1 = drift_correction(k1, 0, Point{0.0, 0.0}).value[0];
    const double b2 = drift_correction(k2, 0, Point{0.0, 0.0}).value[0];
    CHECK(b2 == doctest::Approx(2.0 * b1).epsilon(1e-8));
  }
  SUBCASE("symmetric family is a domain error") {
    LevyKernel k = separable_1d(TrigPoly2::constant(1.0), true);
    CHECK_THROWS_AS(drift_correction(k, 0, Point{0.0, 0.0}), ValidationError);
  }
  SUBCASE("half-space family has no continuous factor") {
    KernelControlParams cp;
    cp.spatial = TrigPoly2::constant(1.0);
    LevyKernel k(KernelFamily::HalfSpace, 1, TorusGrid(1, 64), {cp}, false, 8.0,
                 1.0, {}, 0);
    CHECK_THROWS_AS(drift_correction(k, 0, Point{0.0, 0.0}), ValidationError);
  }
}

TEST_CASE("family guards") {
  KernelControlParams cp;
  cp.matrix[0] = TrigPoly2::constant(1.0);
  CHECK_THROWS_AS(LevyKernel(KernelFamily::MatrixAnisotropic, 1, TorusGrid(1, 64),
                             {cp}, false, 8.0, 1.0),
                  ValidationError);
  ZProfile zp{ZProfile::Type::Abs, 1.0, 0};
  CHECK_THROWS_AS(separable_1d(TrigPoly2::constant(1.0), true, zp),
                  ValidationError);
  CHECK_THROWS_AS(separable_1d(TrigPoly2::constant(1.0), true, {}, 8.0, 1.5),
                  ValidationError);
}
