#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fhn/averaging.hpp"
#include "fhn/bifurcation.hpp"
#include "fhn/report.hpp"

using namespace fhn;

namespace {

constexpr double k_pi = 3.141592653589793238462643383279502884;

Mat2 mat(double a, double b, double c, double d) {
  Mat2 m;
  m << a, b, c, d;
  return m;
}

// quadratic planar map with an invariant-circle bifurcation at mu = 2,
// multipliers e^{+-i pi/3}; the born circle is known to be attracting
MapDerivatives delayed_logistic_derivatives() {
  const double mu = 2.0;
  const Vec2 fp(1 - 1 / mu, 1 - 1 / mu);
  const Map2 m = [mu](const Vec2& x) {
    return Vec2(x[1], mu * x[1] * (1 - x[0]));
  };
  return map_derivatives(m, fp, 1e-4);
}

}  // namespace

TEST_CASE("planar vector-field classification") {
  CHECK(classify_averaged(mat(-1, 0, 0, -2)).classification ==
        Stability::attracting);
  CHECK(classify_averaged(mat(1, 0, 0, 2)).classification ==
        Stability::repelling);
  CHECK(classify_averaged(mat(1, 0, 0, -2)).classification ==
        Stability::saddle);
  CHECK(classify_averaged(mat(0, 1, -1, 0)).classification ==
        Stability::non_hyperbolic);
}

TEST_CASE("multiplier classification") {
  using Cx = std::complex<double>;
  CHECK(classify_multipliers(Cx(0.5, 0.2), Cx(0.5, -0.2)).classification ==
        Stability::attracting);
  CHECK(classify_multipliers(Cx(1.2, 0), Cx(0.5, 0)).classification ==
        Stability::saddle);
  CHECK(classify_multipliers(Cx(1.1, 0.2), Cx(1.1, -0.2)).classification ==
        Stability::repelling);
}

TEST_CASE("eigenvalue series of a split perturbation") {
  // trivial cases
  const Mat2 a0 = mat(0, 0, 0, -0.8);
  auto s0 = jordan_split(a0, Mat2::Zero(), Mat2::Zero());
  CHECK(s0.eval(0, 0.1) == doctest::Approx(0.0));
  CHECK(s0.eval(1, 0.1) == doctest::Approx(-0.8));

  const Mat2 d1 = mat(0.3, 0, 0, -0.2), d2 = mat(-0.1, 0, 0, 0.4);
  auto sd = jordan_split(a0, d1, d2);
  CHECK(sd.eval(0, 0.05) ==
        doctest::Approx(0.05 * 0.3 + 0.05 * 0.05 * -0.1).epsilon(1e-14));

  // random split matrices vs a dense eigensolve
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat2 A0 = mat(0, 0, 0, u(rng) + 2.0);
    const Mat2 A1 = mat(u(rng), u(rng), u(rng), u(rng));
    const Mat2 A2 = mat(u(rng), u(rng), u(rng), u(rng));
    const auto s = jordan_split(A0, A1, A2);
    for (double eps : {1e-2, 1e-3}) {
      const Mat2 M = A0 + eps * A1 + eps * eps * A2;
      Eigen::EigenSolver<Mat2> es(M);
      double e0 = es.eigenvalues()[0].real(), e1 = es.eigenvalues()[1].real();
      if (std::abs(e0) > std::abs(e1)) std::swap(e0, e1);
      CHECK(std::abs(s.eval(0, eps) - e0) < 30 * eps * eps * eps);
      CHECK(std::abs(s.eval(1, eps) - e1) < 30 * eps * eps * eps);
    }
  }
  CHECK_THROWS_AS(jordan_split(Mat2::Zero(), d1, d2), std::invalid_argument);
}

TEST_CASE("degenerate-branch multiplier expansion on the example") {
  const FamilyBCoeffs b = std::get<FamilyBCoeffs>(example_coeffs(3));
  const auto be = b2_eigen_expansion(b);
  CHECK(be.lambda1 == doctest::Approx(-20808.0 * k_pi / 3773).epsilon(1e-12));
  CHECK(be.lambda2 ==
        doctest::Approx(-319716204.0 * k_pi / 14235529).epsilon(1e-12));
  CHECK(be.verdict.classification == Stability::attracting);

  // lambda1 lambda2 < 0 gives a saddle verdict (beta3 shifts lambda2 only)
  FamilyBCoeffs s = b;
  s.beta[2] = 50;
  const auto bs = b2_eigen_expansion(s);
  CHECK(bs.lambda1 * bs.lambda2 < 0);
  CHECK(bs.verdict.classification == Stability::saddle);
}

TEST_CASE("invariant-circle setup of both families") {
  const FamilyACoeffs a = std::get<FamilyACoeffs>(example_coeffs(1));
  const auto na = ns_conditions(a);
  CHECK(na.parameter == "gamma1");
  CHECK(na.mu0 == doctest::Approx(a.beta1 * a.d));
  CHECK(na.d0 == doctest::Approx(k_pi / a.w).epsilon(1e-14));
  CHECK(na.w0 == doctest::Approx(std::sqrt(2.0) * k_pi * std::abs(a.alpha1) *
                                 std::sqrt(a.d * (1 - a.w * a.w * a.d)) /
                                 (a.d * std::pow(a.w, 3)))
                     .epsilon(1e-14));
  CHECK_FALSE(na.degenerate);

  FamilyACoeffs deg = a;
  deg.alpha1 = 0;
  CHECK(ns_conditions(deg).degenerate);

  const FamilyBCoeffs b = std::get<FamilyBCoeffs>(example_coeffs(2));
  const auto nb = ns_conditions(b);
  CHECK(nb.parameter == "beta2");
  CHECK(nb.mu0 == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(nb.d0 == doctest::Approx(-k_pi).epsilon(1e-14));

  // outside the resonant class the setup is rejected
  CHECK_THROWS(ns_conditions(example_coeffs(3)));
}

TEST_CASE("crossing frequency and slope match the averaged-jacobian path") {
  // finite-difference check of (w0, d0) against the eigenvalues of the
  // leading averaged Jacobian eps*Dg1 along the distinguished parameter
  const FamilyACoeffs a0 = std::get<FamilyACoeffs>(example_coeffs(1));
  const auto ns = ns_conditions(a0);
  auto eig_at = [&](double mu) {
    FamilyACoeffs a = a0;
    a.gamma1 = mu;
    const auto pa = predictions_family_a(a);
    const CylPoint fp{a.d > 1 ? pa.rstar_plus : pa.rstar_minus, pa.zstar, 0.0};
    const double h = 1e-7 * std::max(1.0, std::abs(fp.r));
    Mat2 J;
    for (int j = 0; j < 2; ++j) {
      CylPoint pp = fp, pm = fp;
      (j == 0 ? pp.r : pp.z) += h;
      (j == 0 ? pm.r : pm.z) -= h;
      J.col(j) = (g1_family_a(pp, a) - g1_family_a(pm, a)) / (2 * h);
    }
    Eigen::EigenSolver<Mat2> es(J);
    return std::complex<double>(es.eigenvalues()[0]);
  };
  const auto at_crit = eig_at(ns.mu0);
  CHECK(std::abs(at_crit.real()) < 1e-6 * std::abs(at_crit.imag()));
  CHECK(std::abs(std::abs(at_crit.imag()) - ns.w0) < 1e-6 * ns.w0);
  const double dm = 1e-6;
  const double slope =
      (eig_at(ns.mu0 + dm).real() - eig_at(ns.mu0 - dm).real()) / (2 * dm);
  CHECK(slope == doctest::Approx(ns.d0).epsilon(1e-5));
}

TEST_CASE("map Lyapunov coefficient on a classical example") {
  const auto md = delayed_logistic_derivatives();
  const LyapunovResult ly = lyapunov_coeff(md);
  // the bifurcation is supercritical: both variants must be negative
  CHECK(ly.l1 < 0);
  CHECK(ly.l1_normalized < 0);
  CHECK(ly.theta == doctest::Approx(k_pi / 3).epsilon(1e-3));
}

TEST_CASE("Lyapunov coefficient is invariant under a basis change") {
  const auto md = delayed_logistic_derivatives();
  const double l_ref = lyapunov_coeff(md).l1_normalized;

  // conjugate the map by a fixed linear change and recompute
  const double mu = 2.0;
  const Vec2 fp(1 - 1 / mu, 1 - 1 / mu);
  Mat2 S = mat(1.0, 0.4, -0.3, 1.2);
  const Mat2 Sinv = S.inverse();
  const Map2 conj = [&](const Vec2& y) {
    const Vec2 x = fp + S * y;
    const Vec2 fx(x[1], mu * x[1] * (1 - x[0]));
    return Vec2(Sinv * (fx - fp));
  };
  const auto mdc = map_derivatives(conj, Vec2(0, 0), 1e-4);
  const double l_conj = lyapunov_coeff(mdc).l1_normalized;
  CHECK(l_conj == doctest::Approx(l_ref).epsilon(1e-5));
}

TEST_CASE("Lyapunov coefficient guards") {
  MapDerivatives md{};
  md.J = mat(0.9, 0, 0, 0.8);  // real multipliers
  CHECK_THROWS_AS(lyapunov_coeff(md), std::invalid_argument);
  const double c = std::cos(k_pi / 2), s = std::sin(k_pi / 2);
  md.J = mat(c, -s, s, c);  // strong 1:4 resonance
  CHECK_THROWS_AS(lyapunov_coeff(md), std::domain_error);
}

TEST_CASE("closed-form Lyapunov leading coefficients") {
  const auto l1 = lyapunov_closed_form(example_coeffs(1));
  CHECK(l1.jstar == 2);
  CHECK(l1.value == doctest::Approx(1.8106447241733665).epsilon(1e-12));
  const auto l2 = lyapunov_closed_form(example_coeffs(2));
  CHECK(l2.jstar == 3);
  CHECK(l2.value == doctest::Approx(429.0 * k_pi / 64).epsilon(1e-12));

  FamilyBCoeffs degenerate = std::get<FamilyBCoeffs>(example_coeffs(2));
  degenerate.gamma[0] = 0;
  degenerate.beta[0] = 0;
  CHECK(lyapunov_closed_form(degenerate).value == doctest::Approx(0.0));
}

TEST_CASE("sign condition for the invariant circle") {
  NSReport ns;
  ns.cond.d0 = -k_pi;
  ns.jstar = 3;
  ns.l1j = -5.0;
  ns.mu_curve = -1.0;
  // l1 < 0, d0 < 0: circle on the mu < mu_curve side, attracting
  auto v = torus_verdict(ns, -1.5);
  CHECK(v.side == TorusSide::torus_side);
  CHECK(v.torus == Stability::attracting);
  CHECK(v.orbit == Stability::repelling);
  v = torus_verdict(ns, -0.5);
  CHECK(v.side == TorusSide::no_torus_side);
  CHECK(v.orbit == Stability::attracting);
  CHECK(torus_verdict(ns, -1.0).side == TorusSide::on_curve);

  // l1 > 0, d0 > 0 (first-family signs): circle below the curve, repelling
  ns.cond.d0 = k_pi;
  ns.l1j = 1.8;
  ns.mu_curve = 0.0;
  v = torus_verdict(ns, -0.1);
  CHECK(v.side == TorusSide::torus_side);
  CHECK(v.torus == Stability::repelling);
  CHECK(v.orbit == Stability::attracting);
}

TEST_CASE("distinguished parameter replacement") {
  const FamilyCoeffs a = example_coeffs(1);
  const auto a2 = std::get<FamilyACoeffs>(with_ns_parameter(a, 0.25));
  CHECK(a2.gamma1 == 0.25);
  const FamilyCoeffs b = example_coeffs(2);
  const auto b2 = std::get<FamilyBCoeffs>(with_ns_parameter(b, -1.25));
  CHECK(b2.beta[1] == -1.25);
}
