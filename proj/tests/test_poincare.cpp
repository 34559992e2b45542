#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fhn/averaging.hpp"
#include "fhn/poincare.hpp"
#include "fhn/report.hpp"

using namespace fhn;

namespace {

constexpr double k_pi = 3.141592653589793238462643383279502884;

FamilyCoeffs ex3() { return example_coeffs(3); }

}  // namespace

TEST_CASE("eps = 0 return map is the identity") {
  FamilyACoeffs a;
  a.d = 17.0 / 16;
  a.w = 39.0 / 64;
  a.eps = 0;
  a.alpha1 = 1.0;
  for (const Vec2& p : {Vec2(0.5, 0.2), Vec2(1.1, -0.4)}) {
    const SectionResult r = poincare_map(a, p);
    CHECK((r.point - p).norm() < 1e-10);
    CHECK(r.return_time == doctest::Approx(2 * k_pi / a.w).epsilon(1e-8));
  }

  FamilyBCoeffs b = std::get<FamilyBCoeffs>(ex3());
  b.eps = 0;
  const SectionResult r = poincare_map(b, Vec2(0.8, 0.3));
  CHECK((r.point - Vec2(0.8, 0.3)).norm() < 1e-10);
}

TEST_CASE("forward and reversed maps invert each other") {
  const FamilyCoeffs c = ex3();
  const Vec2 p(1.0, 0.1);
  const Vec2 q = make_section_map(c)(p);
  SectionOptions ro;
  ro.reverse_time = true;
  const Vec2 back = make_section_map(c, ro)(q);
  CHECK((back - p).norm() < 1e-8);
}

TEST_CASE("fixed point of the example section map") {
  const FamilyCoeffs c = ex3();
  const auto pb = predictions_family_b(std::get<FamilyBCoeffs>(c));
  const Map2 map = make_section_map(c);
  const auto fp = fixed_point(map, Vec2(pb.rstar_b2, 0));
  CHECK(fp.converged);
  CHECK(fp.residual < 1e-11);
  // within O(eps) of the predicted branch zero
  CHECK(std::abs(fp.point[0] - pb.rstar_b2) < 0.5);

  // iterating the map from nearby converges to it (attracting orbit)
  Vec2 x = fp.point + Vec2(0.05, 0.05);
  for (int i = 0; i < 40; ++i) x = map(x);
  CHECK((x - fp.point).norm() < (Vec2(0.05, 0.05)).norm());
}

TEST_CASE("fixed point solver on an analytic map") {
  const Map2 m = [](const Vec2& x) {
    return Vec2(0.5 * x[0] + 0.1 * x[1] * x[1] + 0.2,
                -0.3 * x[1] + 0.05 * x[0] + 0.1);
  };
  const auto fp = fixed_point(m, Vec2(0, 0));
  CHECK(fp.converged);
  CHECK((m(fp.point) - fp.point).norm() < 1e-12);
}

TEST_CASE("derivative tensors of synthetic maps") {
  // linear map: B and C vanish to stencil error
  Mat2 M;
  M << 0.9, -0.4, 0.3, 1.1;
  const Map2 lin = [&M](const Vec2& x) { return Vec2(M * x); };
  const MapDerivatives dl = map_derivatives(lin, Vec2(0.2, -0.1), 1e-3);
  CHECK((dl.J - M).norm() < 1e-9);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(dl.B[k][i][j]) < 1e-6);
        for (int l = 0; l < 2; ++l) CHECK(std::abs(dl.C[k][i][j][l]) < 1e-3);
      }

  // quadratic map x -> x + q(x, x): B recovers 2q
  const Map2 quad = [](const Vec2& x) {
    return Vec2(x[0] + 0.7 * x[0] * x[0] - 0.2 * x[0] * x[1],
                x[1] + 0.4 * x[1] * x[1] + 0.3 * x[0] * x[1]);
  };
  const MapDerivatives dq = map_derivatives(quad, Vec2(0, 0), 1e-3);
  CHECK(dq.B[0][0][0] == doctest::Approx(1.4).epsilon(1e-6));
  CHECK(dq.B[0][0][1] == doctest::Approx(-0.2).epsilon(1e-6));
  CHECK(dq.B[1][1][1] == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(dq.B[1][0][1] == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(dq.residual_B < 1e-8);

  // cubic map: C recovers 6 * coefficient, and the Jacobian passes a
  // Richardson consistency check between steps h and h/2
  const Map2 cubic = [](const Vec2& x) {
    return Vec2(x[0] + 0.5 * x[0] * x[0] * x[0],
                x[1] - 0.25 * x[0] * x[0] * x[1]);
  };
  const MapDerivatives dc = map_derivatives(cubic, Vec2(0, 0), 1e-2);
  CHECK(dc.C[0][0][0][0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(dc.C[1][0][0][1] == doctest::Approx(-0.5).epsilon(1e-6));
  const MapDerivatives dh = map_derivatives(cubic, Vec2(0.1, 0.1), 1e-3);
  const MapDerivatives dh2 = map_derivatives(cubic, Vec2(0.1, 0.1), 5e-4);
  CHECK((dh.J - dh2.J).norm() < 1e-6);
}

TEST_CASE("tensor symmetry residuals stay near stencil error") {
  const FamilyCoeffs c = ex3();
  const Map2 map = make_section_map(c);
  const auto pb = predictions_family_b(std::get<FamilyBCoeffs>(c));
  const auto fp = fixed_point(map, Vec2(pb.rstar_b2, 0));
  const MapDerivatives md = map_derivatives(map, fp.point, 1e-3);
  // the stencil's own cross-difference defect; generous factor-10 envelope
  CHECK(md.residual_B < 1e-5);
  CHECK(md.residual_C < 1e-2);
}

TEST_CASE("periodic orbit closes and has the expected period") {
  const FamilyCoeffs c = ex3();
  const Map2 map = make_section_map(c);
  const auto pb = predictions_family_b(std::get<FamilyBCoeffs>(c));
  const auto fp = fixed_point(map, Vec2(pb.rstar_b2, 0));
  const PeriodicOrbit orbit = orbit_from_section(c, fp.point);
  CHECK(orbit.closure_defect < 1e-9);
  const double w = family_w(c);
  CHECK(orbit.period == doctest::Approx(2 * k_pi / w).epsilon(0.15));
  CHECK(orbit.phys.size() > 100);
}
