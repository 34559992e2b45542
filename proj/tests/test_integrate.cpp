#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fhn/integrate.hpp"

using namespace fhn;

namespace {

IvpProblem decay() {
  IvpProblem p;
  p.dimension = 1;
  p.rhs = [](double, const VecX& y) { return -y; };
  p.t0 = 0;
  p.t1 = 1;
  p.y0 = VecX::Constant(1, 1.0);
  p.exact = [](double t) { return VecX::Constant(1, std::exp(-t)); };
  return p;
}

}  // namespace

TEST_CASE("adaptive BDF on exponential decay") {
  IntegratorConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  const Trajectory tr = bdf_integrate(decay(), cfg);
  CHECK(std::abs(tr.back()[0] - std::exp(-1.0)) < 10 * cfg.rtol);
  CHECK(tr.max_order_used >= 2);
}

TEST_CASE("adaptive RK on growth and harmonic oscillator") {
  IntegratorConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;

  IvpProblem g;
  g.dimension = 1;
  g.rhs = [](double, const VecX& y) { return y; };
  g.t0 = 0;
  g.t1 = 1;
  g.y0 = VecX::Constant(1, 1.0);
  CHECK(std::abs(rk_integrate(g, cfg).back()[0] - std::exp(1.0)) <
        10 * cfg.rtol * std::exp(1.0));

  IvpProblem h;
  h.dimension = 2;
  h.rhs = [](double, const VecX& y) {
    VecX f(2);
    f << y[1], -y[0];
    return f;
  };
  h.t0 = 0;
  h.t1 = 2 * std::acos(-1.0);
  h.y0 = VecX(2);
  h.y0 << 1, 0;
  const Trajectory tr = rk_integrate(h, cfg);
  CHECK((tr.back() - h.y0).norm() < 1e-8);

  // energy drift over 100 periods
  h.t1 *= 100;
  const Trajectory tl = rk_integrate(h, cfg);
  const double energy = tl.back()[0] * tl.back()[0] + tl.back()[1] * tl.back()[1];
  CHECK(std::abs(energy - 1.0) < 1e-6);
}

TEST_CASE("fixed-step BDF convergence orders") {
  const std::vector<double> steps{1.0 / 40, 1.0 / 80, 1.0 / 160, 1.0 / 320};
  for (int k : {1, 2, 5}) {
    const double order = convergence_order(bdf_integrate, decay(), k, steps);
    CHECK(order == doctest::Approx((double)k).epsilon(0.3 / k));
  }
}

TEST_CASE("fixed-step BDF reproduces polynomial solutions exactly") {
  for (int k = 1; k <= 5; ++k) {
    IvpProblem p;
    p.dimension = 1;
    p.rhs = [k](double t, const VecX&) {
      return VecX::Constant(1, k * std::pow(t, k - 1));
    };
    p.t0 = 0;
    p.t1 = 1;
    p.y0 = VecX::Zero(1);
    p.exact = [k](double t) { return VecX::Constant(1, std::pow(t, k)); };
    IntegratorConfig cfg;
    cfg.fixed_step = 1.0 / 16;
    cfg.max_order = k;
    const Trajectory tr = bdf_integrate(p, cfg);
    CHECK(std::abs(tr.back()[0] - 1.0) < 1e-11);
  }
}

TEST_CASE("stiff relaxation problem: BDF beats the explicit oracle") {
  IvpProblem p;
  p.dimension = 1;
  p.rhs = [](double t, const VecX& y) {
    return VecX::Constant(1, -1e6 * (y[0] - std::cos(t)) - std::sin(t));
  };
  p.t0 = 0;
  p.t1 = 1;
  p.y0 = VecX::Constant(1, 1.0);
  IntegratorConfig cfg;
  cfg.rtol = 1e-8;
  cfg.atol = 1e-10;
  const Trajectory tb = bdf_integrate(p, cfg);
  CHECK(std::abs(tb.back()[0] - std::cos(1.0)) < 100 * cfg.rtol);
  const Trajectory tr = rk_integrate(p, cfg);
  CHECK(tb.n_steps * 10 <= tr.n_steps);
}

TEST_CASE("dense output interpolates the solution") {
  IntegratorConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  const Trajectory tr = bdf_integrate(decay(), cfg);
  for (double s : {0.1, 0.37, 0.92})
    CHECK(std::abs(tr.eval(s)[0] - std::exp(-s)) < 1e-8);
}
