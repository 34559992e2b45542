#include "fhn/poincare.hpp"

#include <cmath>

#include "fhn/integrate.hpp"

namespace fhn {

namespace {

double wrap_pi(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a <= -M_PI) a += 2 * M_PI;
  return a;
}

// Flow in standard coordinates, exactly conjugated to the physical one; the
// states stay O(1) there, which keeps the error control meaningful at tiny
// eps.
struct StandardFlow {
  ParamsFHN q;
  Mat3 M, Minv, lin;
  double eps, w, sgn;
  SectionOptions opts;

  explicit StandardFlow(const FamilyCoeffs& c, const SectionOptions& o)
      : q(family_params(c)),
        M(family_change(c)),
        Minv(M.inverse()),
        lin(Minv * fhn_field_jacobian(Vec3::Zero(), q) * M),
        eps(family_eps(c)),
        w(family_w(c)),
        sgn(o.reverse_time ? -1.0 : 1.0),
        opts(o) {}

  Vec3 velocity(const Vec3& s) const {
    // eps scales the coordinates; at eps = 0 the exact limit is the
    // block-diagonalized linear part
    if (eps == 0) return sgn * (lin * s);
    return sgn * (Minv * fhn_field(M * (eps * s), q)) / eps;
  }

  Vec3 advance(const Vec3& s, double dt) const {
    if (dt == 0) return s;
    IvpProblem p;
    p.dimension = 3;
    p.t0 = 0;
    p.t1 = dt;
    p.y0 = s;
    p.rhs = [this](double, const VecX& y) -> VecX {
      return velocity(Vec3(y[0], y[1], y[2]));
    };
    IntegratorConfig cfg;
    cfg.rtol = opts.rtol;
    cfg.atol = opts.atol;
    cfg.initial_step = std::abs(dt) / 4;
    return Vec3(rk_integrate(p, cfg).back());
  }

  double angular_speed(const Vec3& s) const {
    const Vec3 f = velocity(s);
    const double r2 = s[0] * s[0] + s[1] * s[1];
    return (s[0] * f[1] - s[1] * f[0]) / r2;
  }
};

// Follows the flow until the unwrapped angle has advanced by 2*pi*n_returns
// in the direction of rotation, calling on_sample at each tracking node, then
// refines the crossing time by a Newton iteration in the elapsed time.
struct TrackOutcome {
  Vec3 s;
  double time = 0;
};

TrackOutcome track_returns(
    const StandardFlow& flow, const Vec2& rz, int windows_per_turn,
    const std::function<void(double, const Vec3&)>& on_sample) {
  const auto& opts = flow.opts;
  if (!(rz[0] > 0))
    throw IntegrationError("section point must have positive radius");
  Vec3 s(rz[0], 0.0, rz[1]);
  const double rot0 = flow.angular_speed(s);
  if (rot0 == 0 || !std::isfinite(rot0))
    throw IntegrationError("degenerate rotation at the section point");
  const double rotsign = rot0 > 0 ? 1.0 : -1.0;
  const double target = rotsign * 2 * M_PI * opts.n_returns;
  const double dt = (2 * M_PI / flow.w) / windows_per_turn;

  double theta = 0, t = 0, phase = 0;  // phase = raw angle of (s0, s1)
  if (on_sample) on_sample(0, s);
  const long max_windows = static_cast<long>(
      opts.max_periods * windows_per_turn * std::max(1, opts.n_returns));
  for (long i = 0;; ++i) {
    if (i > max_windows)
      throw IntegrationError("no section return within the time budget");
    const Vec3 s1 = flow.advance(s, dt);
    if (!s1.allFinite() || s1.norm() > opts.escape_radius)
      throw IntegrationError("trajectory escaped the tracked region");
    const double r1 = std::hypot(s1[0], s1[1]);
    if (r1 < 1e-10 * std::max(1.0, rz[0]))
      throw IntegrationError("trajectory approached the rotation axis");
    const double phase1 = std::atan2(s1[1], s1[0]);
    const double theta1 = theta + wrap_pi(phase1 - phase);
    if (rotsign * theta1 >= rotsign * target) {
      // The crossing sits inside this window; redo it with Newton in time.
      double tc = 0, thc = theta;
      Vec3 sc = s;
      double step = (target - theta) / flow.angular_speed(s);
      for (int it = 0; it < 60 && std::abs(thc - target) > 0 &&
                       (it == 0 || std::abs(thc - target) > 1e-12);
           ++it) {
        if (it > 0) step = -(thc - target) / flow.angular_speed(sc);
        if (!std::isfinite(step)) break;
        const Vec3 sn = flow.advance(sc, step);
        thc += wrap_pi(std::atan2(sn[1], sn[0]) - std::atan2(sc[1], sc[0]));
        sc = sn;
        tc += step;
      }
      if (std::abs(thc - target) > 1e-9)
        throw IntegrationError("section crossing refinement failed");
      if (on_sample) on_sample(t + tc, sc);
      return {sc, t + tc};
    }
    s = s1;
    theta = theta1;
    phase = phase1;
    t += dt;
    if (on_sample) on_sample(t, s);
  }
}

}  // namespace

SectionResult poincare_map(const FamilyCoeffs& c, const Vec2& rz,
                           const SectionOptions& opts) {
  const StandardFlow flow(c, opts);
  const TrackOutcome out = track_returns(flow, rz, 64, nullptr);
  return {Vec2(std::hypot(out.s[0], out.s[1]), out.s[2]), out.time};
}

Map2 make_section_map(const FamilyCoeffs& c, const SectionOptions& opts) {
  return [c, opts](const Vec2& rz) { return poincare_map(c, rz, opts).point; };
}

FixedPointResult fixed_point(const Map2& map, const Vec2& guess, double tol,
                             int max_iters, double fd_h) {
  FixedPointResult res;
  Vec2 x = guess;
  Vec2 g = map(x) - x;
  // the residual floor of the underlying integration scales with the state
  const double tol_eff = tol * std::max(1.0, guess.norm());
  for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
    res.residual = g.norm();
    if (res.residual < tol_eff) {
      res.converged = true;
      break;
    }
    Mat2 J;  // of F(x) - x
    for (int j = 0; j < 2; ++j) {
      const double h = fd_h * std::max(1.0, std::abs(x[j]));
      Vec2 xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (map(xp) - map(xm)) / (2 * h) - Vec2::Unit(j);
    }
    const Vec2 dx = J.partialPivLu().solve(-g);
    double lambda = 1.0;
    Vec2 xn, gn;
    for (int bt = 0; bt < 10; ++bt) {
      xn = x + lambda * dx;
      gn = map(xn) - xn;
      if (gn.norm() <= (1 - 0.25 * lambda) * res.residual || bt == 9) break;
      lambda *= 0.5;
    }
    x = xn;
    g = gn;
  }
  res.point = x;
  res.residual = g.norm();
  if (res.residual < tol_eff) res.converged = true;
  return res;
}

MapDerivatives map_derivatives(const Map2& map, const Vec2& x0, double h) {
  const Vec2 f0 = map(x0);

  MapDerivatives d;
  // Fourth-order central first derivatives.
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Unit(j);
    const Vec2 fp = map(x0 + h * e), fm = map(x0 - h * e);
    const Vec2 fp2 = map(x0 + 2 * h * e), fm2 = map(x0 - 2 * h * e);
    d.J.col(j) = (8 * (fp - fm) - (fp2 - fm2)) / (12 * h);
  }

  // Second directional derivative B(u,u) with a fourth-order stencil.
  auto d2 = [&](const Vec2& u) -> Vec2 {
    return (-map(x0 + 2 * h * u) + 16 * map(x0 + h * u) - 30 * f0 +
            16 * map(x0 - h * u) - map(x0 - 2 * h * u)) /
           (12 * h * h);
  };
  // Third directional derivative C(u,u,u).
  auto d3 = [&](const Vec2& u) -> Vec2 {
    return (map(x0 + 2 * h * u) - 2 * map(x0 + h * u) + 2 * map(x0 - h * u) -
            map(x0 - 2 * h * u)) /
           (2 * h * h * h);
  };

  const Vec2 e1(1, 0), e2(0, 1);
  const Vec2 b11 = d2(e1), b22 = d2(e2);
  const Vec2 b12 = (d2(e1 + e2) - b11 - b22) / 2;
  const Vec2 bchk = d2(e1 - e2) - (b11 - 2 * b12 + b22);

  const Vec2 c111 = d3(e1), c222 = d3(e2);
  const Vec2 dpp = d3(e1 + e2), dpm = d3(e1 - e2);
  const Vec2 c112 = (dpp - dpm - 2 * c222) / 6;
  const Vec2 c122 = (dpp + dpm - 2 * c111) / 6;
  const Vec2 cchk =
      d3(2 * e1 + e2) - (8 * c111 + 12 * c112 + 6 * c122 + c222);

  double bmax = 0, cmax = 0;
  for (int i = 0; i < 2; ++i) {
    d.B[i][0][0] = b11[i];
    d.B[i][1][1] = b22[i];
    d.B[i][0][1] = d.B[i][1][0] = b12[i];
    d.C[i][0][0][0] = c111[i];
    d.C[i][1][1][1] = c222[i];
    d.C[i][0][0][1] = d.C[i][0][1][0] = d.C[i][1][0][0] = c112[i];
    d.C[i][0][1][1] = d.C[i][1][0][1] = d.C[i][1][1][0] = c122[i];
    bmax = std::max({bmax, std::abs(b11[i]), std::abs(b22[i]),
                     std::abs(b12[i])});
    cmax = std::max({cmax, std::abs(c111[i]), std::abs(c222[i]),
                     std::abs(c112[i]), std::abs(c122[i])});
  }
  d.residual_B = bchk.norm() / (1 + bmax);
  d.residual_C = cchk.norm() / (1 + cmax);
  return d;
}

PeriodicOrbit orbit_from_section(const FamilyCoeffs& c, const Vec2& rz,
                                 int samples_per_turn,
                                 const SectionOptions& opts) {
  const StandardFlow flow(c, opts);
  PeriodicOrbit orbit;
  Vec3 s_first = Vec3::Zero(), s_last = Vec3::Zero();
  bool first = true;
  const TrackOutcome out = track_returns(
      flow, rz, samples_per_turn, [&](double t, const Vec3& s) {
        if (first) {
          s_first = s;
          first = false;
        }
        s_last = s;
        orbit.t.push_back(t);
        orbit.phys.push_back(family_standard_to_phys(s, c));
      });
  orbit.period = out.time;
  orbit.closure_defect = (s_last - s_first).norm();
  return orbit;
}

}  // namespace fhn
