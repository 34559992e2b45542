#include "fhn/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fhn {

namespace {

double wrms(const VecX& e, const VecX& y, double rtol, double atol) {
  double s = 0;
  for (int i = 0; i < e.size(); ++i) {
    const double w = atol + rtol * std::abs(y[i]);
    s += (e[i] / w) * (e[i] / w);
  }
  return std::sqrt(s / e.size());
}

// Derivative weights of the Lagrange interpolant through nodes xs, taken at
// the last node.
std::vector<double> lagrange_deriv_weights(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  const double t = xs.back();
  std::vector<double> w(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double denom = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) denom *= xs[i] - xs[j];
    double num = 0.0;
    for (int m = 0; m < n; ++m) {
      if (m == i) continue;
      double p = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i && j != m) p *= t - xs[j];
      num += p;
    }
    w[i] = num / denom;
  }
  return w;
}

// Value weights of the Lagrange interpolant through nodes xs at point t.
std::vector<double> lagrange_value_weights(const std::vector<double>& xs,
                                           double t) {
  const int n = static_cast<int>(xs.size());
  std::vector<double> w(n, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) w[i] *= (t - xs[j]) / (xs[i] - xs[j]);
  return w;
}

Eigen::MatrixXd fd_jacobian(const Rhs& rhs, double t, const VecX& y,
                            const VecX& f0, long& n_rhs) {
  const int n = static_cast<int>(y.size());
  const double sqrt_ulp = std::sqrt(std::numeric_limits<double>::epsilon());
  Eigen::MatrixXd J(n, n);
  VecX yp = y;
  for (int j = 0; j < n; ++j) {
    const double dy = sqrt_ulp * std::max(std::abs(y[j]), 1.0);
    yp[j] = y[j] + dy;
    J.col(j) = (rhs(t, yp) - f0) / dy;
    yp[j] = y[j];
    ++n_rhs;
  }
  return J;
}

double initial_step_guess(const IvpProblem& p, const IntegratorConfig& cfg,
                          const VecX& f0, int order) {
  const double d0 = wrms(p.y0, p.y0, cfg.rtol, cfg.atol);
  const double d1 = wrms(f0, p.y0, cfg.rtol, cfg.atol);
  double h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1
                                      : std::abs(p.t1 - p.t0) * 1e-6;
  h = std::min(h, std::abs(p.t1 - p.t0));
  h = std::min(h, std::pow(cfg.rtol, 1.0 / (order + 1)));
  return std::max(h, 1e-12);
}

}  // namespace

VecX Trajectory::eval(double s) const {
  const bool fwd = t.back() >= t.front();
  auto it = fwd ? std::lower_bound(t.begin(), t.end(), s)
                : std::lower_bound(t.begin(), t.end(), s, std::greater<>());
  size_t i = static_cast<size_t>(std::distance(t.begin(), it));
  if (i == 0) i = 1;
  if (i >= t.size()) i = t.size() - 1;
  const double ta = t[i - 1], tb = t[i], h = tb - ta;
  if (h == 0) return y[i];
  const double u = (s - ta) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  return h00 * y[i - 1] + h10 * h * f[i - 1] + h01 * y[i] + h11 * h * f[i];
}

Trajectory bdf_integrate(const IvpProblem& p, const IntegratorConfig& cfg) {
  if (p.dimension <= 0 || !p.rhs || p.t1 == p.t0)
    throw IntegrationError("invalid problem");
  const int kmax = std::clamp(cfg.max_order, 1, 5);
  const double dir = p.t1 > p.t0 ? 1.0 : -1.0;
  const bool fixed = cfg.fixed_step > 0;

  Trajectory tr;
  tr.t.push_back(p.t0);
  tr.y.push_back(p.y0);
  tr.f.push_back(p.rhs(p.t0, p.y0));
  ++tr.n_rhs;

  int k = 1;
  if (fixed && p.exact) {
    // Seed exact history so every step runs at the nominal order.
    for (int j = 1; j < kmax; ++j) {
      const double tj = p.t0 + dir * j * cfg.fixed_step;
      tr.t.push_back(tj);
      tr.y.push_back(p.exact(tj));
      tr.f.push_back(p.rhs(tj, tr.y.back()));
      ++tr.n_rhs;
    }
    k = kmax;
  }

  double h = fixed ? cfg.fixed_step
                   : (cfg.initial_step > 0
                          ? cfg.initial_step
                          : initial_step_guess(p, cfg, tr.f.front(), 1));

  Eigen::MatrixXd J;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  bool have_jac = false;
  double jac_c0 = 0;
  int consecutive_fails = 0;
  int steps_at_order = 0;

  while (dir * (tr.t.back() - p.t1) < -1e-14 * std::abs(p.t1 - p.t0 + 1)) {
    if (tr.n_steps + tr.n_rejected > cfg.max_steps)
      throw IntegrationError("bdf: max_steps exceeded");
    double hs = dir * h;
    if (!fixed && dir * (tr.t.back() + hs - p.t1) > 0) hs = p.t1 - tr.t.back();
    const double tn = tr.t.back() + hs;

    const int kk = std::min<int>(k, static_cast<int>(tr.t.size()));
    std::vector<double> xs(tr.t.end() - kk, tr.t.end());
    xs.push_back(tn);
    const auto dw = lagrange_deriv_weights(xs);
    const double c0 = dw.back();
    VecX hist = VecX::Zero(p.dimension);
    for (int j = 0; j < kk; ++j) hist += dw[j] * tr.y[tr.y.size() - kk + j];

    // Predictor: extrapolate the history polynomial.
    std::vector<double> hx(tr.t.end() - kk, tr.t.end());
    VecX ypred;
    if (kk >= 2) {
      const auto vw = lagrange_value_weights(hx, tn);
      ypred = VecX::Zero(p.dimension);
      for (int j = 0; j < kk; ++j) ypred += vw[j] * tr.y[tr.y.size() - kk + j];
    } else {
      ypred = tr.y.back() + hs * tr.f.back();
    }

    if (!have_jac || std::abs(jac_c0 / c0 - 1.0) > 0.3) {
      J = fd_jacobian(p.rhs, tn, ypred, p.rhs(tn, ypred), tr.n_rhs);
      ++tr.n_rhs;
      have_jac = true;
    }
    jac_c0 = c0;
    lu.compute(c0 * Eigen::MatrixXd::Identity(p.dimension, p.dimension) - J);

    // Newton corrector on c0*y - f(tn,y) + hist = 0.
    VecX y = ypred;
    bool converged = false;
    double prev_norm = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.newton_max_iters; ++it) {
      const VecX fy = p.rhs(tn, y);
      ++tr.n_rhs;
      if (!fy.allFinite()) break;
      const VecX res = c0 * y + hist - fy;
      const VecX dy = lu.solve(res);
      y -= dy;
      const double nd = wrms(dy, y, cfg.rtol, cfg.atol);
      if (nd < cfg.newton_tol) {
        converged = true;
        break;
      }
      if (it > 0 && nd > 0.9 * prev_norm) break;  // diverging
      prev_norm = nd;
    }

    if (!converged) {
      if (have_jac && consecutive_fails == 0) {
        // Retry once with a fresh Jacobian at the same step.
        have_jac = false;
        ++consecutive_fails;
        ++tr.n_rejected;
        continue;
      }
      if (fixed) throw IntegrationError("bdf: Newton divergence (fixed step)");
      h *= 0.25;
      k = std::max(1, k - 1);
      ++consecutive_fails;
      ++tr.n_rejected;
      if (h < 1e-14 * std::max(1.0, std::abs(tr.t.back())))
        throw IntegrationError("bdf: Newton divergence at minimum step");
      continue;
    }

    const VecX est = (y - ypred) / (kk + 1);
    double err = fixed ? 0.0 : wrms(est, y, cfg.rtol, cfg.atol);
    if (!std::isfinite(err)) err = 1e6;
    if (err <= 1.0) {
      tr.t.push_back(tn);
      tr.y.push_back(y);
      tr.f.push_back(p.rhs(tn, y));
      ++tr.n_rhs;
      ++tr.n_steps;
      consecutive_fails = 0;
      ++steps_at_order;
      tr.max_order_used = std::max(tr.max_order_used, kk);
      if (!fixed) {
        double fac = err > 0 ? 0.9 * std::pow(err, -1.0 / (kk + 1)) : 4.0;
        h *= std::clamp(fac, 0.2, 4.0);
        if (k < kmax && steps_at_order >= k + 2 &&
            static_cast<int>(tr.t.size()) > k) {
          ++k;  // cautious order ramp
          steps_at_order = 0;
        }
      } else {
        k = std::min(kmax, static_cast<int>(tr.t.size()));
      }
    } else {
      ++tr.n_rejected;
      ++consecutive_fails;
      h *= std::clamp(0.9 * std::pow(err, -1.0 / (kk + 1)), 0.1, 0.5);
      if (consecutive_fails > 2 && k > 1) {
        k = 1;
        steps_at_order = 0;
      }
      if (h < 1e-14 * std::max(1.0, std::abs(tr.t.back())))
        throw IntegrationError("bdf: step size underflow");
    }
  }
  return tr;
}

Trajectory rk_integrate(const IvpProblem& p, const IntegratorConfig& cfg) {
  if (p.dimension <= 0 || !p.rhs || p.t1 == p.t0)
    throw IntegrationError("invalid problem");
  // Dormand-Prince 5(4) tableau.
  static const double A[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double C[7] = {0,       1.0 / 5, 3.0 / 10, 4.0 / 5,
                              8.0 / 9, 1.0,     1.0};
  static const double E[7] = {71.0 / 57600,  0.0,          -71.0 / 16695,
                              71.0 / 1920,   -17253.0 / 339200,
                              22.0 / 525,    -1.0 / 40};

  const double dir = p.t1 > p.t0 ? 1.0 : -1.0;
  Trajectory tr;
  tr.t.push_back(p.t0);
  tr.y.push_back(p.y0);
  tr.f.push_back(p.rhs(p.t0, p.y0));
  ++tr.n_rhs;
  tr.max_order_used = 5;

  double h = cfg.fixed_step > 0 ? cfg.fixed_step
             : cfg.initial_step > 0
                 ? cfg.initial_step
                 : initial_step_guess(p, cfg, tr.f.front(), 4);

  VecX ks[7];
  while (dir * (tr.t.back() - p.t1) < -1e-14 * std::abs(p.t1 - p.t0 + 1)) {
    if (tr.n_steps + tr.n_rejected > cfg.max_steps)
      throw IntegrationError("rk: max_steps exceeded");
    double hs = dir * h;
    if (dir * (tr.t.back() + hs - p.t1) > 0 && cfg.fixed_step == 0)
      hs = p.t1 - tr.t.back();
    const double t0 = tr.t.back();
    const VecX& y0 = tr.y.back();
    ks[0] = tr.f.back();
    for (int i = 1; i < 7; ++i) {
      VecX yi = y0;
      for (int j = 0; j < i; ++j)
        if (A[i][j] != 0) yi += hs * A[i][j] * ks[j];
      ks[i] = p.rhs(t0 + C[i] * hs, yi);
      ++tr.n_rhs;
      if (!ks[i].allFinite()) throw IntegrationError("rk: non-finite rhs");
    }
    VecX y1 = y0;
    for (int j = 0; j < 6; ++j)
      if (A[6][j] != 0) y1 += hs * A[6][j] * ks[j];
    VecX e = VecX::Zero(p.dimension);
    for (int j = 0; j < 7; ++j)
      if (E[j] != 0) e += hs * E[j] * ks[j];
    double err = cfg.fixed_step > 0 ? 0.0 : wrms(e, y1, cfg.rtol, cfg.atol);
    if (!std::isfinite(err)) err = 1e6;
    if (err <= 1.0) {
      tr.t.push_back(t0 + hs);
      tr.y.push_back(y1);
      tr.f.push_back(ks[6]);  // FSAL
      ++tr.n_steps;
      if (cfg.fixed_step == 0)
        h *= std::clamp(err > 0 ? 0.9 * std::pow(err, -0.2) : 6.0, 0.2, 6.0);
    } else {
      ++tr.n_rejected;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (h < 1e-14 * std::max(1.0, std::abs(t0)))
        throw IntegrationError("rk: step size underflow");
    }
  }
  return tr;
}

double convergence_order(
    const std::function<Trajectory(const IvpProblem&, const IntegratorConfig&)>&
        method,
    const IvpProblem& p, int order, const std::vector<double>& steps) {
  if (!p.exact) throw IntegrationError("convergence_order needs p.exact");
  std::vector<double> lh, le;
  for (double h : steps) {
    IntegratorConfig cfg;
    cfg.max_order = order;
    cfg.fixed_step = h;
    cfg.newton_tol = 1e-4;
    cfg.newton_max_iters = 12;
    const Trajectory tr = method(p, cfg);
    const double err = (tr.back() - p.exact(tr.t.back())).norm();
    if (err <= 0) continue;
    lh.push_back(std::log(h));
    le.push_back(std::log(err));
  }
  // Least-squares slope.
  const int n = static_cast<int>(lh.size());
  double mh = 0, me = 0;
  for (int i = 0; i < n; ++i) mh += lh[i], me += le[i];
  mh /= n, me /= n;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (lh[i] - mh) * (le[i] - me);
    den += (lh[i] - mh) * (lh[i] - mh);
  }
  return num / den;
}

}  // namespace fhn
