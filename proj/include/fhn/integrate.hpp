#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace fhn {

using VecX = Eigen::VectorXd;
using Rhs = std::function<VecX(double, const VecX&)>;

struct IvpProblem {
  int dimension = 0;
  Rhs rhs;
  double t0 = 0, t1 = 0;
  VecX y0;
  // Optional exact solution; when set, fixed-step runs seed the multistep
  // history from it so the measured order is the method's own.
  std::function<VecX(double)> exact;
};

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  int max_order = 5;            // BDF order cap, in [1,5]
  double initial_step = 0;      // 0 = automatic selection
  long max_steps = 20'000'000;
  double newton_tol = 0.03;     // fraction of the step error tolerance
  int newton_max_iters = 8;
  double fixed_step = 0;        // > 0 enables fixed-step mode at max_order
};

struct Trajectory {
  std::vector<double> t;
  std::vector<VecX> y;
  std::vector<VecX> f;  // state derivative at the nodes (dense output)
  long n_steps = 0;     // accepted steps
  long n_rhs = 0;
  long n_rejected = 0;
  int max_order_used = 1;

  const VecX& back() const { return y.back(); }
  // Cubic Hermite interpolation on the step containing time s.
  VecX eval(double s) const;
};

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Variable-step, variable-order (1..5) BDF with a Newton corrector on a
// finite-difference Jacobian.
Trajectory bdf_integrate(const IvpProblem& p, const IntegratorConfig& cfg);

// Embedded explicit Runge-Kutta 5(4) pair with adaptive steps (oracle).
Trajectory rk_integrate(const IvpProblem& p, const IntegratorConfig& cfg);

// Log-log slope of the final-time error versus step size for the fixed-step
// method of the given order; requires p.exact.
double convergence_order(
    const std::function<Trajectory(const IvpProblem&, const IntegratorConfig&)>&
        method,
    const IvpProblem& p, int order, const std::vector<double>& steps);

}  // namespace fhn
