#include "fhn/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fhn {

namespace {

constexpr double kPi = M_PI;

double wrap_2pi(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

}  // namespace

SectionOrbit iterate_section(const Map2& m, const Vec2& start, int n) {
  SectionOrbit orbit;
  orbit.points.reserve(n + 1);
  orbit.points.push_back(start);
  Vec2 x = start;
  for (int i = 0; i < n; ++i) {
    x = m(x);
    orbit.points.push_back(x);
  }
  return orbit;
}

double InvariantCircle::radius(double phi) const {
  double r = cos_coef.empty() ? 0 : cos_coef[0];
  for (int k = 1; k <= order; ++k)
    r += cos_coef[k] * std::cos(k * phi) + sin_coef[k] * std::sin(k * phi);
  return r;
}

Vec2 InvariantCircle::point(double phi) const {
  const double r = radius(phi);
  return center + frame.inverse() * (r * Vec2(std::cos(phi), std::sin(phi)));
}

double InvariantCircle::distance(const Vec2& x) const {
  const Vec2 y = frame * (x - center);
  return std::abs(y.norm() - radius(std::atan2(y[1], y[0])));
}

InvariantCircle fit_invariant_circle(const std::vector<Vec2>& tail,
                                     const Vec2& center, const Map2& map,
                                     int max_order) {
  const int n = static_cast<int>(tail.size());
  if (n < 64)
    throw std::invalid_argument(
        "fit_invariant_circle: need at least 64 orbit points");

  // Whitening frame: unit-determinant change that equalizes the principal
  // axes of the orbit cloud, so the curve becomes near-circular and a
  // low-order radial Fourier series can represent it.
  Vec2 mean = Vec2::Zero();
  for (const Vec2& x : tail) mean += x - center;
  mean /= n;
  Mat2 cov = Mat2::Zero();
  for (const Vec2& x : tail) {
    const Vec2 v = x - center - mean;
    cov += v * v.transpose();
  }
  cov /= n;
  Eigen::SelfAdjointEigenSolver<Mat2> cov_es(cov);
  const Vec2 ev = cov_es.eigenvalues().cwiseMax(1e-300);
  const double unit = std::sqrt(std::sqrt(ev[0] * ev[1]));
  Mat2 frame = unit * Vec2(1 / std::sqrt(ev[0]), 1 / std::sqrt(ev[1]))
                          .asDiagonal() *
               cov_es.eigenvectors().transpose();

  std::vector<double> phi(n), rho(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 v = frame * (tail[i] - center);
    rho[i] = v.norm();
    phi[i] = wrap_2pi(std::atan2(v[1], v[0]));
  }

  // Angular coverage: the largest gap between consecutive sorted angles must
  // be below 0.1 of the full turn.
  std::vector<double> sorted = phi;
  std::sort(sorted.begin(), sorted.end());
  double max_gap = 2 * kPi - sorted.back() + sorted.front();
  for (int i = 1; i < n; ++i)
    max_gap = std::max(max_gap, sorted[i] - sorted[i - 1]);
  if (max_gap > 0.1 * 2 * kPi)
    throw std::invalid_argument(
        "fit_invariant_circle: angular coverage below 0.9 of a full turn "
        "(possible rotation-number lock)");

  const int order = std::min(max_order, 8);
  const int ncol = 1 + 2 * order;
  Eigen::MatrixXd A(n, ncol);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = 1;
    for (int k = 1; k <= order; ++k) {
      A(i, 2 * k - 1) = std::cos(k * phi[i]);
      A(i, 2 * k) = std::sin(k * phi[i]);
    }
    b[i] = rho[i];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);

  InvariantCircle circle;
  circle.center = center;
  circle.frame = frame;
  circle.order = order;
  circle.cos_coef.assign(order + 1, 0.0);
  circle.sin_coef.assign(order + 1, 0.0);
  circle.cos_coef[0] = coef[0];
  for (int k = 1; k <= order; ++k) {
    circle.cos_coef[k] = coef[2 * k - 1];
    circle.sin_coef[k] = coef[2 * k];
  }
  circle.mean_radius = coef[0];

  circle.fit_residual = 0;
  for (int i = 0; i < n; ++i)
    circle.fit_residual =
        std::max(circle.fit_residual, std::abs(rho[i] - circle.radius(phi[i])));

  // Invariance defect: map curve samples and measure their radial distance
  // from the fitted profile at the image angle.
  circle.invariance_defect = 0;
  const int n_samples = 256;
  for (int i = 0; i < n_samples; ++i) {
    const double a = 2 * kPi * i / n_samples;
    circle.invariance_defect =
        std::max(circle.invariance_defect, circle.distance(map(circle.point(a))));
  }

  SectionOrbit as_orbit;
  as_orbit.points = tail;
  circle.rotation = rotation_number(as_orbit, center);
  for (int q = 1; q <= 6 && !circle.near_resonant; ++q)
    for (int p = 0; p <= q; ++p)
      if (std::abs(circle.rotation - double(p) / q) < 1e-3) {
        circle.near_resonant = true;
        break;
      }
  return circle;
}

double rotation_number(const SectionOrbit& orbit, const Vec2& center) {
  const int n = static_cast<int>(orbit.points.size());
  if (n < 2) throw std::domain_error("rotation_number: orbit too short");

  std::vector<double> dtheta(n - 1);
  double scale = 0;
  for (int i = 0; i < n; ++i)
    scale = std::max(scale, (orbit.points[i] - center).norm());
  for (int i = 0; i + 1 < n; ++i) {
    const Vec2 a = orbit.points[i] - center;
    const Vec2 b = orbit.points[i + 1] - center;
    if (a.norm() < 1e-9 * std::max(scale, 1.0) ||
        b.norm() < 1e-9 * std::max(scale, 1.0))
      throw std::domain_error("rotation_number: orbit passes through center");
    // Increment in (-pi, pi]: the angle of b relative to a.
    dtheta[i] =
        std::atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]);
  }
  const double total =
      std::accumulate(dtheta.begin(), dtheta.end(), 0.0);
  if (std::abs(total) < 2 * kPi)
    throw std::domain_error(
        "rotation_number: orbit does not wind about the center");

  // Birkhoff weighting: a smooth bump w(t) = exp(-1/(t(1-t))) suppresses the
  // boundary terms and accelerates convergence for Diophantine rotations.
  double wsum = 0, acc = 0;
  const int m = n - 1;
  for (int i = 0; i < m; ++i) {
    const double t = (i + 0.5) / m;
    const double w = std::exp(-1.0 / (t * (1.0 - t)));
    wsum += w;
    acc += w * dtheta[i];
  }
  double rot = acc / (wsum * 2 * kPi);
  rot = rot - std::floor(rot);
  return rot;
}

Stability classify_circle(const Map2& forward, const Map2& backward,
                          const InvariantCircle& circle, double delta,
                          int iterations) {
  const Mat2 frame_inv = circle.frame.inverse();
  auto probe = [&](const Map2& m, double phi, double factor) {
    Vec2 x = circle.center +
             frame_inv * (factor * circle.radius(phi) *
                          Vec2(std::cos(phi), std::sin(phi)));
    const double d0 = circle.distance(x);
    for (int i = 0; i < iterations; ++i) x = m(x);
    return circle.distance(x) / d0;
  };

  const std::array<double, 4> angles = {0.0, kPi / 2, kPi, 3 * kPi / 2};
  int fwd_contract = 0, fwd_expand = 0;
  for (double a : angles)
    for (double f : {1.0 - delta, 1.0 + delta}) {
      const double ratio = probe(forward, a, f);
      (ratio < 1 ? fwd_contract : fwd_expand)++;
    }
  const int n_probes = 2 * static_cast<int>(angles.size());
  if (fwd_contract == n_probes) return Stability::attracting;
  if (fwd_expand == n_probes) {
    int bwd_contract = 0;
    for (double a : angles)
      for (double f : {1.0 - delta, 1.0 + delta})
        if (probe(backward, a, f) < 1) ++bwd_contract;
    if (bwd_contract == n_probes) return Stability::repelling;
  }
  throw std::runtime_error(
      "classify_circle: mixed probe behavior; circle not normally "
      "hyperbolic at this resolution");
}

}  // namespace fhn
