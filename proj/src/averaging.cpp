#include "fhn/averaging.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "fhn/integrate.hpp"

namespace fhn {

namespace {

constexpr double kPi = M_PI;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool nearly(double x, double y) {
  return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)});
}

}  // namespace

// ---------------------------------------------------------------------------
// Closed forms, Family A.
// ---------------------------------------------------------------------------

Vec2 g1_family_a(const CylPoint& p, const FamilyACoeffs& c) {
  c.validate();
  const double d = c.d, w = c.w, b0 = c.beta0();
  const double r = p.r, z = p.z;
  const double dw2m1 = d * w * w - 1, dm1 = d - 1;
  const double g1 =
      -r * kPi *
      ((c.alpha1 * d * d * w * w - 2 * z * dm1 * dw2m1) * d * b0 +
       d * d * std::pow(w, 4) * (c.beta1 * d - c.gamma1)) /
      (d * d * std::pow(w, 5));
  const double g2 =
      b0 * kPi *
      ((1 - d) * r * r - 8 * dm1 * dw2m1 * dw2m1 * z * z +
       8 * c.alpha1 * d * d * w * w * dw2m1 * z) /
      (4 * d * std::pow(w, 5) * dw2m1);
  return {g1, g2};
}

Vec2 g2_family_a(const CylPoint& p, const FamilyACoeffs& c) {
  c.validate();
  const double d = c.d, w = c.w, b0 = c.beta0();
  const double a1 = c.alpha1, a2 = c.alpha2, b1 = c.beta1, b2 = c.beta2,
               g1 = c.gamma1, g2 = c.gamma2;
  const double r = p.r, z = p.z;
  const double q = d * w * w - 1;  // dw^2 - 1
  const double m = d - 1;
  const double db = d * b1 - g1;
  const double w2 = w * w, w3 = w2 * w, w4 = w3 * w, w5 = w4 * w;
  const double d2 = d * d, d3 = d2 * d, d4 = d3 * d;
  const double sq = d * b0;  // sqrt(1/d - w^2)

  // First component, prefactor pi / (48 d^5 w^10).
  double bracket =
      (30 * d - 15 * d2 - 9 * d2 * w2 - 15) * r * r * r +
      16 * d2 * w3 * m * (4 * d * b1 - g1) * r * r +
      (-144 * (d2 * w2 + 3 * d2 - 6 * d + 3) * q * q * z * z -
       48 * q * d2 * w2 * (2 * kPi * m * db * w - a1 * (2 * d * w2 + 9 * d - 9)) * z +
       24 * d4 * w4 *
           ((g1 * g1 - 2 * a2 - d2 * b1 * b1) * w2 + 2 * kPi * a1 * db * w -
            3 * a1 * a1)) *
          r -
      96 * d2 * w3 * m * q * q * db * z * z +
      96 * a1 * d4 * w5 * q * db * z;
  double rest =
      -576 * m * m * std::pow(q, 4) * z * z * z +
      864 * d2 * w2 * a1 * m * q * q * q * z * z -
      16 * q *
          (18 * d4 * a1 * a1 * w4 * q - 5 * m * m * q * r * r -
           3 * m * d2 * w3 * (3 * d * b1 - 4 * d * g1 * w2 + 3 * g1) * r) *
          z +
      12 * kPi * r * r * r * m * m * q -
      40 * d2 * w2 * a1 * r * r * m * q -
      24 * d4 * w4 *
          (2 * d * w5 * (b2 * d - g2) - kPi * d * w4 * db * db -
           4 * d * g1 * a1 * w3 + d * a1 * a1 * kPi * w2 +
           3 * a1 * w * (g1 + d * b1) - a1 * a1 * kPi) *
          r;
  const double comp1 =
      kPi / (48 * std::pow(d, 5) * std::pow(w, 10)) * (d * w * sq * bracket + rest);

  // Second component, prefactor pi / (24 d^5 w^10 (dw^2 - 1)).
  double bracket2 =
      16 * (d2 * w2 + 3 * d2 - 6 * d + 3) * q * q * q * z * z * z -
      8 * d2 * w2 * a1 * (2 * d * w2 + 9 * d - 9) * q * q * z * z +
      2 * q *
          ((3 * d2 * w2 + 5 * d2 - 10 * d + 5) * r * r -
           4 * d2 * w3 * m * (4 * d * b1 - g1) * r +
           4 * d4 * w4 * (2 * w2 * a2 + 3 * a1 * a1)) *
          z +
      (2 * kPi * d2 * m * db * w3 - 2 * d3 * w4 * a1 - 5 * d2 * a1 * m * w2) * r *
          r +
      4 * a1 * d4 * w5 * (4 * d * b1 - g1) * r;
  double rest2 =
      -96 * kPi * m * m * std::pow(q, 4) * z * z * z +
      24 * m * q * q *
          (d3 * (d * b1 + 3 * g1) * w5 + 6 * d3 * w4 * a1 * kPi -
           3 * d2 * (d * b1 + g1) * w3 - 3 * d * (2 * d * a1 * kPi + d * r - r) * w2 +
           3 * r * m) *
          z * z -
      24 * q * d2 * w2 * a1 *
          (d3 * (d * b1 + 3 * g1) * w5 + 2 * d3 * w4 * a1 * kPi -
           3 * d2 * (d * b1 + g1) * w3 - d * (3 * d * r + 2 * d * a1 * kPi - 3 * r) * w2 +
           3 * r * m) *
          z -
      r * (10 * m * m * (1 - d * w2) * r * r -
           3 * m * d2 * w3 * (d * w2 * (3 * d * b1 + 5 * g1) - 5 * d * b1 - 5 * g1) * r +
           12 * d4 * w4 * (d * w2 * (d * w2 * b1 * g1 - b1 * b1 * w2 * d2 + 3 * a1 * a1) -
                           3 * a1 * a1));
  const double comp2 = kPi / (24 * std::pow(d, 5) * std::pow(w, 10) * q) *
                       (1.5 * d2 * w * sq * bracket2 + rest2);
  return {comp1, comp2};
}

// ---------------------------------------------------------------------------
// Closed forms, Family B.
// ---------------------------------------------------------------------------

Vec2 g1_family_b(const CylPoint& p, const FamilyBCoeffs& c) {
  c.validate();
  const double w = c.w, b1 = c.beta[0], g1 = c.gamma[0];
  const double w3 = w * w * w;
  return {p.r * kPi * (g1 * w * w - b1) / w3,
          2 * b1 * p.z * kPi * (1 - c.d * w * w) / w3};
}

Vec2 g2_family_b1(const CylPoint& p, const FamilyBCoeffs& c) {
  c.validate();
  const double w = c.w, w2 = w * w;
  require(nearly(c.d * w2, 1.0), "g2_family_b1 requires d = 1/w^2");
  require(nearly(c.beta[0], c.gamma[0] * w2),
          "g2_family_b1 requires beta1 = gamma1*w^2");
  const double a1 = c.alpha[0], b2 = c.beta[1], g1 = c.gamma[0],
               g2 = c.gamma[1];
  const double r = p.r, z = p.z, w5 = std::pow(w, 5);
  return {r * kPi * (2 * g1 * z - w2 * g1 * a1 - 2 * w2 * g1 * z - w2 * b2 + w2 * w2 * g2) /
              w5,
          g1 * kPi * ((w2 - 1) * (r * r * w2 * w2 + 8 * z * z) + 8 * w2 * a1 * z) /
              (4 * w5)};
}

Vec2 g2_family_b2_general(const CylPoint& p, const FamilyBCoeffs& c) {
  c.validate();
  const double w = c.w, w2 = w * w;
  require(nearly(c.beta[0], c.gamma[0] * w2),
          "g2_family_b2_general requires beta1 = gamma1*w^2");
  const double d = c.d, a1 = c.alpha[0], b1 = c.beta[0], b2 = c.beta[1],
               g1 = c.gamma[0], g2 = c.gamma[1];
  const double r = p.r, z = p.z;
  const double w3 = w2 * w, w4 = w3 * w, w5 = w4 * w, w6 = w5 * w, w7 = w6 * w,
               w8 = w7 * w;
  const double comp1 =
      kPi * (w2 - 1) * (g1 * w2 + w2 * b1 * d - 4 * b1) * z * r / w7 +
      2 * kPi * b1 * (w2 * d - 1) * (2 * w2 * b1 * d + g1 * w2 - 3 * b1) * z / w8 +
      kPi *
          (w4 * (2 * g2 * w + g1 * g1 * kPi) + w3 * (g1 * a1 - 2 * b2) -
           w * (2 * g1 * kPi * w + 3 * a1) * b1 + kPi * b1 * b1) *
          r / (2 * w6);
  const double comp2 =
      kPi * b1 * (w2 - 1) * r * r / (4 * w3) -
      kPi * b1 * (2 * w2 * b1 * d + g1 * w2 - 3 * b1) * r / (2 * w4) -
      2 * kPi * b1 * (w2 - 1) * (w2 * d - 2) * z * z / w7 +
      kPi *
          (2 * kPi * b1 * b1 * w4 * d * d - 2 * d * w5 * b2 +
           (2 * b2 - d * b1 * a1) * w3 - 4 * kPi * b1 * b1 * w2 * d + 3 * b1 * w * a1 +
           2 * kPi * b1 * b1) *
          z / w6;
  return {comp1, comp2};
}

Vec2 g3_family_b1(const CylPoint& p, const FamilyBCoeffs& c) {
  c.validate();
  const double w = c.w, w2 = w * w;
  require(nearly(c.d * w2, 1.0), "g3_family_b1 requires d = 1/w^2");
  require(nearly(c.beta[0], c.gamma[0] * w2),
          "g3_family_b1 requires beta1 = gamma1*w^2");
  const double a1 = c.alpha[0], a2 = c.alpha[1];
  const double b2 = c.beta[1], b3 = c.beta[2];
  const double g1 = c.gamma[0], g2 = c.gamma[1], g3 = c.gamma[2];
  const double r = p.r, z = p.z;
  const double w3 = w2 * w, w4 = w3 * w, w5 = w4 * w, w7 = w5 * w2,
               w9 = w7 * w2;
  const double comp1 =
      kPi * g1 * (-5 * w4 + 7 * w2 - 5) * r * r * r / (16 * w5) -
      3 * kPi * g1 * (3 * w4 - 5 * w2 + 3) * z * z * r / w9 -
      kPi * g1 * g1 * (w2 - 1) * r * r / w4 -
      kPi *
          (6 * b2 * w2 + 14 * w2 * g1 * a1 - 18 * g1 * a1 - 6 * b2 + 2 * g2 * w4 +
           2 * g2 * w2) *
          z * r / w7 -
      kPi * w2 *
          (2 * g3 * w4 - 2 * w2 * g1 * a2 - 2 * w2 * b3 - 3 * g1 * a1 * a1 -
           3 * a1 * b2 + w2 * a1 * g2) *
          r / w7;
  const double comp2 =
      kPi * g1 * (7 * w4 - 8 * w2 + 7) * r * r * z / (8 * w5) +
      kPi * (3 * w2 * g1 * a1 + 4 * b2 * w2 - 7 * g1 * a1 - 4 * b2) * r * r /
          (16 * w3) +
      2 * kPi * g1 * g1 * (w2 - 1) * r * z / w4 +
      kPi * g1 * (2 * g1 * a1 - w2 * g2 + b2) * r / (2 * w2) +
      kPi * (7 * w2 * g1 * a1 - 9 * g1 * a1 + 2 * b2 * w2 - 2 * b2) * z * z / w7 +
      2 * kPi * g1 * (3 * w4 - 5 * w2 + 3) * z * z * z / w9 +
      kPi * (2 * w2 * g1 * a2 + 3 * g1 * a1 * a1 + 2 * a1 * b2) * z / w5;
  return {comp1, comp2};
}

// ---------------------------------------------------------------------------
// Numerical averaged functions of any order (the oracle).
// ---------------------------------------------------------------------------

namespace {

// Polynomial dependence of (a,b,c) on eps, plus the linear change; everything
// the reduced planar system needs, in a form that evaluates at complex eps.
struct ReducedModel {
  Mat3 M, Minv;
  double d = 0;
  std::array<double, 6> pa{}, pb{}, pc{};
};

ReducedModel make_model(const FamilyCoeffs& c) {
  ReducedModel m;
  m.M = family_change(c);
  m.Minv = m.M.inverse();
  if (const auto* a = std::get_if<FamilyACoeffs>(&c)) {
    m.d = a->d;
    m.pa = {-1.0 / a->d, a->alpha1, a->alpha2, 0, 0, 0};
    m.pb = {a->beta0(), a->beta1, a->beta2, 0, 0, 0};
    m.pc = {a->d * a->beta0(), a->gamma1, a->gamma2, 0, 0, 0};
  } else {
    const auto& b = std::get<FamilyBCoeffs>(c);
    m.d = b.d;
    m.pa[0] = -b.w * b.w;
    for (int i = 0; i < 5; ++i) {
      m.pa[i + 1] = b.alpha[i];
      m.pb[i + 1] = b.beta[i];
      m.pc[i + 1] = b.gamma[i];
    }
  }
  return m;
}

template <typename T>
T horner(const std::array<double, 6>& p, T e) {
  T v = T(p[5]);
  for (int i = 4; i >= 0; --i) v = v * e + T(p[i]);
  return v;
}

// dr/dtheta and dz/dtheta of the standard-form system at the point with polar
// angle theta, radius r, height z, for (possibly complex) eps; also reports
// the angular speed whose zero is the nearest singularity in eps.
template <typename T>
Eigen::Matrix<T, 2, 1> reduced_field(const ReducedModel& m, double theta,
                                     double r, double z, T eps,
                                     T* thdot_out = nullptr) {
  const T a = horner(m.pa, eps), b = horner(m.pb, eps), cc = horner(m.pc, eps);
  const Vec3 s(r * std::cos(theta), r * std::sin(theta), z);
  const Eigen::Matrix<T, 3, 1> P = (m.M * s).template cast<T>() * eps;
  Eigen::Matrix<T, 3, 1> f;
  f[0] = P[2];
  f[1] = b * (P[0] - m.d * P[1]);
  f[2] = (P[0] - a) * (P[0] - 1.0) * P[0] + P[1] + cc * P[2];
  const Eigen::Matrix<T, 3, 1> v = m.Minv.template cast<T>() * f / eps;
  const T thdot = (s[0] * v[1] - s[1] * v[0]) / (r * r);
  if (thdot_out) *thdot_out = thdot;
  return {(s[0] * v[0] + s[1] * v[1]) / (r * thdot), v[2] / thdot};
}

// Radius for the Taylor-extraction circle: stay well inside the nearest zero
// of the angular speed, estimated from its slope in eps.
double safe_radius(const ReducedModel& m, double theta, double r, double z,
                   double rho_max) {
  const double h = 1e-3;
  double w0, wp, wm;
  reduced_field<double>(m, theta, r, z, h, &wp);
  reduced_field<double>(m, theta, r, z, -h, &wm);
  w0 = 0.5 * (wp + wm);
  const double slope = std::abs(wp - wm) / (2 * h);
  if (slope < 1e-300) return rho_max;
  return std::clamp(0.2 * std::abs(w0) / slope, 2e-3, rho_max);
}

// Taylor coefficients G_k (k = 1..kmax) of the reduced field in eps at eps=0,
// via a trapezoid rule on a circle in the complex eps-plane.
using TaylorSet = std::array<Vec2, 6>;

TaylorSet eps_taylor(const ReducedModel& m, double theta, double r, double z,
                     int kmax, const GNumericOptions& o) {
  using C = std::complex<double>;
  const int N = o.eps_nodes;
  const double rho = safe_radius(m, theta, r, z, o.eps_radius);
  std::array<Eigen::Vector2cd, 6> acc;
  for (auto& a : acc) a.setZero();
  for (int j = 0; j < N; ++j) {
    const double ph = 2 * kPi * j / N;
    const auto F = reduced_field<C>(m, theta, r, z, std::polar(rho, ph));
    for (int k = 1; k <= kmax; ++k) acc[k] += F * std::polar(1.0, -ph * k);
  }
  TaylorSet G{};
  double rk = rho;
  for (int k = 1; k <= kmax; ++k, rk *= rho)
    G[k] = acc[k].real() / (N * rk);
  return G;
}

// Directional derivatives (orders 1..4) of every G_k along u, already
// contracted with u (not a unit vector): entry dk[ord] is D^k G_ord (u,..,u).
struct DirectionalSet {
  TaylorSet d1{}, d2{}, d3{}, d4{};
};

DirectionalSet dir_derivs(const ReducedModel& m, double theta, const Vec2& z0,
                          const Vec2& u, const TaylorSet& center, int kmax,
                          const GNumericOptions& o) {
  DirectionalSet out;
  const double un = u.norm();
  if (un < 1e-300) return out;
  const Vec2 uh = u / un;
  const double h = o.space_h;
  TaylorSet f[7];  // offsets -3h..+3h; f[3] is the center
  f[3] = center;
  for (int j : {-3, -2, -1, 1, 2, 3}) {
    const Vec2 q = z0 + (j * h) * uh;
    f[j + 3] = eps_taylor(m, theta, q[0], q[1], kmax, o);
  }
  const double u2 = un * un, u3 = u2 * un, u4 = u3 * un;
  for (int k = 1; k <= kmax; ++k) {
    const Vec2 &m3 = f[0][k], &m2 = f[1][k], &m1 = f[2][k], &c0 = f[3][k],
               &p1 = f[4][k], &p2 = f[5][k], &p3 = f[6][k];
    out.d1[k] = (8 * (p1 - m1) - (p2 - m2)) / (12 * h) * un;
    out.d2[k] = (-p2 + 16 * p1 - 30 * c0 + 16 * m1 - m2) / (12 * h * h) * u2;
    out.d3[k] =
        (-p3 + 8 * p2 - 13 * p1 + 13 * m1 - 8 * m2 + m3) / (8 * h * h * h) * u3;
    out.d4[k] = (-p3 + 12 * p2 - 39 * p1 + 56 * c0 - 39 * m1 + 12 * m2 - m3) /
                (6 * h * h * h * h) * u4;
  }
  return out;
}

}  // namespace

Vec2 g_numeric(int order, const CylPoint& p, const FamilyCoeffs& c,
               const GNumericOptions& opts) {
  require(order >= 1 && order <= 5, "g_numeric order must be in [1,5]");
  require(p.r > 0, "g_numeric requires r > 0");
  family_validate(c);
  const ReducedModel model = make_model(c);
  const Vec2 z0(p.r, p.z);
  const int m = order;

  IvpProblem prob;
  prob.dimension = 2 * m;
  prob.t0 = 0;
  prob.t1 = 2 * kPi;
  prob.y0 = VecX::Zero(2 * m);
  prob.rhs = [&](double th, const VecX& Y) -> VecX {
    auto yi = [&](int i) { return Vec2(Y[2 * i - 2], Y[2 * i - 1]); };
    const TaylorSet G = eps_taylor(model, th, p.r, p.z, m, opts);
    VecX dY = VecX::Zero(2 * m);
    auto set = [&](int i, const Vec2& v) {
      dY[2 * i - 2] = v[0];
      dY[2 * i - 1] = v[1];
    };
    set(1, G[1]);
    if (m >= 2) {
      const Vec2 y1 = yi(1);
      const auto D1 = dir_derivs(model, th, z0, y1, G, m, opts);
      set(2, 2 * G[2] + 2 * D1.d1[1]);
      if (m >= 3) {
        const Vec2 y2 = yi(2);
        const auto D2 = dir_derivs(model, th, z0, y2, G, m, opts);
        set(3, 6 * G[3] + 6 * D1.d1[2] + 3 * D1.d2[1] + 3 * D2.d1[1]);
        if (m >= 4) {
          const Vec2 y3 = yi(3);
          const auto D3 = dir_derivs(model, th, z0, y3, G, m, opts);
          const auto Dp = dir_derivs(model, th, z0, y1 + y2, G, m, opts);
          const auto Dm = dir_derivs(model, th, z0, y1 - y2, G, m, opts);
          // Polarization: D^2 G (y1, y2) = (D^2(y1+y2) - D^2(y1-y2)) / 4.
          const Vec2 g1_y1y2 = (Dp.d2[1] - Dm.d2[1]) / 4;
          set(4, 24 * G[4] + 24 * D1.d1[3] + 12 * D1.d2[2] + 12 * D2.d1[2] +
                     12 * g1_y1y2 + 4 * D1.d3[1] + 4 * D3.d1[1]);
          if (m >= 5) {
            const Vec2 y4 = yi(4);
            const auto D4 = dir_derivs(model, th, z0, y4, G, m, opts);
            const auto Dp3 = dir_derivs(model, th, z0, y1 + y3, G, m, opts);
            const auto Dm3 = dir_derivs(model, th, z0, y1 - y3, G, m, opts);
            const Vec2 g2_y1y2 = (Dp.d2[2] - Dm.d2[2]) / 4;
            const Vec2 g1_y1y3 = (Dp3.d2[1] - Dm3.d2[1]) / 4;
            // D^3 G (y1, y1, y2) = (D^3(y1+y2) - D^3(y1-y2) - 2 D^3(y2)) / 6.
            const Vec2 g1_y1y1y2 = (Dp.d3[1] - Dm.d3[1] - 2 * D2.d3[1]) / 6;
            set(5, 120 * G[5] + 120 * D1.d1[4] + 60 * D1.d2[3] + 60 * D2.d1[3] +
                       60 * g2_y1y2 + 20 * D1.d3[2] + 20 * D3.d1[2] +
                       20 * g1_y1y3 + 15 * D2.d2[1] + 5 * D1.d4[1] +
                       30 * g1_y1y1y2 + 5 * D4.d1[1]);
          }
        }
      }
    }
    return dY;
  };

  IntegratorConfig cfg;
  if (m <= 2) {
    cfg.rtol = 1e-12;
    cfg.atol = 1e-14;
  } else if (m == 3) {
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
  } else {
    cfg.rtol = 1e-7;
    cfg.atol = 1e-9;
  }
  const Trajectory tr = rk_integrate(prob, cfg);
  double fact = 1;
  for (int i = 2; i <= m; ++i) fact *= i;
  return Vec2(tr.back()[2 * m - 2], tr.back()[2 * m - 1]) / fact;
}

namespace {

// Reduced field with complex state, needed when the whole flow is followed at
// complex eps (the state leaves the real slice immediately).
Eigen::Vector2cd reduced_field_c(const ReducedModel& m, double theta,
                                 const Eigen::Vector2cd& x,
                                 std::complex<double> eps) {
  using C = std::complex<double>;
  const C a = horner(m.pa, eps), b = horner(m.pb, eps), cc = horner(m.pc, eps);
  const C r = x[0], z = x[1];
  Eigen::Vector3cd s(r * std::cos(theta), r * std::sin(theta), z);
  const Eigen::Vector3cd P = (m.M.cast<C>() * s) * eps;
  Eigen::Vector3cd f;
  f[0] = P[2];
  f[1] = b * (P[0] - m.d * P[1]);
  f[2] = (P[0] - a) * (P[0] - 1.0) * P[0] + P[1] + cc * P[2];
  const Eigen::Vector3cd v = m.Minv.cast<C>() * f / eps;
  const C thdot = (s[0] * v[1] - s[1] * v[0]) / (r * r);
  return {(s[0] * v[0] + s[1] * v[1]) / (r * thdot), v[2] / thdot};
}

}  // namespace

Vec2 g_displacement(int order, const CylPoint& p, const FamilyCoeffs& c,
                    double eps_radius, int eps_nodes, int flow_steps) {
  using C = std::complex<double>;
  using V2c = Eigen::Vector2cd;
  require(order >= 1 && order <= 5, "g_displacement order must be in [1,5]");
  require(p.r > 0, "g_displacement requires r > 0");
  family_validate(c);
  const ReducedModel model = make_model(c);
  const double rho = safe_radius(model, 0, p.r, p.z, eps_radius);
  const V2c x0(C(p.r), C(p.z));
  const double h = 2 * kPi / flow_steps;
  Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
  for (int j = 0; j < eps_nodes; ++j) {
    const double ph = 2 * kPi * j / eps_nodes;
    const C eps = std::polar(rho, ph);
    V2c x = x0;
    for (int i = 0; i < flow_steps; ++i) {
      const double t = i * h;
      const V2c k1 = reduced_field_c(model, t, x, eps);
      const V2c k2 = reduced_field_c(model, t + h / 2, V2c(x + h / 2 * k1), eps);
      const V2c k3 = reduced_field_c(model, t + h / 2, V2c(x + h / 2 * k2), eps);
      const V2c k4 = reduced_field_c(model, t + h, V2c(x + h * k3), eps);
      x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    acc += (x - x0) * std::polar(1.0, -ph * order);
  }
  return acc.real() / (eps_nodes * std::pow(rho, order));
}

// ---------------------------------------------------------------------------
// Lyapunov-Schmidt branch data and scalar predictions.
// ---------------------------------------------------------------------------

double B2BranchData::zeta1(double r) const {
  const double w = c.w, d = c.d, g1 = c.gamma[0];
  return -r * (r - r * w * w - 4 * g1 * w + 4 * g1 * w * w * w * d) /
         (8 * (d * w * w - 1));
}

double B2BranchData::f1(double r) const {
  const double w = c.w;
  return r * kPi * (c.gamma[1] * w * w - c.beta[1] - c.alpha[0] * c.gamma[0]) /
         std::pow(w, 3);
}

double B2BranchData::f2(double r) const {
  const double w = c.w, d = c.d, g1 = c.gamma[0];
  const double w2 = w * w, w4 = w2 * w2, w6 = w4 * w2;
  const double N = c.beta[2] + c.alpha[1] * g1 + c.alpha[0] * c.gamma[1] -
                   c.gamma[2] * w2 - g1 * g1 * g1 * d * d * w4 +
                   g1 * g1 * g1 * d * w2;
  return kPi * r / (16 * std::pow(w, 5) * (1 - d * w2)) *
         (g1 * (1 - 5 * w2 + 3 * d * w2 + w4 - 3 * d * w4 + 3 * d * w6) * r * r +
          16 * w2 * (d * w2 - 1) * N);
}

B2BranchData lyapunov_schmidt_b2(const FamilyBCoeffs& c) {
  c.validate();
  const double w = c.w, w2 = w * w;
  require(nearly(c.beta[0], c.gamma[0] * w2),
          "lyapunov_schmidt_b2 requires beta1 = gamma1*w^2");
  require(!nearly(c.d * w2, 1.0), "lyapunov_schmidt_b2 requires d != 1/w^2");
  B2BranchData out;
  out.c = c;
  out.delta_r = 2 * c.gamma[0] * kPi * (1 - c.d * w2) / w;
  require(out.delta_r != 0,
          "reduction invalid: Delta_r = 0 (gamma1 = 0 or d*w^2 = 1)");
  const double g1 = c.gamma[0], d = c.d;
  const double w4 = w2 * w2, w6 = w4 * w2;
  const double N = c.beta[2] + c.alpha[1] * g1 + c.alpha[0] * c.gamma[1] -
                   c.gamma[2] * w2 - g1 * g1 * g1 * d * d * w4 +
                   g1 * g1 * g1 * d * w2;
  out.eta = (1 - d * w2) * N /
            (g1 * (1 - 5 * w2 + w4 + 3 * d * w2 - 3 * d * w4 + 3 * d * w6));
  out.rstar = out.eta > 0 ? 4 * w * std::sqrt(out.eta)
                          : std::numeric_limits<double>::quiet_NaN();
  return out;
}

FamilyAPredictions predictions_family_a(const FamilyACoeffs& c) {
  c.validate();
  FamilyAPredictions p;
  const double d = c.d, w = c.w, b0 = c.beta0();
  const double a1 = c.alpha1, b1 = c.beta1, g1 = c.gamma1;
  const double w2 = w * w, w4 = w2 * w2;
  const double q = w2 * d - 1;
  p.l0 = 2 * w4 * d * (d * b1 - g1) * (d * b1 - g1) + 2 * a1 * a1 * (d * w2 - 1);
  p.l1 = w * d * d * b0 * (15 * w2 * d * d + 41 * d * d - 82 * d + 41) -
         6 * kPi * (d - 1) * (d - 1) * q;
  p.l12 = kPi * p.l1 / (128 * std::pow(d, 5) * std::pow(w, 10));
  const double rad = p.l0 / q;
  if (rad >= 0) {
    const double mag = d * d / (d - 1) * std::sqrt(rad) * w2;
    p.rstar_plus = mag;
    p.rstar_minus = -mag;
  } else {
    p.rstar_plus = p.rstar_minus = std::numeric_limits<double>::quiet_NaN();
  }
  p.zstar = d * w2 * (d * b0 * a1 + w2 * d * b1 - w2 * g1) /
            (2 * b0 * (d - 1) * q);
  p.det_dg1 = -kPi * kPi * p.l0 / (d * std::pow(w, 6));
  p.trace_coeff = 2 * kPi * (b1 * d - g1) / w;
  p.verdicts.push_back(
      {"periodic solution exists (general form)", "l0*(w^2*d-1) > 0 and l0 != 0",
       p.l0 * q > 0});
  p.verdicts.push_back(
      {"periodic solution exists (proposition form)", "l0 < 0", p.l0 < 0});
  p.verdicts.push_back({"periodic solution attracting",
                        "beta1*d - gamma1 > 0 and l0 < 0",
                        b1 * d - g1 > 0 && p.l0 < 0});
  p.verdicts.push_back({"torus repelling at criticality", "l12 > 0", p.l12 > 0});
  return p;
}

FamilyBPredictions predictions_family_b(const FamilyBCoeffs& c) {
  c.validate();
  FamilyBPredictions p;
  const double w = c.w, d = c.d, w2 = w * w;
  const double a1 = c.alpha[0], b2 = c.beta[1], g1 = c.gamma[0],
               g2 = c.gamma[1];
  const double w3 = w2 * w, w4 = w2 * w2, w5 = w4 * w, w6 = w4 * w2;
  p.k0 = (g1 * a1 - w2 * g2 + b2) * (g1 * a1 + w2 * g2 - b2);
  const double N = c.beta[2] + c.alpha[1] * g1 + a1 * g2 - c.gamma[2] * w2 -
                   g1 * g1 * g1 * d * d * w4 + g1 * g1 * g1 * d * w2;
  p.eta = (1 - d * w2) * N /
          (g1 * (1 - 5 * w2 + w4 + 3 * d * w2 - 3 * d * w4 + 3 * d * w6));
  p.lambda1 = 2 * g1 * kPi * (1 - d * w2) / w;
  p.lambda2 = 2 * kPi * N / w3;
  p.l13 = (41 * w4 - 67 * w2 + 41) * kPi * g1 / (128 * w5);
  p.rstar = p.k0 >= 0 ? std::sqrt(2.0) * std::sqrt(p.k0) /
                            std::abs((w2 - 1) * g1)
                      : std::numeric_limits<double>::quiet_NaN();
  p.zstar = w2 * (w2 * g2 - g1 * a1 - b2) / (2 * g1 * (w2 - 1));
  p.rstar_b2 = p.eta > 0 ? 4 * w * std::sqrt(p.eta)
                         : std::numeric_limits<double>::quiet_NaN();
  p.det_dg2 = 2 * kPi * kPi * p.k0 / w6;
  p.trace_coeff = 2 * kPi * (b2 - g2 * w2) / w3;
  p.verdicts.push_back({"B1 fixed point real", "k0 > 0", p.k0 > 0});
  p.verdicts.push_back({"B1 fixed point in domain", "(w^2-1)*gamma1 > 0",
                        (w2 - 1) * g1 > 0});
  p.verdicts.push_back({"B1 periodic solution attracting",
                        "beta2 < gamma2*w^2", b2 < g2 * w2});
  p.verdicts.push_back({"B2 branch zero real", "eta > 0", p.eta > 0});
  p.verdicts.push_back(
      {"torus attracting at criticality", "l13 < 0", p.l13 < 0});
  return p;
}

}  // namespace fhn
