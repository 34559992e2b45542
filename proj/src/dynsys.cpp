#include "fhn/dynsys.hpp"

#include <cmath>
#include <stdexcept>

namespace fhn {

double FamilyACoeffs::beta0() const { return std::sqrt(1.0 / d - w * w) / d; }

void FamilyACoeffs::validate() const {
  if (!(d > 0) || d == 1.0)
    throw std::invalid_argument("family A requires d > 0 and d != 1");
  if (!(w > 0)) throw std::invalid_argument("family A requires w > 0");
  if (!(d * (1.0 - d * w * w) > 0))
    throw std::invalid_argument("family A requires d(1 - d w^2) > 0");
}

void FamilyBCoeffs::validate() const {
  if (!(w > 0)) throw std::invalid_argument("family B requires w > 0");
}

Vec3 fhn_field(const Vec3& p, const ParamsFHN& q) {
  const double x = p[0], y = p[1], z = p[2];
  return {z, q.b * (x - q.d * y), (x - q.a) * (x - 1.0) * x + y + q.c * z};
}

Mat3 fhn_field_jacobian(const Vec3& p, const ParamsFHN& q) {
  const double x = p[0];
  Mat3 J;
  J << 0, 0, 1,                                                   //
      q.b, -q.b * q.d, 0,                                         //
      3 * x * x - 2 * (1 + q.a) * x + q.a, 1, q.c;                //
  return J;
}

ParamsFHN params_from_family_a(const FamilyACoeffs& c) {
  c.validate();
  const double e = c.eps, b0 = c.beta0();
  return {-1.0 / c.d + e * c.alpha1 + e * e * c.alpha2,
          b0 + e * c.beta1 + e * e * c.beta2,
          c.d * b0 + e * c.gamma1 + e * e * c.gamma2, c.d};
}

ParamsFHN params_from_family_b(const FamilyBCoeffs& c) {
  c.validate();
  double a = -c.w * c.w, b = 0, g = 0, ei = 1;
  for (int i = 0; i < 5; ++i) {
    ei *= c.eps;
    a += ei * c.alpha[i];
    b += ei * c.beta[i];
    g += ei * c.gamma[i];
  }
  return {a, b, g, c.d};
}

std::array<std::complex<double>, 3> hopf_zero_spectrum(const ParamsFHN& q) {
  const Mat3 J = fhn_field_jacobian(Vec3::Zero(), q);
  Eigen::EigenSolver<Mat3> es(J);
  std::array<std::complex<double>, 3> ev{es.eigenvalues()[0],
                                         es.eigenvalues()[1],
                                         es.eigenvalues()[2]};
  std::sort(ev.begin(), ev.end(), [](auto u, auto v) {
    if (std::abs(u.imag()) != std::abs(v.imag()))
      return std::abs(u.imag()) < std::abs(v.imag());
    return u.real() < v.real();
  });
  return ev;
}

Mat3 linear_change_a(const FamilyACoeffs& c) {
  c.validate();
  const double d = c.d, w = c.w, b0 = c.beta0();
  const double dw2 = d * w * w;
  Mat3 M;
  // (x,y,z) as linear functions of (X,Y,Z).
  M << 0, 1.0 / (2 * dw2), (dw2 - 1) / dw2,                        //
      -b0 / (2 * w), (1 - dw2) / (2 * d * d * w * w),              //
      -(1 - dw2) / (d * d * w * w),                                //
      1.0 / (2 * w * d), 0, 0;                                     //
  return M;
}

Mat3 linear_change_b(const FamilyBCoeffs& c) {
  c.validate();
  const double w = c.w;
  Mat3 M;
  M << 0, 0.5, 1.0 / (w * w),  //
      0, 0, 1,                 //
      w / 2, 0, 0;             //
  return M;
}

namespace {
Vec3 to_standard(const Vec3& p, const Mat3& M, double eps) {
  if (eps == 0) throw std::invalid_argument("scaling undefined at eps = 0");
  return M.inverse() * p / eps;
}
Vec3 to_phys(const Vec3& s, const Mat3& M, double eps) {
  if (eps == 0) throw std::invalid_argument("scaling undefined at eps = 0");
  return M * (eps * s);
}
}  // namespace

Vec3 phys_to_standard_a(const Vec3& p, const FamilyACoeffs& c) {
  return to_standard(p, linear_change_a(c), c.eps);
}
Vec3 standard_to_phys_a(const Vec3& s, const FamilyACoeffs& c) {
  return to_phys(s, linear_change_a(c), c.eps);
}
Vec3 phys_to_standard_b(const Vec3& p, const FamilyBCoeffs& c) {
  return to_standard(p, linear_change_b(c), c.eps);
}
Vec3 standard_to_phys_b(const Vec3& s, const FamilyBCoeffs& c) {
  return to_phys(s, linear_change_b(c), c.eps);
}

CylPoint standard_to_cyl(const Vec3& s) {
  CylPoint p;
  p.r = std::hypot(s[0], s[1]);
  p.z = s[2];
  p.theta = p.r == 0 ? 0.0 : std::atan2(s[1], s[0]);
  if (p.theta < 0) p.theta += 2 * M_PI;
  return p;
}

Vec3 cyl_to_standard(const CylPoint& p) {
  return {p.r * std::cos(p.theta), p.r * std::sin(p.theta), p.z};
}

double family_eps(const FamilyCoeffs& c) {
  return std::visit([](const auto& f) { return f.eps; }, c);
}
double family_w(const FamilyCoeffs& c) {
  return std::visit([](const auto& f) { return f.w; }, c);
}
ParamsFHN family_params(const FamilyCoeffs& c) {
  if (auto* a = std::get_if<FamilyACoeffs>(&c)) return params_from_family_a(*a);
  return params_from_family_b(std::get<FamilyBCoeffs>(c));
}
Mat3 family_change(const FamilyCoeffs& c) {
  if (auto* a = std::get_if<FamilyACoeffs>(&c)) return linear_change_a(*a);
  return linear_change_b(std::get<FamilyBCoeffs>(c));
}
void family_validate(const FamilyCoeffs& c) {
  std::visit([](const auto& f) { f.validate(); }, c);
}
Vec3 family_phys_to_standard(const Vec3& p, const FamilyCoeffs& c) {
  return to_standard(p, family_change(c), family_eps(c));
}
Vec3 family_standard_to_phys(const Vec3& s, const FamilyCoeffs& c) {
  return to_phys(s, family_change(c), family_eps(c));
}

}  // namespace fhn
