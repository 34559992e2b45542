#pragma once

#include <array>
#include <complex>
#include <variant>

#include <Eigen/Dense>

namespace fhn {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Raw coefficients of the cubic 3D vector field
//   x' = z,  y' = b(x - d y),  z' = (x-a)(x-1)x + y + c z.
struct ParamsFHN {
  double a = 0, b = 0, c = 0, d = 0;
};

// Unfolding coefficients of the first Hopf-zero family:
//   (a,b,c) = (-1/d + e a1 + e^2 a2,  b0 + e b1 + e^2 b2,  d b0 + e g1 + e^2 g2),
//   b0 = (1/d) sqrt(1/d - w^2).
struct FamilyACoeffs {
  double d = 0, w = 0, eps = 0;
  double alpha1 = 0, alpha2 = 0;
  double beta1 = 0, beta2 = 0;
  double gamma1 = 0, gamma2 = 0;

  double beta0() const;
  // Throws std::invalid_argument when d > 0, d != 1, w > 0 or d(1 - d w^2) > 0 fails.
  void validate() const;
};

// Unfolding coefficients of the second Hopf-zero family:
//   (a,b,c) = (-w^2 + sum e^i alpha[i-1], sum e^i beta[i-1], sum e^i gamma[i-1]), i = 1..5.
struct FamilyBCoeffs {
  double d = 0, w = 0, eps = 0;
  std::array<double, 5> alpha{}, beta{}, gamma{};

  void validate() const;  // w > 0
};

using FamilyCoeffs = std::variant<FamilyACoeffs, FamilyBCoeffs>;

// Reduced state on the transversal section theta = 0 of the cylindrical
// standard form. theta is carried for points off the section.
struct CylPoint {
  double r = 0, z = 0;
  double theta = 0;  // normalized to [0, 2*pi); 0 by convention at r = 0
};

Vec3 fhn_field(const Vec3& p, const ParamsFHN& q);
Mat3 fhn_field_jacobian(const Vec3& p, const ParamsFHN& q);

ParamsFHN params_from_family_a(const FamilyACoeffs& c);
ParamsFHN params_from_family_b(const FamilyBCoeffs& c);

// Eigenvalues of the Jacobian at the origin, sorted by |Im| then Re.
std::array<std::complex<double>, 3> hopf_zero_spectrum(const ParamsFHN& q);

// Linear change (x,y,z) = M (X,Y,Z) bringing the origin's linear part to
// block form; the scaled coordinates are (X,Y,Z) = eps * (x1,x2,x3).
Mat3 linear_change_a(const FamilyACoeffs& c);
Mat3 linear_change_b(const FamilyBCoeffs& c);

// Physical <-> scaled standard coordinates. Throws when eps == 0.
Vec3 phys_to_standard_a(const Vec3& p, const FamilyACoeffs& c);
Vec3 standard_to_phys_a(const Vec3& s, const FamilyACoeffs& c);
Vec3 phys_to_standard_b(const Vec3& p, const FamilyBCoeffs& c);
Vec3 standard_to_phys_b(const Vec3& s, const FamilyBCoeffs& c);

CylPoint standard_to_cyl(const Vec3& s);
Vec3 cyl_to_standard(const CylPoint& p);

// Variant helpers.
double family_eps(const FamilyCoeffs& c);
double family_w(const FamilyCoeffs& c);
ParamsFHN family_params(const FamilyCoeffs& c);
Mat3 family_change(const FamilyCoeffs& c);
void family_validate(const FamilyCoeffs& c);
Vec3 family_phys_to_standard(const Vec3& p, const FamilyCoeffs& c);
Vec3 family_standard_to_phys(const Vec3& s, const FamilyCoeffs& c);

}  // namespace fhn
