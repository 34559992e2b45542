#pragma once

#include <string>
#include <vector>

#include "fhn/dynsys.hpp"

namespace fhn {

// A sign-based classification together with the inequality that produced it.
struct Verdict {
  std::string name;
  std::string inequality;
  bool holds = false;
};

struct FamilyAPredictions {
  double l0 = 0, l1 = 0, l12 = 0;
  double rstar_plus = 0, rstar_minus = 0, zstar = 0;  // NaN when not real
  double det_dg1 = 0;
  double trace_coeff = 0;  // linear coefficient 2*pi*(beta1*d - gamma1)/w
  std::vector<Verdict> verdicts;
};

struct FamilyBPredictions {
  double k0 = 0, eta = 0, lambda1 = 0, lambda2 = 0, l13 = 0;
  double rstar = 0, zstar = 0;  // fixed point of g2 under the B1 conditions
  double rstar_b2 = 0;          // branch zero 4*w*sqrt(eta); NaN when eta < 0
  double det_dg2 = 0;
  double trace_coeff = 0;  // linear coefficient 2*pi*(beta2 - gamma2*w^2)/w^3
  std::vector<Verdict> verdicts;
};

// Closed-form averaged functions (components g^1, g^2 at a section point).
Vec2 g1_family_a(const CylPoint& p, const FamilyACoeffs& c);
Vec2 g2_family_a(const CylPoint& p, const FamilyACoeffs& c);
Vec2 g1_family_b(const CylPoint& p, const FamilyBCoeffs& c);
// Requires d = 1/w^2 and beta1 = gamma1*w^2.
Vec2 g2_family_b1(const CylPoint& p, const FamilyBCoeffs& c);
// Requires beta1 = gamma1*w^2 only.
Vec2 g2_family_b2_general(const CylPoint& p, const FamilyBCoeffs& c);
// Third-order averaged function under the B1 conditions.
Vec2 g3_family_b1(const CylPoint& p, const FamilyBCoeffs& c);

struct GNumericOptions {
  double eps_radius = 0.02;  // radius of the Taylor-extraction circle in eps
  int eps_nodes = 32;       // trapezoid nodes on that circle
  double space_h = 0.005;   // spatial step for the derivative tensors
};

// Order-i averaged function computed from the reduced system alone: the
// eps-Taylor fields are extracted numerically and the iterated integrals are
// propagated as one coupled ODE in the angle. Serves as the oracle for every
// closed form above.
Vec2 g_numeric(int order, const CylPoint& p, const FamilyCoeffs& c,
               const GNumericOptions& opts = {});

// Second, independent route to the same value: the order-i Taylor coefficient
// in eps of the time-2*pi displacement of the reduced system, obtained by
// integrating the flow at complex eps on a Cauchy circle. Shares no code path
// with the iterated-integral propagation in g_numeric, so agreement between
// the two certifies both.
Vec2 g_displacement(int order, const CylPoint& p, const FamilyCoeffs& c,
                    double eps_radius = 0.01, int eps_nodes = 64,
                    int flow_steps = 4096);

// Branch data of the reduction along the zero set {(r, 0)} when the
// first-order averaged function vanishes identically except in z.
struct B2BranchData {
  FamilyBCoeffs c;
  double delta_r = 0;  // dz-entry of Dg1 on the branch, 2*gamma1*pi*(1-dw^2)/w
  double eta = 0;
  double rstar = 0;  // simple zero 4*w*sqrt(eta) of f2 (NaN when eta < 0)

  double zeta1(double r) const;
  double f1(double r) const;
  double f2(double r) const;
};

B2BranchData lyapunov_schmidt_b2(const FamilyBCoeffs& c);

FamilyAPredictions predictions_family_a(const FamilyACoeffs& c);
FamilyBPredictions predictions_family_b(const FamilyBCoeffs& c);

}  // namespace fhn
