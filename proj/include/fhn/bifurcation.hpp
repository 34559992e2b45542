#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "fhn/dynsys.hpp"
#include "fhn/poincare.hpp"

namespace fhn {

enum class Stability { attracting, repelling, saddle, non_hyperbolic };

std::string to_string(Stability s);

// A classification together with the evidence (eigenvalues or series
// coefficients) and the convention it was judged under.
struct StabilityVerdict {
  Stability classification = Stability::non_hyperbolic;
  std::string source;  // "averaged-jacobian", "series-expansion", "numerical-floquet"
  std::vector<std::complex<double>> witnesses;
};

// Routh-Hurwitz classification of a planar vector-field Jacobian:
// attracting iff tr < 0 and det > 0, repelling iff tr > 0 and det > 0,
// saddle iff det < 0, non-hyperbolic within tol of the boundaries.
StabilityVerdict classify_averaged(const Mat2& jac, double tol = 1e-12);

// Map convention: |multiplier| vs 1.
StabilityVerdict classify_multipliers(const std::complex<double>& l1,
                                      const std::complex<double>& l2,
                                      double tol = 1e-12);

// A pair of eigenvalue expansions lambda(eps) = sum coeff * eps^power with
// strictly increasing powers.
struct EigSeries {
  struct Term {
    int power = 0;
    double coeff = 0;
  };
  std::array<std::vector<Term>, 2> eig;
  int truncation_order = 2;

  double eval(int which, double eps) const;
};

// Eigenvalue series of A0 + eps A1 + eps^2 A2 through second order when
// A0 = diag(0, a022). Requires a022 != 0.
EigSeries jordan_split(const Mat2& a0, const Mat2& a1, const Mat2& a2);

// Multiplier expansions 1 + eps*lambda1 + O(eps^2), 1 + eps^3*lambda2 +
// O(eps^4) of the section map on the degenerate branch of the second family
// (beta1 = gamma1 w^2, beta2 = w^2 gamma2 - alpha1 gamma1, d != 1/w^2,
// gamma1 != 0).
struct B2Eigen {
  double lambda1 = 0;
  double lambda2 = 0;
  EigSeries series;
  StabilityVerdict verdict;
};

B2Eigen b2_eigen_expansion(const FamilyBCoeffs& c);

// Neimark-Sacker setup for the distinguished parameter of each family
// (first family: gamma1; second family, resonant class: beta2).
struct NSConditions {
  std::string parameter;
  double mu0 = 0;  // critical parameter value
  double w0 = 0;   // imaginary part of the eigenvalue pair at criticality
  double d0 = 0;   // transversality derivative d(Re lambda)/d(mu) at mu0
  bool degenerate = false;  // w0 = 0, no eigenvalue pair crossing
};

NSConditions ns_conditions(const FamilyCoeffs& c);

// First Lyapunov coefficient of a planar map at a fixed point from its
// finite-difference Taylor tensors. The Jacobian is brought to real Jordan
// (rotation-scaling) form first; basis_condition records the conditioning of
// that change. l1 evaluates the fixed reference pair p = (1/2, -i/sqrt(2));
// l1_normalized uses the properly normalized eigenpair instead (signs must
// agree, magnitudes need not).
struct LyapunovResult {
  double l1 = 0;
  double l1_normalized = 0;
  double theta = 0;           // rotation angle actually used
  double basis_condition = 0; // condition number of the Jordan basis change
};

// theta defaults (NaN) to the argument of the computed eigenvalue. Throws
// std::domain_error on strong resonance (|1 - e^{ik theta}| < 1e-4 for
// k = 1..4) and std::invalid_argument when the multipliers are not a
// complex pair.
LyapunovResult lyapunov_coeff(
    const MapDerivatives& md,
    double theta = std::numeric_limits<double>::quiet_NaN());

// Leading coefficient of the Lyapunov-coefficient series in eps:
// first family (2, pi*l1/(128 d^5 w^10)); second family, resonant class
// (3, (41w^4 - 67w^2 + 41) pi gamma1 / (128 w^5)).
struct ClosedFormLyapunov {
  int jstar = 0;
  double value = 0;
};

ClosedFormLyapunov lyapunov_closed_form(const FamilyCoeffs& c);

// All closed-form Neimark-Sacker data for one coefficient set.
struct NSReport {
  NSConditions cond;
  int jstar = 0;
  double l1j = 0;       // l_{1,jstar}
  double mu_curve = 0;  // critical-curve value to available order (= mu0)
  int mu_curve_order = 0;
};

NSReport ns_report(const FamilyCoeffs& c);

enum class TorusSide { no_torus_side, torus_side, on_curve, undetermined };

std::string to_string(TorusSide s);

struct TorusVerdict {
  TorusSide side = TorusSide::undetermined;
  Stability torus = Stability::non_hyperbolic;  // meaningful on torus side
  Stability orbit = Stability::non_hyperbolic;
};

// Sign test l_{1,j*} (mu - mu(eps)) d0 < 0 for torus existence; the torus is
// repelling when l_{1,j*} > 0 and attracting when < 0, with the periodic
// orbit carrying the opposite stability on the torus side.
TorusVerdict torus_verdict(const NSReport& ns, double mu, double tol = 1e-12);

// Critical parameter value at the given eps, located by a secant iteration
// on |lambda(mu, eps)| = 1 where lambda is the multiplier pair of the
// finite-difference Jacobian of the section return map at its fixed point.
// The distinguished parameter of ns_conditions is varied; the seed is mu0.
struct CriticalMu {
  double mu = 0;
  bool converged = false;
  int iterations = 0;
  double modulus_defect = 0;  // |lambda| - 1 at the returned mu
  Vec2 fixed_point{0, 0};
  double theta = 0;  // argument of the multiplier at the returned mu
};

CriticalMu critical_parameter(const FamilyCoeffs& c, const Vec2& guess,
                              const SectionOptions& opts = {},
                              double tol = 1e-12, int max_iters = 40);

// The coefficient set with the distinguished parameter replaced by mu.
FamilyCoeffs with_ns_parameter(const FamilyCoeffs& c, double mu);

}  // namespace fhn
