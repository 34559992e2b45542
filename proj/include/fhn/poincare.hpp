#pragma once

#include <functional>
#include <vector>

#include "fhn/dynsys.hpp"

namespace fhn {

using Map2 = std::function<Vec2(const Vec2&)>;

struct SectionOptions {
  int n_returns = 1;        // number of full turns before reporting
  bool reverse_time = false;
  double rtol = 1e-12;
  double atol = 1e-13;
  double max_periods = 500;  // give up after this many nominal turns
  double escape_radius = 1e8;  // guard on |(x1,x2,x3)| in standard coordinates
};

struct SectionResult {
  Vec2 point;          // (r, z) back on the section
  double return_time;  // elapsed physical time (positive also in reverse mode)
};

// n-th return map of the flow to the half-plane theta = 0 of the cylindrical
// standard coordinates, computed by integrating the conjugated flow and
// locating the angle crossing by a Newton iteration in time.
SectionResult poincare_map(const FamilyCoeffs& c, const Vec2& rz,
                           const SectionOptions& opts = {});

// Convenience wrapper returning just the section point.
Map2 make_section_map(const FamilyCoeffs& c, const SectionOptions& opts = {});

struct FixedPointResult {
  Vec2 point;
  bool converged = false;
  int iterations = 0;
  double residual = 0;  // |F(x) - x| at the returned point
};

// Newton iteration with a finite-difference Jacobian and residual
// backtracking for a fixed point of a planar map. The tolerance applies to
// |F(x) - x| relative to max(1, |guess|).
FixedPointResult fixed_point(const Map2& map, const Vec2& guess,
                             double tol = 1e-12, int max_iters = 60,
                             double fd_h = 1e-6);

// Finite-difference derivatives of a planar map at x0 up to third order,
// written as the Taylor tensors F(x0+v) = F(x0) + J v + B(v,v)/2 + C(v,v,v)/6.
struct MapDerivatives {
  Mat2 J;
  double B[2][2][2];     // symmetric in the last two slots
  double C[2][2][2][2];  // symmetric in the last three slots
  double residual_B = 0;  // cross-check defect of the symmetrization
  double residual_C = 0;
};

MapDerivatives map_derivatives(const Map2& map, const Vec2& x0, double h);

struct PeriodicOrbit {
  std::vector<double> t;      // physical time samples
  std::vector<Vec3> phys;     // points of the orbit in (x,y,z)
  double period = 0;
  double closure_defect = 0;  // |end - start| on the section, standard coords
};

// Physical closed orbit through the section point (r, z); the point should be
// (near) a fixed point of the n-th return map for the orbit to close up.
PeriodicOrbit orbit_from_section(const FamilyCoeffs& c, const Vec2& rz,
                                 int samples_per_turn = 256,
                                 const SectionOptions& opts = {});

}  // namespace fhn
