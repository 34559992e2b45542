#pragma once

#include <vector>

#include "fhn/bifurcation.hpp"
#include "fhn/poincare.hpp"

namespace fhn {

// Iterates of a planar section map.
struct SectionOrbit {
  std::vector<Vec2> points;  // points[0] = start, points[i+1] = m(points[i])
  bool reversed = false;     // produced with the reversed-time map
};

SectionOrbit iterate_section(const Map2& m, const Vec2& start, int n);

// A closed invariant curve of the section map, represented as a truncated
// Fourier series of radius vs angle about the enclosed fixed point.
struct InvariantCircle {
  Vec2 center{0, 0};
  // Unit-determinant linear change y = frame * (x - center) in which the
  // curve is near-circular; the radial profile lives in the y-plane. The
  // section-plane curve is often a thin ellipse (the two multiplier
  // eigendirections have very different scales), which a radius-vs-angle
  // series cannot represent at low order without this whitening.
  Mat2 frame = Mat2::Identity();
  int order = 0;                 // highest Fourier mode kept (<= 8)
  std::vector<double> cos_coef;  // c[0] + sum_k c[k] cos(k phi)
  std::vector<double> sin_coef;  //        + sum_k s[k] sin(k phi), s[0] unused
  double fit_residual = 0;       // max radial misfit over the fit points
  double invariance_defect = 0;  // max radial defect of mapped curve samples
  double mean_radius = 0;
  double rotation = 0;  // rotation number estimate in (0, 1)
  bool near_resonant = false;  // rotation within 1e-3 of p/q with q <= 6

  double radius(double phi) const;     // profile in the frame plane
  Vec2 point(double phi) const;        // section-plane curve point
  double distance(const Vec2& x) const;  // radial defect of x, frame plane
};

// Least-squares Fourier fit of an orbit tail winding about the fixed point.
// Requires >= 64 points with angular coverage > 0.9 of a full turn (largest
// angular gap < 0.1 * 2*pi); the map is used to measure the invariance
// defect of the fitted curve. Throws std::invalid_argument on insufficient
// data or coverage.
InvariantCircle fit_invariant_circle(const std::vector<Vec2>& tail,
                                     const Vec2& center, const Map2& map,
                                     int max_order = 8);

// Birkhoff-weighted average angular increment / 2*pi about the center.
// Throws std::domain_error when the orbit does not wind (e.g. a fixed-point
// orbit or one that never leaves a neighborhood of zero radius).
double rotation_number(const SectionOrbit& orbit, const Vec2& center);

// Transversal probes at radius (1 +- delta) * rho(phi): attracting when
// their distance to the curve contracts over the given number of forward
// iterations, repelling when it expands forward and contracts under the
// reversed-time map. Throws std::runtime_error on mixed behavior.
Stability classify_circle(const Map2& forward, const Map2& backward,
                          const InvariantCircle& circle, double delta = 0.1,
                          int iterations = 50);

}  // namespace fhn
