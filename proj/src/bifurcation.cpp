#include "fhn/bifurcation.hpp"

#include <cmath>
#include <stdexcept>

#include "fhn/averaging.hpp"

namespace fhn {

namespace {

constexpr double kPi = M_PI;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool nearly(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1.0});
}

}  // namespace

std::string to_string(Stability s) {
  switch (s) {
    case Stability::attracting: return "attracting";
    case Stability::repelling: return "repelling";
    case Stability::saddle: return "unstable-saddle";
    default: return "non-hyperbolic";
  }
}

std::string to_string(TorusSide s) {
  switch (s) {
    case TorusSide::no_torus_side: return "no-torus side";
    case TorusSide::torus_side: return "torus side";
    case TorusSide::on_curve: return "on-curve";
    default: return "undetermined";
  }
}

StabilityVerdict classify_averaged(const Mat2& jac, double tol) {
  StabilityVerdict v;
  v.source = "averaged-jacobian";
  const double tr = jac.trace(), det = jac.determinant();
  const Eigen::Vector2cd eig = jac.eigenvalues();
  v.witnesses = {eig[0], eig[1]};
  const double scale = std::max(1.0, jac.cwiseAbs().maxCoeff());
  if (std::abs(det) <= tol * scale * scale ||
      (det > 0 && std::abs(tr) <= tol * scale)) {
    v.classification = Stability::non_hyperbolic;
  } else if (det < 0) {
    v.classification = Stability::saddle;
  } else {
    v.classification =
        tr < 0 ? Stability::attracting : Stability::repelling;
  }
  return v;
}

StabilityVerdict classify_multipliers(const std::complex<double>& l1,
                                      const std::complex<double>& l2,
                                      double tol) {
  StabilityVerdict v;
  v.source = "numerical-floquet";
  v.witnesses = {l1, l2};
  const double m1 = std::abs(l1) - 1, m2 = std::abs(l2) - 1;
  if (std::abs(m1) <= tol || std::abs(m2) <= tol) {
    v.classification = Stability::non_hyperbolic;
  } else if (m1 < 0 && m2 < 0) {
    v.classification = Stability::attracting;
  } else if (m1 > 0 && m2 > 0) {
    v.classification = Stability::repelling;
  } else {
    v.classification = Stability::saddle;
  }
  return v;
}

double EigSeries::eval(int which, double eps) const {
  double v = 0;
  for (const Term& t : eig.at(which)) v += t.coeff * std::pow(eps, t.power);
  return v;
}

EigSeries jordan_split(const Mat2& a0, const Mat2& a1, const Mat2& a2) {
  const double scale = std::max(1.0, a0.cwiseAbs().maxCoeff());
  require(std::abs(a0(0, 0)) <= 1e-12 * scale &&
              std::abs(a0(0, 1)) <= 1e-12 * scale &&
              std::abs(a0(1, 0)) <= 1e-12 * scale,
          "jordan_split requires a0 = diag(0, a022)");
  const double a022 = a0(1, 1);
  require(std::abs(a022) > 1e-12 * scale, "jordan_split requires a022 != 0");

  EigSeries s;
  s.truncation_order = 2;
  const double cross = a1(0, 1) * a1(1, 0);
  s.eig[0] = {{1, a1(0, 0)}, {2, (a022 * a2(0, 0) - cross) / a022}};
  s.eig[1] = {{0, a022}, {1, a1(1, 1)}, {2, (a022 * a2(1, 1) + cross) / a022}};
  return s;
}

B2Eigen b2_eigen_expansion(const FamilyBCoeffs& c) {
  c.validate();
  const double w = c.w, d = c.d;
  const double w2 = w * w, g1 = c.gamma[0];
  require(nearly(c.beta[0], g1 * w2),
          "b2_eigen_expansion requires beta1 = gamma1 w^2");
  require(nearly(c.beta[1], w2 * c.gamma[1] - c.alpha[0] * g1),
          "b2_eigen_expansion requires beta2 = w^2 gamma2 - alpha1 gamma1");
  require(!nearly(d * w2, 1.0), "b2_eigen_expansion requires d != 1/w^2");
  require(g1 != 0, "b2_eigen_expansion requires gamma1 != 0");

  B2Eigen out;
  out.lambda1 = 2 * g1 * kPi * (1 - d * w2) / w;
  const double n = c.beta[2] + c.alpha[1] * g1 + c.alpha[0] * c.gamma[1] -
                   c.gamma[2] * w2 - g1 * g1 * g1 * d * d * w2 * w2 +
                   g1 * g1 * g1 * d * w2;
  out.lambda2 = 2 * kPi * n / (w2 * w);
  out.series.truncation_order = 3;
  out.series.eig[0] = {{0, 1.0}, {1, out.lambda1}};
  out.series.eig[1] = {{0, 1.0}, {3, out.lambda2}};

  out.verdict.source = "series-expansion";
  out.verdict.witnesses = {out.lambda1, out.lambda2};
  if (out.lambda1 == 0 || out.lambda2 == 0) {
    out.verdict.classification = Stability::non_hyperbolic;
  } else if (out.lambda1 < 0 && out.lambda2 < 0) {
    out.verdict.classification = Stability::attracting;
  } else if (out.lambda1 > 0 && out.lambda2 > 0) {
    out.verdict.classification = Stability::repelling;
  } else {
    out.verdict.classification = Stability::saddle;
  }
  return out;
}

NSConditions ns_conditions(const FamilyCoeffs& c) {
  family_validate(c);
  NSConditions ns;
  if (const auto* a = std::get_if<FamilyACoeffs>(&c)) {
    const double d = a->d, w = a->w;
    ns.parameter = "gamma1";
    ns.mu0 = a->beta1 * d;
    ns.w0 = std::sqrt(2.0) * kPi * std::abs(a->alpha1) *
            std::sqrt(d * (1 - w * w * d)) / (d * w * w * w);
    ns.d0 = kPi / w;
    ns.degenerate = (a->alpha1 == 0);
  } else {
    const auto& b = std::get<FamilyBCoeffs>(c);
    const double w = b.w, w2 = w * w, g1 = b.gamma[0];
    require(nearly(b.d * w2, 1.0) && nearly(b.beta[0], g1 * w2),
            "ns_conditions for the second family requires the resonant class "
            "(d = 1/w^2, beta1 = gamma1 w^2)");
    ns.parameter = "beta2";
    ns.mu0 = b.gamma[1] * w2;
    ns.w0 = std::sqrt(2.0) * kPi * std::abs(b.alpha[0] * g1) / (w2 * w);
    ns.d0 = -kPi;
    ns.degenerate = (b.alpha[0] * g1 == 0);
  }
  return ns;
}

namespace {

using Cx = std::complex<double>;

// The common combination of pairings in the first-Lyapunov-coefficient
// formula: Re(e^{-it} g21 / 2 - e^{-2it}(1 - 2 e^{it}) / (2(1 - e^{it}))
// * g20 * g11) - |g02|^2 / 4 - |g11|^2 / 2.
double l1_combination(double theta, Cx g20, Cx g11, Cx g02, Cx g21) {
  const Cx eit = std::polar(1.0, theta);
  const Cx term1 = 0.5 * std::conj(eit) * g21;
  const Cx term2 =
      std::conj(eit * eit) * (1.0 - 2.0 * eit) / (2.0 * (1.0 - eit)) * g20 * g11;
  return std::real(term1 - term2) - std::norm(g02) / 4 - std::norm(g11) / 2;
}

Eigen::Vector2cd apply_b(const MapDerivatives& md, const Eigen::Vector2cd& u,
                         const Eigen::Vector2cd& v) {
  Eigen::Vector2cd out;
  for (int k = 0; k < 2; ++k) {
    Cx s = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += md.B[k][i][j] * u[i] * v[j];
    out[k] = s;
  }
  return out;
}

Eigen::Vector2cd apply_c(const MapDerivatives& md, const Eigen::Vector2cd& u,
                         const Eigen::Vector2cd& v, const Eigen::Vector2cd& w) {
  Eigen::Vector2cd out;
  for (int k = 0; k < 2; ++k) {
    Cx s = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) s += md.C[k][i][j][l] * u[i] * v[j] * w[l];
    out[k] = s;
  }
  return out;
}

}  // namespace

LyapunovResult lyapunov_coeff(const MapDerivatives& md, double theta_in) {
  const Eigen::Vector2cd eig = md.J.eigenvalues();
  require(std::abs(eig[0].imag()) > 1e-14 * std::abs(eig[0]),
          "lyapunov_coeff requires a complex multiplier pair");
  const Cx lam = eig[0].imag() > 0 ? eig[0] : eig[1];
  const double theta = std::isnan(theta_in) ? std::arg(lam) : theta_in;
  for (int k = 1; k <= 4; ++k) {
    if (std::abs(1.0 - std::polar(1.0, k * theta)) < 1e-4)
      throw std::domain_error(
          "lyapunov_coeff: strong resonance, multiplier too close to a "
          "root of unity of order <= 4");
  }

  // Real Jordan (rotation-scaling) basis: J V = V [[a, -b], [b, a]] with
  // columns V = [Re(cq), -Im(cq)], the complex eigenvector q scaled so that
  // Re(cq) = (1/2, 0) — this pins the basis against the free complex scale
  // and reproduces the fixed reference pair p = (1/2, -i/sqrt(2)).
  Eigen::ComplexEigenSolver<Mat2> es(md.J);
  const int iq = es.eigenvalues()[0].imag() > 0 ? 0 : 1;
  Eigen::Vector2cd q = es.eigenvectors().col(iq);
  // Solve Re(c q) = (1/2, 0): with c = cr + i ci, Re(c q)_j =
  // cr Re(q_j) - ci Im(q_j).
  Mat2 pin;
  pin << q[0].real(), -q[0].imag(), q[1].real(), -q[1].imag();
  const Vec2 cvec = pin.partialPivLu().solve(Vec2(0.5, 0.0));
  q *= Cx(cvec[0], cvec[1]);
  Mat2 V;
  V << q[0].real(), -q[0].imag(), q[1].real(), -q[1].imag();
  const Mat2 Vinv = V.inverse();

  LyapunovResult out;
  out.theta = theta;
  {
    Eigen::JacobiSVD<Mat2> svd(V);
    out.basis_condition =
        svd.singularValues()[0] / svd.singularValues()[1];
  }

  // Conjugated tensors evaluated on the reference pair: with y = V x the
  // transformed multilinear forms are V^{-1} B(V u, V v) etc.
  const Cx inv_sqrt2(0, -1.0 / std::sqrt(2.0));
  const Eigen::Vector2cd p(Cx(0.5, 0), inv_sqrt2);
  auto inner = [](const Eigen::Vector2cd& a, const Eigen::Vector2cd& b) {
    Cx s = 0;
    for (int i = 0; i < 2; ++i) s += std::conj(a[i]) * b[i];
    return s;
  };
  auto bt = [&](const Eigen::Vector2cd& u, const Eigen::Vector2cd& v) {
    return Eigen::Vector2cd(Vinv.cast<Cx>() *
                            apply_b(md, V.cast<Cx>() * u, V.cast<Cx>() * v));
  };
  auto ct = [&](const Eigen::Vector2cd& u, const Eigen::Vector2cd& v,
                const Eigen::Vector2cd& w) {
    return Eigen::Vector2cd(Vinv.cast<Cx>() * apply_c(md, V.cast<Cx>() * u,
                                                      V.cast<Cx>() * v,
                                                      V.cast<Cx>() * w));
  };
  const Eigen::Vector2cd pb = p.conjugate();
  out.l1 = l1_combination(theta, inner(p, bt(p, p)), inner(p, bt(p, pb)),
                          inner(p, bt(pb, pb)), inner(p, ct(p, p, pb)));

  // Normalized variant: eigenvector q of J, adjoint eigenvector r of J^T
  // with <r, q> = 1, tensors applied in the original basis.
  {
    Eigen::Vector2cd qn = es.eigenvectors().col(iq).normalized();
    Eigen::ComplexEigenSolver<Mat2> esT(md.J.transpose());
    const int ir =
        std::abs(esT.eigenvalues()[0] - std::conj(lam)) <
                std::abs(esT.eigenvalues()[1] - std::conj(lam))
            ? 0
            : 1;
    Eigen::Vector2cd r = esT.eigenvectors().col(ir);
    r /= std::conj(inner(r, qn));  // makes inner(r, qn) = 1
    const Eigen::Vector2cd qb = qn.conjugate();
    out.l1_normalized = l1_combination(
        theta, inner(r, apply_b(md, qn, qn)), inner(r, apply_b(md, qn, qb)),
        inner(r, apply_b(md, qb, qb)), inner(r, apply_c(md, qn, qn, qb)));
  }
  return out;
}

ClosedFormLyapunov lyapunov_closed_form(const FamilyCoeffs& c) {
  ClosedFormLyapunov out;
  if (const auto* a = std::get_if<FamilyACoeffs>(&c)) {
    const FamilyAPredictions p = predictions_family_a(*a);
    out.jstar = 2;
    out.value = p.l12;
  } else {
    const auto& b = std::get<FamilyBCoeffs>(c);
    const double w = b.w, w2 = b.w * b.w;
    out.jstar = 3;
    out.value = (41 * w2 * w2 - 67 * w2 + 41) * kPi * b.gamma[0] /
                (128 * w2 * w2 * w);
  }
  return out;
}

NSReport ns_report(const FamilyCoeffs& c) {
  NSReport r;
  r.cond = ns_conditions(c);
  const ClosedFormLyapunov lf = lyapunov_closed_form(c);
  r.jstar = lf.jstar;
  r.l1j = lf.value;
  r.mu_curve = r.cond.mu0;
  r.mu_curve_order = 0;
  return r;
}

TorusVerdict torus_verdict(const NSReport& ns, double mu, double tol) {
  TorusVerdict v;
  if (std::abs(ns.l1j) <= tol) {
    v.side = TorusSide::undetermined;
    return v;
  }
  const double s = ns.l1j * (mu - ns.mu_curve) * ns.cond.d0;
  if (std::abs(mu - ns.mu_curve) <= tol) {
    v.side = TorusSide::on_curve;
    return v;
  }
  if (s < 0) {
    v.side = TorusSide::torus_side;
    v.torus = ns.l1j > 0 ? Stability::repelling : Stability::attracting;
    v.orbit = ns.l1j > 0 ? Stability::attracting : Stability::repelling;
  } else {
    v.side = TorusSide::no_torus_side;
    v.orbit = ns.l1j > 0 ? Stability::repelling : Stability::attracting;
  }
  return v;
}

FamilyCoeffs with_ns_parameter(const FamilyCoeffs& c, double mu) {
  if (const auto* a = std::get_if<FamilyACoeffs>(&c)) {
    FamilyACoeffs m = *a;
    m.gamma1 = mu;
    return m;
  }
  FamilyBCoeffs m = std::get<FamilyBCoeffs>(c);
  m.beta[1] = mu;
  return m;
}

CriticalMu critical_parameter(const FamilyCoeffs& c, const Vec2& guess,
                              const SectionOptions& opts, double tol,
                              int max_iters) {
  const NSConditions ns = ns_conditions(c);
  CriticalMu out;

  Vec2 warm = guess;
  auto modulus = [&](double mu, Vec2& fp_out, double& theta_out) {
    const FamilyCoeffs cc = with_ns_parameter(c, mu);
    const Map2 map = make_section_map(cc, opts);
    const FixedPointResult fp = fixed_point(map, warm);
    if (!fp.converged)
      throw std::runtime_error(
          "critical_parameter: fixed-point iteration failed");
    warm = fp.point;
    fp_out = fp.point;
    // Central-difference Jacobian; the multiplier pair is its eigenvalues.
    Mat2 J;
    const double h = 1e-6 * std::max(1.0, fp.point.norm());
    for (int j = 0; j < 2; ++j) {
      Vec2 xp = fp.point, xm = fp.point;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (map(xp) - map(xm)) / (2 * h);
    }
    const Eigen::Vector2cd eig = J.eigenvalues();
    const Cx lam = eig[0].imag() >= 0 ? eig[0] : eig[1];
    theta_out = std::arg(lam);
    return std::abs(lam) - 1.0;
  };

  const double scale = std::max(std::abs(ns.mu0), 1e-3);
  double mu_a = ns.mu0, mu_b = ns.mu0 * (1 + 1e-4) + 1e-7 * scale;
  Vec2 fp;
  double th = 0;
  double f_a = modulus(mu_a, fp, th);
  double f_b = modulus(mu_b, fp, th);
  out.iterations = 2;
  double mu = mu_b, f = f_b;
  bool stagnated = false;
  while (std::abs(f) > tol && out.iterations < max_iters) {
    if (f_b == f_a) break;
    mu = mu_b - f_b * (mu_b - mu_a) / (f_b - f_a);
    // The modulus is computed through an integrated map and a
    // finite-difference Jacobian, so it carries noise well above machine
    // epsilon; a parameter step below resolution means the secant has hit
    // that floor and the current defect is the best attainable.
    if (std::abs(mu - mu_b) <= 1e-13 * std::max(1.0, std::abs(mu_b))) {
      stagnated = true;
      break;
    }
    mu_a = mu_b;
    f_a = f_b;
    f = modulus(mu, fp, th);
    mu_b = mu;
    f_b = f;
    ++out.iterations;
  }
  out.mu = mu;
  out.modulus_defect = f;
  out.converged = std::abs(f) <= tol || (stagnated && std::abs(f) <= 1e-6);
  out.fixed_point = fp;
  out.theta = th;
  return out;
}

}  // namespace fhn
