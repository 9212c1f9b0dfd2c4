#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include "spinlab/common.hpp"

// Certified lower bound on the critical temperature of the 3d quantum XY
// model from the two infrared-bound magnetisation inequalities. Writing
// x = sqrt(<S1_0 S1_e1>), the magnetisation squared dominates both
//   b1(x) = 1/4 - (J3/2) x - K3/beta        (linear in x)
//   b2(x) = x^2 - (I3/2) x - K3'/beta       (quadratic in x)
// so it is positive whenever x <= t (zero of b1) or x >= r+ (largest zero
// of b2). One of the two always holds once r+ < t; the solver locates the
// unique beta* with r+(beta*) = t(beta*) by bisection.

namespace spinlab {

struct BoundConstants {
  double j3 = 1.15672;
  double i3 = 0.349884;
  double k3 = 0.252731;
  double k3p = 0.105107;

  void validate() const {
    if (j3 < 0 || i3 < 0 || k3 < 0 || k3p < 0)
      throw validation_error("bound constants must be nonnegative");
    if (j3 == 0) throw validation_error("bound constants: j3 must be positive");
  }
};

// the two lower bounds on m(beta)^2 at a given x >= 0
inline std::pair<double, double> magnetisation_lower_bounds(double x, double beta,
                                                            const BoundConstants& c) {
  if (x < 0) throw validation_error("bounds: x must be nonnegative");
  if (beta <= 0) throw validation_error("bounds: beta must be positive");
  const double b1 = 0.25 - 0.5 * c.j3 * x - c.k3 / beta;
  const double b2 = x * x - 0.5 * c.i3 * x - c.k3p / beta;
  return {b1, b2};
}

// zero of b1; may be negative at small beta, the caller interprets
inline double threshold_t(double beta, const BoundConstants& c) {
  if (beta <= 0) throw validation_error("bounds: beta must be positive");
  return (0.5 - 2.0 * c.k3 / beta) / c.j3;
}

// largest zero of b2, always >= 0
inline double threshold_r_plus(double beta, const BoundConstants& c) {
  if (beta <= 0) throw validation_error("bounds: beta must be positive");
  return 0.5 * (0.5 * c.i3 + std::sqrt(0.25 * c.i3 * c.i3 + 4.0 * c.k3p / beta));
}

struct BoundResult {
  double t_star = 0.0;     // certified temperature threshold, 1/beta_star
  double beta_star = 0.0;
  double t_at_crossing = 0.0;
  double r_plus_at_crossing = 0.0;
  double residual = 0.0;   // |r+ - t| at beta_star
  double bracket_lo = 0.0; // final bisection bracket in beta
  double bracket_hi = 0.0;
};

// Solves r+(beta) = t(beta). t is nondecreasing and r+ nonincreasing in
// beta, so the crossing is unique whenever it exists; positivity of the
// magnetisation is certified for all temperatures below 1/beta*.
inline BoundResult critical_threshold(const BoundConstants& c) {
  c.validate();
  auto gap = [&](double beta) { return threshold_t(beta, c) - threshold_r_plus(beta, c); };

  // bracket: gap < 0 at small beta (t <= 0 at beta = 4 K3), gap > 0 at
  // large beta when a crossing exists at all
  double lo = c.k3 > 0 ? 4.0 * c.k3 : 1e-6;
  if (gap(lo) > 0.0) {
    // crossing below lo; shrink
    double shrunk = lo;
    while (shrunk > 1e-12 && gap(shrunk) > 0.0) shrunk *= 0.5;
    if (gap(shrunk) > 0.0)
      throw no_crossing_error("threshold: r+ < t already at beta -> 0");
    lo = shrunk;
  }
  double hi = std::max(2.0 * lo, 1.0);
  while (gap(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e15)
      throw no_crossing_error("threshold: t <= r+ even as beta -> infinity");
  }

  while (hi - lo > 1e-11 * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) <= 0.0 ? lo : hi) = mid;
  }

  BoundResult out;
  out.beta_star = 0.5 * (lo + hi);
  out.t_star = 1.0 / out.beta_star;
  out.t_at_crossing = threshold_t(out.beta_star, c);
  out.r_plus_at_crossing = threshold_r_plus(out.beta_star, c);
  out.residual = std::abs(out.r_plus_at_crossing - out.t_at_crossing);
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  return out;
}

// chained interval: certified lower threshold and one quarter of the given
// rigorous Ising upper bound
inline std::pair<double, double> tc_interval(const BoundConstants& c, double ising_upper) {
  if (ising_upper <= 0) throw validation_error("interval: ising upper bound must be positive");
  return {critical_threshold(c).t_star, 0.25 * ising_upper};
}

// value rounded to three significant figures, e.g. 0.322557 -> "0.323"
inline std::string format_3sf(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace spinlab
