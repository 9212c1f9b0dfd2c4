#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "spinlab/common.hpp"
#include "spinlab/model.hpp"

// Classical XY (planar rotor) engine. Two routes to the same Gibbs state:
//
//  * tensor-grid quadrature over [0,2pi)^N with the equispaced periodic
//    trapezoid rule, which is spectrally accurate for these integrands and
//    integrates trigonometric polynomials of degree < n exactly;
//  * Metropolis sampling with single-site angle updates, batch-means errors.

namespace spinlab {

struct ClassicalInstance {
  SiteSet sites{1};
  CouplingTable couplings;
  double beta = 1.0;

  ClassicalInstance() = default;

  ClassicalInstance(SiteSet s, CouplingTable c, double b)
      : sites(s), couplings(std::move(c)), beta(b) {
    if (beta <= 0.0) throw validation_error("classical: beta must be positive");
    for (const auto& [mask, val] : couplings.entries()) {
      (void)val;
      if (mask & ~sites.full_mask())
        throw validation_error("classical: subset has out-of-range site");
    }
  }

  static ClassicalInstance from_model(const ModelSpec& spec) {
    return ClassicalInstance(spec.sites, spec.couplings, spec.beta);
  }
};

// Product observable: one factor per entry, axis 1 -> cos(phi_x),
// axis 2 -> sin(phi_x). Repeated factors are allowed (they square).
struct ObservableSpec {
  struct Factor {
    int site;
    int axis;
  };
  std::vector<Factor> factors;

  static ObservableSpec product(Subset set, int axis) {
    ObservableSpec obs;
    for (int x : subset_sites(set)) obs.factors.push_back({x, axis});
    return obs;
  }

  ObservableSpec& append(Subset set, int axis) {
    for (int x : subset_sites(set)) factors.push_back({x, axis});
    return *this;
  }

  double eval(std::span<const double> cos_phi, std::span<const double> sin_phi) const {
    double v = 1.0;
    for (const Factor& f : factors)
      v *= (f.axis == 1) ? cos_phi[static_cast<std::size_t>(f.site)]
                         : sin_phi[static_cast<std::size_t>(f.site)];
    return v;
  }

  void validate_against(const SiteSet& sites) const {
    for (const Factor& f : factors) {
      if (f.axis != 1 && f.axis != 2)
        throw validation_error("observable: axis must be 1 or 2");
      if (f.site < 0 || f.site >= sites.count)
        throw validation_error("observable: site out of range");
    }
  }
};

// H(phi) = -sum_A [ J1_A prod_{x in A} cos(phi_x) + J2_A prod_{x in A} sin(phi_x) ]
inline double classical_energy(const ClassicalInstance& inst,
                               std::span<const double> angles) {
  if (static_cast<int>(angles.size()) != inst.sites.count)
    throw validation_error("classical: configuration size mismatch");
  double e = 0.0;
  for (const auto& [mask, c] : inst.couplings.entries()) {
    double p1 = 1.0, p2 = 1.0;
    for (int x : subset_sites(mask)) {
      p1 *= std::cos(angles[static_cast<std::size_t>(x)]);
      p2 *= std::sin(angles[static_cast<std::size_t>(x)]);
    }
    e -= c.j1 * p1 + c.j2 * p2;
  }
  return e;
}

namespace detail {

struct CompiledClassical {
  struct Term {
    double j1, j2;
    std::vector<int> sites;
  };
  std::vector<Term> terms;
  std::vector<std::vector<int>> by_site;
  double abs_sum = 0.0;

  explicit CompiledClassical(const ClassicalInstance& inst) {
    by_site.resize(static_cast<std::size_t>(inst.sites.count));
    for (const auto& [mask, c] : inst.couplings.entries()) {
      const int idx = static_cast<int>(terms.size());
      terms.push_back({c.j1, c.j2, subset_sites(mask)});
      for (int x : terms.back().sites) by_site[static_cast<std::size_t>(x)].push_back(idx);
      abs_sum += std::abs(c.j1) + std::abs(c.j2);
    }
  }

  double energy(std::span<const double> cos_phi, std::span<const double> sin_phi) const {
    double e = 0.0;
    for (const Term& t : terms) {
      double p1 = 1.0, p2 = 1.0;
      for (int x : t.sites) {
        p1 *= cos_phi[static_cast<std::size_t>(x)];
        p2 *= sin_phi[static_cast<std::size_t>(x)];
      }
      e -= t.j1 * p1 + t.j2 * p2;
    }
    return e;
  }
};

// Single fixed-resolution pass: expectations of all observables on the
// n^N tensor grid.
inline std::vector<double> quadrature_pass(const ClassicalInstance& inst,
                                           const CompiledClassical& comp,
                                           std::span<const ObservableSpec> observables,
                                           int n) {
  const int sites = inst.sites.count;
  const double beta = inst.beta;

  std::vector<double> cos_node(static_cast<std::size_t>(n)), sin_node(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / n;
    cos_node[static_cast<std::size_t>(i)] = std::cos(phi);
    sin_node[static_cast<std::size_t>(i)] = std::sin(phi);
  }

  std::vector<int> digit(static_cast<std::size_t>(sites), 0);
  std::vector<double> cos_phi(static_cast<std::size_t>(sites), 1.0);
  std::vector<double> sin_phi(static_cast<std::size_t>(sites), 0.0);

  PairwiseSum weight;
  std::vector<PairwiseSum> acc(observables.size());

  double points = 1.0;
  for (int x = 0; x < sites; ++x) points *= n;
  const std::uint64_t total = static_cast<std::uint64_t>(points);

  // weights are formed relative to the energy floor -sum|J| so large beta
  // cannot overflow; the shift cancels in every ratio
  const double shift = -comp.abs_sum;

  for (std::uint64_t k = 0;; ++k) {
    const double w = std::exp(-beta * (comp.energy(cos_phi, sin_phi) - shift));
    weight.add(w);
    for (std::size_t i = 0; i < observables.size(); ++i)
      acc[i].add(w * observables[i].eval(cos_phi, sin_phi));

    if (k + 1 == total) break;
    for (int x = sites - 1; x >= 0; --x) {
      auto xs = static_cast<std::size_t>(x);
      if (++digit[xs] == n) digit[xs] = 0;
      cos_phi[xs] = cos_node[static_cast<std::size_t>(digit[xs])];
      sin_phi[xs] = sin_node[static_cast<std::size_t>(digit[xs])];
      if (digit[xs] != 0) break;
    }
  }

  const double z = weight.total();
  std::vector<double> out(observables.size());
  for (std::size_t i = 0; i < observables.size(); ++i) out[i] = acc[i].total() / z;
  return out;
}

}  // namespace detail

struct QuadratureOptions {
  int nodes = 32;         // starting nodes per site, >= 8
  int max_nodes = 256;    // escalation cap per site
  double target = 1e-6;   // convergence goal for |r(n) - r(n/2)|
};

// Expectations of several observables in one set of grid passes. Starts at
// `nodes` per site, doubles until the error estimate |r(n) - r(n/2)| drops
// below target or the cap is hit. Passes whose total point count would
// exceed 2^31 are not attempted (the cap is a per-axis budget; at N = 4, 5
// this guard binds first).
inline std::vector<GibbsEstimate> quadrature_expectations(
    const ClassicalInstance& inst, std::span<const ObservableSpec> observables,
    const QuadratureOptions& opt = {}) {
  if (inst.sites.count > kMaxQuadratureSites)
    throw budget_error("quadrature: capped at N <= 5 sites");
  if (opt.nodes < 8) throw validation_error("quadrature: need at least 8 nodes per site");
  for (const ObservableSpec& o : observables) o.validate_against(inst.sites);

  const detail::CompiledClassical comp(inst);

  auto affordable = [&](int n) {
    double pts = 1.0;
    for (int x = 0; x < inst.sites.count; ++x) pts *= n;
    return pts <= 2147483648.0;
  };

  int n = opt.nodes;
  while (!affordable(n) && n > 8) n /= 2;

  std::vector<double> coarse = detail::quadrature_pass(inst, comp, observables, n / 2);
  std::vector<double> fine = detail::quadrature_pass(inst, comp, observables, n);

  auto worst_error = [&] {
    double e = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i)
      e = std::max(e, std::abs(fine[i] - coarse[i]));
    return e;
  };

  while (worst_error() > opt.target && n * 2 <= opt.max_nodes && affordable(n * 2)) {
    n *= 2;
    coarse = std::move(fine);
    fine = detail::quadrature_pass(inst, comp, observables, n);
  }

  std::vector<GibbsEstimate> out(observables.size());
  for (std::size_t i = 0; i < observables.size(); ++i) {
    out[i].value = fine[i];
    out[i].error = std::abs(fine[i] - coarse[i]);
    out[i].method = Method::quadrature;
    out[i].converged = out[i].error <= opt.target;
  }
  return out;
}

inline GibbsEstimate classical_expectation(const ClassicalInstance& inst,
                                           const ObservableSpec& obs,
                                           int nodes_per_site = 32) {
  QuadratureOptions opt;
  opt.nodes = nodes_per_site;
  const ObservableSpec list[] = {obs};
  return quadrature_expectations(inst, list, opt)[0];
}

// ----- Metropolis Monte Carlo -----

struct McOptions {
  long sweeps = 200000;   // measurement sweeps, >= 100
  long burn_in = -1;      // default: max(1000, sweeps / 10)
  std::uint64_t seed = 1;
  int batches = 20;       // batch-means blocks, >= 20
};

struct McResult {
  std::vector<GibbsEstimate> estimates;
  // batch_means[i][b]: mean of observable i over batch b; for error
  // propagation through nonlinear functions of several estimates
  std::vector<std::vector<double>> batch_means;
  double acceptance_rate = 0.0;
  double proposal_width = 0.0;
};

// Single-site Metropolis with a uniform angle-shift proposal whose width is
// tuned to 40-60% acceptance during burn-in. One sweep = N update attempts
// at uniformly random sites; one measurement per sweep.
inline McResult mc_expectations(const ClassicalInstance& inst,
                                std::span<const ObservableSpec> observables,
                                const McOptions& opt = {}) {
  if (opt.sweeps < 100) throw validation_error("mc: need at least 100 sweeps");
  if (opt.batches < 20) throw validation_error("mc: need at least 20 batches");
  for (const ObservableSpec& o : observables) o.validate_against(inst.sites);

  const detail::CompiledClassical comp(inst);
  const int sites = inst.sites.count;
  const double beta = inst.beta;
  const long burn_in = opt.burn_in >= 0 ? opt.burn_in : std::max(1000L, opt.sweeps / 10);
  const double two_pi = 2.0 * std::numbers::pi;

  Rng rng(opt.seed);
  std::vector<double> phi(static_cast<std::size_t>(sites));
  std::vector<double> cos_phi(static_cast<std::size_t>(sites));
  std::vector<double> sin_phi(static_cast<std::size_t>(sites));
  for (int x = 0; x < sites; ++x) {
    auto xs = static_cast<std::size_t>(x);
    phi[xs] = rng.uniform(0.0, two_pi);
    cos_phi[xs] = std::cos(phi[xs]);
    sin_phi[xs] = std::sin(phi[xs]);
  }

  double width = 1.0;
  long accepted = 0, attempted = 0;
  long tune_accepted = 0, tune_attempted = 0;

  auto attempt = [&](bool tuning) {
    const int x = static_cast<int>(rng.uniform_int(0, sites - 1));
    auto xs = static_cast<std::size_t>(x);
    const double delta = rng.uniform(-width, width);
    double phi_new = phi[xs] + delta;
    phi_new -= two_pi * std::floor(phi_new / two_pi);
    const double cos_new = std::cos(phi_new), sin_new = std::sin(phi_new);

    double d_energy = 0.0;
    for (int t : comp.by_site[xs]) {
      const auto& term = comp.terms[static_cast<std::size_t>(t)];
      double p1_old = 1.0, p2_old = 1.0, p1_new = 1.0, p2_new = 1.0;
      for (int y : term.sites) {
        auto ys = static_cast<std::size_t>(y);
        const double cy = (y == x) ? cos_new : cos_phi[ys];
        const double sy = (y == x) ? sin_new : sin_phi[ys];
        p1_old *= cos_phi[ys];
        p2_old *= sin_phi[ys];
        p1_new *= cy;
        p2_new *= sy;
      }
      d_energy -= term.j1 * (p1_new - p1_old) + term.j2 * (p2_new - p2_old);
    }

    ++attempted;
    if (tuning) ++tune_attempted;
    if (d_energy <= 0.0 || rng.uniform() < std::exp(-beta * d_energy)) {
      phi[xs] = phi_new;
      cos_phi[xs] = cos_new;
      sin_phi[xs] = sin_new;
      ++accepted;
      if (tuning) ++tune_accepted;
    }
  };

  for (long sweep = 0; sweep < burn_in; ++sweep) {
    for (int u = 0; u < sites; ++u) attempt(true);
    if ((sweep + 1) % 50 == 0 && tune_attempted > 0) {
      const double rate = static_cast<double>(tune_accepted) / tune_attempted;
      if (rate < 0.40) width *= 0.8;
      else if (rate > 0.60) width *= 1.25;
      width = std::clamp(width, 0.02, std::numbers::pi);
      tune_accepted = tune_attempted = 0;
    }
  }
  accepted = attempted = 0;

  const int n_batches = opt.batches;
  const long batch_len = opt.sweeps / n_batches;
  const long used_sweeps = batch_len * n_batches;
  const std::size_t n_obs = observables.size();

  std::vector<std::vector<double>> batch_means(
      n_obs, std::vector<double>(static_cast<std::size_t>(n_batches), 0.0));
  std::vector<double> sum(n_obs, 0.0), sum_sq(n_obs, 0.0);

  for (int b = 0; b < n_batches; ++b) {
    std::vector<PairwiseSum> batch_acc(n_obs);
    for (long sweep = 0; sweep < batch_len; ++sweep) {
      for (int u = 0; u < sites; ++u) attempt(false);
      for (std::size_t i = 0; i < n_obs; ++i) {
        const double v = observables[i].eval(cos_phi, sin_phi);
        batch_acc[i].add(v);
        sum[i] += v;
        sum_sq[i] += v * v;
      }
    }
    for (std::size_t i = 0; i < n_obs; ++i)
      batch_means[i][static_cast<std::size_t>(b)] = batch_acc[i].total() / batch_len;
  }

  McResult result;
  result.batch_means = batch_means;
  result.acceptance_rate = attempted ? static_cast<double>(accepted) / attempted : 0.0;
  result.proposal_width = width;
  result.estimates.resize(n_obs);

  const double m = static_cast<double>(used_sweeps);
  for (std::size_t i = 0; i < n_obs; ++i) {
    const double mean = sum[i] / m;
    double var_batch = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      const double d = batch_means[i][static_cast<std::size_t>(b)] - mean;
      var_batch += d * d;
    }
    var_batch /= (n_batches - 1);
    const double var_sample = std::max(0.0, sum_sq[i] / m - mean * mean);

    GibbsEstimate& est = result.estimates[i];
    est.value = mean;
    est.error = std::sqrt(var_batch / n_batches);
    est.method = Method::monte_carlo;
    // integrated autocorrelation time from the batch-variance ratio;
    // ~1/2 for independent samples
    if (var_sample > 0.0) {
      const double tau = batch_len * var_batch / (2.0 * var_sample);
      est.autocorr_warning = tau > static_cast<double>(opt.sweeps) / 50.0;
    }
  }
  return result;
}

inline GibbsEstimate classical_expectation_mc(const ClassicalInstance& inst,
                                              const ObservableSpec& obs,
                                              long sweeps, long burn_in,
                                              std::uint64_t seed) {
  McOptions opt;
  opt.sweeps = sweeps;
  opt.burn_in = burn_in;
  opt.seed = seed;
  const ObservableSpec list[] = {obs};
  return mc_expectations(inst, list, opt).estimates[0];
}

// Leave-one-batch-out jackknife for a scalar function of several MC means.
// Handles the cross-correlations that plain error propagation would miss.
struct JackknifeEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

inline JackknifeEstimate jackknife(
    const std::vector<std::vector<double>>& batch_means,
    const std::function<double(std::span<const double>)>& fn) {
  const std::size_t n_obs = batch_means.size();
  const std::size_t n_batches = n_obs ? batch_means[0].size() : 0;
  if (n_batches < 2) throw validation_error("jackknife: need at least 2 batches");

  std::vector<double> totals(n_obs, 0.0);
  for (std::size_t i = 0; i < n_obs; ++i)
    for (double v : batch_means[i]) totals[i] += v;

  std::vector<double> full(n_obs), loo(n_obs);
  for (std::size_t i = 0; i < n_obs; ++i) full[i] = totals[i] / n_batches;

  JackknifeEstimate out;
  out.value = fn(full);

  std::vector<double> fn_loo(n_batches);
  double mean_loo = 0.0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t i = 0; i < n_obs; ++i)
      loo[i] = (totals[i] - batch_means[i][b]) / (n_batches - 1);
    fn_loo[b] = fn(loo);
    mean_loo += fn_loo[b];
  }
  mean_loo /= static_cast<double>(n_batches);

  double ss = 0.0;
  for (double v : fn_loo) ss += (v - mean_loo) * (v - mean_loo);
  out.stderr_ = std::sqrt(ss * (n_batches - 1) / n_batches);
  return out;
}

}  // namespace spinlab
