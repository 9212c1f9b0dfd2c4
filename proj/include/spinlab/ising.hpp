#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "spinlab/common.hpp"
#include "spinlab/model.hpp"

// Exact many-body Ising engine: partition functions and product expectations
// by full enumeration of {-1,+1}^N. The enumeration walks a Gray code so each
// step flips a single spin and the energy updates in O(couplings at that
// site); this loop is the performance kernel of the module.

namespace spinlab {

struct IsingInstance {
  SiteSet sites{1};
  std::map<Subset, double> couplings;  // subset -> J_A
  double beta = 1.0;

  IsingInstance() = default;

  IsingInstance(SiteSet s, std::map<Subset, double> j, double b)
      : sites(s), couplings(std::move(j)), beta(b) {
    if (beta <= 0.0) throw validation_error("ising: beta must be positive");
    if (sites.count > kMaxIsingSites)
      throw budget_error("ising: enumeration capped at N <= 24");
    for (const auto& [mask, val] : couplings) {
      (void)val;
      if (mask == 0) throw validation_error("ising: empty subset not allowed");
      if (mask & ~sites.full_mask())
        throw validation_error("ising: subset has out-of-range site");
    }
  }

  // first-axis couplings of a ModelSpec (ising kind uses j1 by definition)
  static IsingInstance from_model(const ModelSpec& spec) {
    std::map<Subset, double> j;
    for (const auto& [mask, c] : spec.couplings.entries()) j[mask] = c.j1;
    return IsingInstance(spec.sites, std::move(j), spec.beta);
  }

  bool ferromagnetic() const {
    for (const auto& [mask, val] : couplings)
      if (val < 0.0) return false;
    return true;
  }

  double abs_sum() const {
    double s = 0.0;
    for (const auto& [mask, val] : couplings) s += std::abs(val);
    return s;
  }
};

namespace detail {

// spin at site x for a configuration mask: bit set means s_x = -1
inline int spin_sign(std::uint64_t config, int x) {
  return (config >> x) & 1 ? -1 : 1;
}

struct CompiledIsing {
  std::vector<double> values;            // J_A in ascending mask order
  std::vector<std::uint64_t> masks;
  std::vector<std::vector<int>> by_site; // coupling indices touching each site

  explicit CompiledIsing(const IsingInstance& inst) {
    by_site.resize(static_cast<std::size_t>(inst.sites.count));
    for (const auto& [mask, val] : inst.couplings) {
      const int idx = static_cast<int>(values.size());
      masks.push_back(mask);
      values.push_back(val);
      for (int x : subset_sites(mask)) by_site[static_cast<std::size_t>(x)].push_back(idx);
    }
  }
};

struct IsingAccumulators {
  PairwiseSum weight;
  std::vector<PairwiseSum> obs;
};

// One Gray-code pass over all 2^N configurations. `shift` is subtracted from
// the energy before exponentiation, so weights stay in (0, 1] whenever
// shift <= min_s H(s).
template <typename Visit>
inline void gray_code_scan(const IsingInstance& inst, const CompiledIsing& comp,
                           Visit&& visit) {
  const int n = inst.sites.count;
  const std::uint64_t total = 1ull << n;
  const std::size_t m = comp.values.size();

  std::vector<int> prod(m, 1);  // current product of spins over each subset
  double energy = 0.0;
  for (std::size_t c = 0; c < m; ++c) energy -= comp.values[c];  // all spins +1

  std::uint64_t config = 0;
  for (std::uint64_t k = 0;; ++k) {
    visit(config, energy);
    if (k + 1 == total) break;
    const int bit = std::countr_zero(k + 1);
    for (int c : comp.by_site[static_cast<std::size_t>(bit)]) {
      energy += 2.0 * comp.values[static_cast<std::size_t>(c)] *
                static_cast<double>(prod[static_cast<std::size_t>(c)]);
      prod[static_cast<std::size_t>(c)] = -prod[static_cast<std::size_t>(c)];
    }
    config ^= 1ull << bit;
  }
}

}  // namespace detail

// Energy of one configuration: -sum_A J_A prod_{x in A} s_x. Bit set at x
// decodes to s_x = -1.
inline double ising_energy(const IsingInstance& inst, std::uint64_t config) {
  if (config & ~inst.sites.full_mask())
    throw validation_error("ising: configuration has bits outside the lattice");
  double e = 0.0;
  for (const auto& [mask, val] : inst.couplings) {
    const int parity = std::popcount(config & mask) & 1;
    e -= val * (parity ? -1.0 : 1.0);
  }
  return e;
}

struct IsingMoments {
  double log_z = 0.0;
  std::vector<double> expectations;  // <prod_{x in X} s_x> per requested mask
};

// Enumerates once and returns log Z together with the expectations of all
// requested spin products. Weights are shifted by a lower bound on the
// energy; when beta * sum|J| is large enough to underflow that bound, a first
// pass locates the true minimum energy instead (log-domain mode).
inline IsingMoments ising_moments(const IsingInstance& inst,
                                  std::span<const Subset> observables) {
  const detail::CompiledIsing comp(inst);

  double shift = -inst.abs_sum();
  if (inst.beta * inst.abs_sum() > 600.0) {
    double min_e = std::numeric_limits<double>::infinity();
    detail::gray_code_scan(inst, comp, [&](std::uint64_t, double e) {
      if (e < min_e) min_e = e;
    });
    shift = min_e;
  }

  detail::IsingAccumulators acc;
  acc.obs.resize(observables.size());
  const double beta = inst.beta;
  detail::gray_code_scan(inst, comp, [&](std::uint64_t config, double e) {
    const double w = std::exp(-beta * (e - shift));
    acc.weight.add(w);
    for (std::size_t i = 0; i < observables.size(); ++i) {
      const int parity = std::popcount(config & observables[i]) & 1;
      acc.obs[i].add(parity ? -w : w);
    }
  });

  IsingMoments out;
  const double w_total = acc.weight.total();
  out.log_z = std::log(w_total) - beta * shift;
  out.expectations.reserve(observables.size());
  for (auto& o : acc.obs) out.expectations.push_back(o.total() / w_total);
  return out;
}

inline double ising_log_partition(const IsingInstance& inst) {
  return ising_moments(inst, {}).log_z;
}

// Z itself; overflows to inf past exp(~709), use ising_log_partition there.
inline double ising_partition(const IsingInstance& inst) {
  return std::exp(ising_log_partition(inst));
}

inline double ising_expectation(const IsingInstance& inst, Subset x_set) {
  const Subset obs[] = {x_set};
  return ising_moments(inst, obs).expectations[0];
}

// <s_X s_Y> - <s_X><s_Y>; overlapping sites square away, so the product
// observable is the symmetric difference X xor Y.
inline double ising_truncated(const IsingInstance& inst, Subset x_set, Subset y_set) {
  const Subset obs[] = {x_set, y_set, x_set ^ y_set};
  const IsingMoments m = ising_moments(inst, obs);
  return m.expectations[2] - m.expectations[0] * m.expectations[1];
}

inline GibbsEstimate ising_estimate(const IsingInstance& inst, Subset x_set) {
  GibbsEstimate est;
  est.value = ising_expectation(inst, x_set);
  // enumeration is exact up to pairwise-summation roundoff
  est.error = 1e-14 * (1.0 + std::abs(est.value)) * inst.sites.count;
  est.method = Method::enumeration;
  return est;
}

}  // namespace spinlab
