#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "spinlab/classical.hpp"
#include "spinlab/common.hpp"
#include "spinlab/ising.hpp"
#include "spinlab/model.hpp"

// Machinery behind the classical proofs: the rewriting of the XY hamiltonian
// as -sum_M K_M cos(M . phi), duplication of the system with a second set of
// angles, cone expressions over cos(M.phi) +/- cos(M.phibar), and the
// decomposition of an XY spin into a pair of Ising spins and an angle in
// [0, pi/2] with its product-of-partition-functions weight.

namespace spinlab {

// ----- cosine form -----

// Integer mode vectors M are stored with a canonical sign: the first nonzero
// component (in site order) is positive, since M and -M give the same cosine.
class CosineForm {
 public:
  explicit CosineForm(int n_sites = 1) : n_sites_(n_sites) {}

  int n_sites() const { return n_sites_; }
  const std::map<std::vector<int>, double>& coefficients() const { return coeff_; }

  void add(std::vector<int> mode, double coefficient) {
    if (static_cast<int>(mode.size()) != n_sites_)
      throw validation_error("cosine form: mode vector size mismatch");
    bool flip = false;
    for (int m : mode) {
      if (m != 0) {
        flip = m < 0;
        break;
      }
    }
    if (flip)
      for (int& m : mode) m = -m;
    coeff_[std::move(mode)] += coefficient;
  }

  double min_coefficient() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& [mode, k] : coeff_) lo = std::min(lo, k);
    return coeff_.empty() ? 0.0 : lo;
  }

  // -sum_M K_M cos(M . phi)
  double energy(std::span<const double> angles) const {
    double e = 0.0;
    for (const auto& [mode, k] : coeff_) {
      double dot = 0.0;
      for (int x = 0; x < n_sites_; ++x)
        dot += mode[static_cast<std::size_t>(x)] * angles[static_cast<std::size_t>(x)];
      e -= k * std::cos(dot);
    }
    return e;
  }

 private:
  int n_sites_;
  std::map<std::vector<int>, double> coeff_;
};

// Expands every prod-cos / prod-sin coupling term through the product
// identities into a sum of cosines of integer combinations. Requires
// J2_A = 0 on odd subsets (a sine product of odd degree has no pure-cosine
// expansion). If in addition J1_A >= |J2_A| everywhere, all returned
// coefficients are nonnegative.
inline CosineForm cosine_form(const CouplingTable& couplings, int n_sites) {
  CosineForm form(n_sites);
  for (const auto& [mask, c] : couplings.entries()) {
    const std::vector<int> sites = subset_sites(mask);
    const int m = static_cast<int>(sites.size());
    if (m % 2 == 1 && c.j2 != 0.0)
      throw validation_error("cosine form: J2 must vanish on odd subsets");

    const double scale = std::ldexp(1.0, -(m - 1));  // 2^{-(m-1)}
    const int sin_parity = (m / 2) % 2 ? -1 : 1;     // (-1)^{m/2} for even m

    // sign choices with the first site fixed to +1; the rest pair up with
    // their negatives into the same cosine
    const std::uint64_t combos = 1ull << (m - 1);
    for (std::uint64_t bits = 0; bits < combos; ++bits) {
      std::vector<int> mode(static_cast<std::size_t>(n_sites), 0);
      int sign_product = 1;
      mode[static_cast<std::size_t>(sites[0])] = 1;
      for (int i = 1; i < m; ++i) {
        const int s = (bits >> (i - 1)) & 1 ? -1 : 1;
        mode[static_cast<std::size_t>(sites[static_cast<std::size_t>(i)])] = s;
        sign_product *= s;
      }
      double k = c.j1 * scale;
      if (m % 2 == 0) k += c.j2 * scale * sin_parity * sign_product;
      form.add(std::move(mode), k);
    }
  }
  return form;
}

// ----- duplicated system -----

struct DuplicatedInstance {
  CosineForm k;      // couplings of the first replica
  CosineForm k_bar;  // couplings of the second replica
  double beta = 1.0;

  DuplicatedInstance(CosineForm k_in, CosineForm k_bar_in, double beta_in)
      : k(std::move(k_in)), k_bar(std::move(k_bar_in)), beta(beta_in) {
    if (beta <= 0.0) throw validation_error("duplicated: beta must be positive");
    if (k.n_sites() != k_bar.n_sites())
      throw validation_error("duplicated: replicas must share the site set");
    // K_M >= Kbar_M >= 0 for every mode appearing in either form
    for (const auto& [mode, kb] : k_bar.coefficients()) {
      auto it = k.coefficients().find(mode);
      const double kv = it == k.coefficients().end() ? 0.0 : it->second;
      if (kb < 0.0 || kv < kb)
        throw validation_error("duplicated: need K_M >= Kbar_M >= 0 for all modes");
    }
    for (const auto& [mode, kv] : k.coefficients())
      if (kv < 0.0)
        throw validation_error("duplicated: need K_M >= Kbar_M >= 0 for all modes");
  }

  int n_sites() const { return k.n_sites(); }
};

// Expression in the cone generated by cos(M.phi) +/- cos(M.phibar):
// sums, products and nonnegative scalings of those atoms.
class ConeExpr {
 public:
  static ConeExpr atom(std::vector<int> mode, int sign) {
    if (sign != 1 && sign != -1) throw validation_error("cone expr: sign must be +1 or -1");
    ConeExpr e;
    e.kind_ = Kind::atom;
    e.mode_ = std::move(mode);
    e.sign_ = sign;
    return e;
  }

  static ConeExpr sum(std::vector<ConeExpr> children) {
    ConeExpr e;
    e.kind_ = Kind::sum;
    e.children_ = std::move(children);
    return e;
  }

  static ConeExpr product(std::vector<ConeExpr> children) {
    ConeExpr e;
    e.kind_ = Kind::product;
    e.children_ = std::move(children);
    return e;
  }

  static ConeExpr scaled(double factor, ConeExpr child) {
    if (factor < 0.0) throw validation_error("cone expr: scale factor must be >= 0");
    ConeExpr e;
    e.kind_ = Kind::scale;
    e.factor_ = factor;
    e.children_.push_back(std::move(child));
    return e;
  }

  double eval(std::span<const double> phi, std::span<const double> phi_bar) const {
    switch (kind_) {
      case Kind::atom: {
        double d1 = 0.0, d2 = 0.0;
        for (std::size_t x = 0; x < mode_.size(); ++x) {
          d1 += mode_[x] * phi[x];
          d2 += mode_[x] * phi_bar[x];
        }
        return std::cos(d1) + sign_ * std::cos(d2);
      }
      case Kind::sum: {
        double s = 0.0;
        for (const ConeExpr& c : children_) s += c.eval(phi, phi_bar);
        return s;
      }
      case Kind::product: {
        double p = 1.0;
        for (const ConeExpr& c : children_) p *= c.eval(phi, phi_bar);
        return p;
      }
      case Kind::scale:
        return factor_ * children_[0].eval(phi, phi_bar);
    }
    return 0.0;
  }

 private:
  enum class Kind { atom, sum, product, scale };
  Kind kind_ = Kind::atom;
  std::vector<int> mode_;
  int sign_ = 1;
  double factor_ = 1.0;
  std::vector<ConeExpr> children_;
};

namespace detail {

struct CompiledCosine {
  struct Mode {
    std::vector<std::pair<int, int>> factors;  // (site, multiplier)
    double k;
  };
  std::vector<Mode> modes;
  double abs_sum = 0.0;

  explicit CompiledCosine(const CosineForm& form) {
    for (const auto& [mode, k] : form.coefficients()) {
      Mode m;
      m.k = k;
      for (int x = 0; x < form.n_sites(); ++x)
        if (mode[static_cast<std::size_t>(x)] != 0)
          m.factors.emplace_back(x, mode[static_cast<std::size_t>(x)]);
      modes.push_back(std::move(m));
      abs_sum += std::abs(k);
    }
  }

  double energy(std::span<const double> angles) const {
    double e = 0.0;
    for (const Mode& m : modes) {
      double dot = 0.0;
      for (auto [site, mult] : m.factors) dot += mult * angles[static_cast<std::size_t>(site)];
      e -= m.k * std::cos(dot);
    }
    return e;
  }
};

}  // namespace detail

// <expr> under e^{-beta (H_K(phi) + H_Kbar(phibar))} / (Z_K Z_Kbar), by
// tensor-grid quadrature over the doubled angle space. Capped at N <= 3
// (grid dimension 2N <= 6).
inline GibbsEstimate duplicated_expectation(const DuplicatedInstance& dup,
                                            const ConeExpr& expr,
                                            const QuadratureOptions& opt_in = {}) {
  const int n = dup.n_sites();
  if (n > 3) throw budget_error("duplicated: capped at N <= 3 sites");

  QuadratureOptions opt = opt_in;
  if (opt.nodes < 8) throw validation_error("quadrature: need at least 8 nodes per site");

  const detail::CompiledCosine comp_k(dup.k);
  const detail::CompiledCosine comp_kbar(dup.k_bar);
  const int dims = 2 * n;
  const double beta = dup.beta;

  auto pass = [&](int nodes) {
    std::vector<double> angle_node(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i)
      angle_node[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * i / nodes;

    std::vector<int> digit(static_cast<std::size_t>(dims), 0);
    std::vector<double> angles(static_cast<std::size_t>(dims), 0.0);
    auto phi = std::span<const double>(angles).subspan(0, static_cast<std::size_t>(n));
    auto phi_bar = std::span<const double>(angles).subspan(static_cast<std::size_t>(n));

    PairwiseSum weight, value;
    double points = 1.0;
    for (int d = 0; d < dims; ++d) points *= nodes;
    const std::uint64_t total = static_cast<std::uint64_t>(points);
    const double shift = -(comp_k.abs_sum + comp_kbar.abs_sum);

    for (std::uint64_t kk = 0;; ++kk) {
      const double w = std::exp(
          -beta * (comp_k.energy(phi) + comp_kbar.energy(phi_bar) - shift));
      weight.add(w);
      value.add(w * expr.eval(phi, phi_bar));
      if (kk + 1 == total) break;
      for (int d = dims - 1; d >= 0; --d) {
        auto ds = static_cast<std::size_t>(d);
        if (++digit[ds] == nodes) digit[ds] = 0;
        angles[ds] = angle_node[static_cast<std::size_t>(digit[ds])];
        if (digit[ds] != 0) break;
      }
    }
    return value.total() / weight.total();
  };

  auto affordable = [&](int nodes) {
    double pts = 1.0;
    for (int d = 0; d < dims; ++d) pts *= nodes;
    return pts <= 2147483648.0;
  };

  int nodes = opt.nodes;
  while (!affordable(nodes) && nodes > 8) nodes /= 2;

  double coarse = pass(nodes / 2);
  double fine = pass(nodes);
  while (std::abs(fine - coarse) > opt.target && nodes * 2 <= opt.max_nodes &&
         affordable(nodes * 2)) {
    nodes *= 2;
    coarse = fine;
    fine = pass(nodes);
  }

  GibbsEstimate est;
  est.value = fine;
  est.error = std::abs(fine - coarse);
  est.method = Method::quadrature;
  est.converged = est.error <= opt.target;
  return est;
}

// ----- Ising decomposition of the XY measure -----

// The two Ising systems an XY configuration factorises into at fixed
// theta in [0, pi/2]^N: cosine-damped first-axis couplings and sine-damped
// second-axis couplings. beta is absorbed into the couplings; both factors
// live at inverse temperature 1.
struct DecompositionFactors {
  IsingInstance cos_factor;
  IsingInstance sin_factor;
};

inline DecompositionFactors ising_decomposition_factors(
    const ClassicalInstance& inst, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != inst.sites.count)
    throw validation_error("decomposition: theta size mismatch");

  std::map<Subset, double> j_cos, j_sin;
  for (const auto& [mask, c] : inst.couplings.entries()) {
    double pc = 1.0, ps = 1.0;
    for (int x : subset_sites(mask)) {
      pc *= std::cos(theta[static_cast<std::size_t>(x)]);
      ps *= std::sin(theta[static_cast<std::size_t>(x)]);
    }
    j_cos[mask] = inst.beta * c.j1 * pc;
    j_sin[mask] = inst.beta * c.j2 * ps;
  }
  return {IsingInstance(inst.sites, std::move(j_cos), 1.0),
          IsingInstance(inst.sites, std::move(j_sin), 1.0)};
}

inline double ising_decomposition_log_weight(const ClassicalInstance& inst,
                                             std::span<const double> theta) {
  const DecompositionFactors f = ising_decomposition_factors(inst, theta);
  return ising_log_partition(f.cos_factor) + ising_log_partition(f.sin_factor);
}

// Unnormalised weight Z_cos(theta) * Z_sin(theta) of the angle marginal.
inline double ising_decomposition_weight(const ClassicalInstance& inst,
                                         std::span<const double> theta) {
  return std::exp(ising_decomposition_log_weight(inst, theta));
}

// Lattice-condition margin for the decomposition weight, normalised by
// w(theta) w(xi):  w(or) w(and) / (w(theta) w(xi)) - 1. Nonnegative up to
// roundoff for ferromagnetic instances.
inline double fkg_lattice_margin(const ClassicalInstance& inst,
                                 std::span<const double> theta,
                                 std::span<const double> xi) {
  if (theta.size() != xi.size())
    throw validation_error("fkg: theta and xi size mismatch");
  const std::size_t n = theta.size();
  std::vector<double> hi(n), lo(n);
  for (std::size_t i = 0; i < n; ++i) {
    hi[i] = std::max(theta[i], xi[i]);
    lo[i] = std::min(theta[i], xi[i]);
  }
  const double log_join = ising_decomposition_log_weight(inst, hi);
  const double log_meet = ising_decomposition_log_weight(inst, lo);
  const double log_theta = ising_decomposition_log_weight(inst, theta);
  const double log_xi = ising_decomposition_log_weight(inst, xi);
  return std::expm1(log_join + log_meet - log_theta - log_xi);
}

}  // namespace spinlab
