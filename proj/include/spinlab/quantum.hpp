#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spinlab/common.hpp"
#include "spinlab/ising.hpp"
#include "spinlab/model.hpp"

// Dense quantum statistical mechanics on (C^{2S+1})^{tensor N}: spin
// operators for arbitrary S, hamiltonian assembly from coupling tables,
// Gibbs traces through one hermitian eigendecomposition per state, the
// doubled tensor-square construction, and the quantum/Ising comparison for
// general spin.

namespace spinlab {

using Operator = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// ----- spin operators -----

struct SpinOps {
  Operator s1, s2, s3;
};

// Ladder construction in the S3 eigenbasis, highest weight first:
// S3 = diag(S, S-1, ..., -S), S+ with the usual sqrt(S(S+1) - m(m+1))
// elements, S1 = (S+ + S-)/2, S2 = (S+ - S-)/2i.
inline SpinOps spin_matrices(int twice_s) {
  if (twice_s < 1) throw validation_error("spin: need 2S >= 1");
  const int d = twice_s + 1;
  const double s = 0.5 * twice_s;

  Operator s3 = Operator::Zero(d, d);
  Operator s_plus = Operator::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = s - i;
    s3(i, i) = m;
    if (i > 0) s_plus(i - 1, i) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  const Operator s_minus = s_plus.adjoint();

  SpinOps ops;
  ops.s1 = 0.5 * (s_plus + s_minus);
  ops.s2 = Complex(0.0, -0.5) * (s_plus - s_minus);
  ops.s3 = s3;
  return ops;
}

struct SpinBasis {
  int twice_s = 1;
  int n_sites = 1;

  long site_dim() const { return twice_s + 1; }

  long dim() const {
    long d = 1;
    for (int i = 0; i < n_sites; ++i) {
      if (d > kMaxQuantumDim / site_dim())
        throw budget_error("quantum: dimension (2S+1)^N exceeds 16384");
      d *= site_dim();
    }
    return d;
  }
};

inline Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// local operator at one site, identity elsewhere; site 0 is the leftmost
// (most significant) tensor factor
inline Operator site_operator(const Operator& local, int site, const SpinBasis& basis) {
  if (site < 0 || site >= basis.n_sites)
    throw validation_error("site_operator: site out of range");
  if (local.rows() != basis.site_dim() || local.cols() != basis.site_dim())
    throw validation_error("site_operator: local dimension mismatch");
  basis.dim();  // budget check

  const long d = basis.site_dim();
  long left = 1, right = 1;
  for (int x = 0; x < site; ++x) left *= d;
  for (int x = site + 1; x < basis.n_sites; ++x) right *= d;
  return kron(kron(Operator::Identity(left, left), local),
              Operator::Identity(right, right));
}

// product over a subset of the same local operator, prod_{x in A} O_x
inline Operator subset_operator(const Operator& local, Subset set, const SpinBasis& basis) {
  basis.dim();
  Operator out = Operator::Identity(1, 1);
  for (int x = 0; x < basis.n_sites; ++x) {
    if (set & (1ull << x))
      out = kron(out, local);
    else
      out = kron(out, Operator::Identity(basis.site_dim(), basis.site_dim()));
  }
  return out;
}

inline bool is_hermitian(const Operator& op, double tol = 1e-12) {
  return (op - op.adjoint()).cwiseAbs().maxCoeff() <=
         tol * std::max(1.0, op.cwiseAbs().maxCoeff());
}

// H = -sum_A [ J1_A prod S^a + J2_A prod S^b ], with (a,b) the requested
// axis pair; defaults to the coupling table's own convention.
inline Operator assemble_hamiltonian(const ModelSpec& spec,
                                     std::optional<AxisPair> axes_override = std::nullopt) {
  const SpinBasis basis{spec.twice_spin, spec.sites.count};
  const long dim = basis.dim();
  const SpinOps ops = spin_matrices(spec.twice_spin);
  const AxisPair axes = axes_override.value_or(spec.couplings.axes());
  const Operator& second = axes == AxisPair::one_two ? ops.s2 : ops.s3;

  Operator h = Operator::Zero(dim, dim);
  for (const auto& [mask, c] : spec.couplings.entries()) {
    if (c.j1 != 0.0) h -= c.j1 * subset_operator(ops.s1, mask, basis);
    if (c.j2 != 0.0) h -= c.j2 * subset_operator(second, mask, basis);
  }
  return h;
}

// ----- Gibbs states -----

// One eigendecomposition serves the partition function, every expectation
// and all truncated correlations of a state. Boltzmann weights are formed
// with the spectrum shifted by its minimum, so large beta cannot overflow.
class ThermalState {
 public:
  // beta = 0 is allowed and gives the normalised-trace (infinite-temperature)
  // state
  ThermalState(const Operator& hamiltonian, double beta) : beta_(beta) {
    if (beta < 0.0) throw validation_error("gibbs: beta must be nonnegative");
    if (hamiltonian.rows() != hamiltonian.cols())
      throw validation_error("gibbs: hamiltonian must be square");
    if (hamiltonian.rows() > kMaxQuantumDim)
      throw budget_error("gibbs: dimension exceeds 16384");
    if (!is_hermitian(hamiltonian))
      throw validation_error("gibbs: hamiltonian is not hermitian");

    Eigen::SelfAdjointEigenSolver<Operator> solver(hamiltonian);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("gibbs: eigensolve failed");
    eigenvalues_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();

    const double e0 = eigenvalues_.minCoeff();
    weights_.resize(eigenvalues_.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
      weights_(i) = std::exp(-beta * (eigenvalues_(i) - e0));
      total += weights_(i);
    }
    weights_ /= total;
    log_partition_ = std::log(total) - beta * e0;
  }

  double beta() const { return beta_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double log_partition() const { return log_partition_; }
  Eigen::Index dim() const { return eigenvalues_.size(); }

  Complex expectation_raw(const Operator& obs) const {
    if (obs.rows() != dim() || obs.cols() != dim())
      throw validation_error("gibbs: observable dimension mismatch");
    const Operator m = obs * vectors_;
    Complex out = 0.0;
    for (Eigen::Index i = 0; i < dim(); ++i)
      out += weights_(i) * vectors_.col(i).dot(m.col(i));
    return out;
  }

  double expectation(const Operator& obs) const { return expectation_raw(obs).real(); }

  double truncated(const Operator& a, const Operator& b) const {
    return expectation(a * b) - expectation(a) * expectation(b);
  }

 private:
  double beta_;
  Eigen::VectorXd eigenvalues_;
  Operator vectors_;
  Eigen::VectorXd weights_;
  double log_partition_ = 0.0;
};

inline double gibbs_expectation(const Operator& hamiltonian, double beta,
                                const Operator& obs) {
  return ThermalState(hamiltonian, beta).expectation(obs);
}

inline double truncated_correlation(const Operator& hamiltonian, double beta,
                                    const Operator& a, const Operator& b) {
  return ThermalState(hamiltonian, beta).truncated(a, b);
}

// ----- doubled (tensor-square) construction -----

inline Operator doubled_operator(const Operator& op, int sign) {
  if (sign != 1 && sign != -1)
    throw validation_error("doubled: sign must be +1 or -1");
  const long dim = op.rows();
  if (dim > kMaxQuantumDim / dim)
    throw budget_error("doubled: squared dimension exceeds 16384");
  const Operator id = Operator::Identity(dim, dim);
  return kron(op, id) + static_cast<double>(sign) * kron(id, op);
}

// Per-site change of basis on the doubled space of N spin-1/2 sites that
// makes the plus/minus lifts of S1 (and the plus lift of S3) entrywise
// nonnegative. Site x of the first replica is paired with site x of the
// second; rows of the returned unitary are the new basis vectors
//   (|++> +/- |-->)/sqrt2,  (|+-> +/- |-+>)/sqrt2
// expressed in replica-major coordinates (i * 2^N + j).
inline Operator mu_nu_basis(int n_sites) {
  if (n_sites < 1 || n_sites > 6)
    throw budget_error("mu_nu_basis: capped at N <= 6");

  const double r = 1.0 / std::sqrt(2.0);
  // rows: mu+, mu-, nu+, nu-; columns: |++>, |+->, |-+>, |-->.
  // nu- carries the phase (|-+> - |+->)/sqrt2: with the opposite sign the
  // minus lifts pick up negative entries and the sign patterns break.
  const double u4[4][4] = {
      {r, 0, 0, r},
      {r, 0, 0, -r},
      {0, r, r, 0},
      {0, -r, r, 0},
  };

  const long half = 1l << n_sites;
  const long dim = half * half;
  Operator u = Operator::Zero(dim, dim);
  for (long row = 0; row < dim; ++row) {
    for (long i = 0; i < half; ++i) {
      for (long j = 0; j < half; ++j) {
        double v = 1.0;
        long labels = row;
        for (int x = 0; x < n_sites; ++x) {
          const int shift = n_sites - 1 - x;
          const int label = static_cast<int>((labels >> (2 * shift)) & 3);
          const int ib = static_cast<int>((i >> shift) & 1);
          const int jb = static_cast<int>((j >> shift) & 1);
          v *= u4[label][2 * ib + jb];
          if (v == 0.0) break;
        }
        if (v != 0.0) u(row, i * half + j) = v;
      }
    }
  }
  return u;
}

// operator expressed in the basis whose vectors are the rows of `basis`
inline Operator conjugate_basis(const Operator& basis, const Operator& op) {
  return basis * op * basis.adjoint();
}

// ----- quantum vs Ising comparison (arbitrary spin) -----

struct QuantumIsingComparison {
  double quantum = 0.0;  // <prod_{x in X} S3_x / S> under the (1,3) hamiltonian
  double ising = 0.0;    // <prod_{x in X} s_x> with couplings S^{|A|} J_A^{(3)}
};

// Compares the normalised third-axis product expectation of the spin-S
// model having couplings (axis 1, axis 3) = (j1, j2) against the Ising
// model whose couplings are the third-axis ones rescaled by S^{|A|}.
// The Ising side dominates for nonnegative couplings; at two sites and
// S = 1/2 the bound is saturated.
inline QuantumIsingComparison composite_ising_quantum_expectation(const ModelSpec& spec,
                                                                  Subset x_set) {
  const SpinBasis basis{spec.twice_spin, spec.sites.count};
  basis.dim();
  const double spin = 0.5 * spec.twice_spin;

  const Operator h = assemble_hamiltonian(spec, AxisPair::one_three);
  const Operator obs = subset_operator(spin_matrices(spec.twice_spin).s3, x_set, basis);
  const double raw = ThermalState(h, spec.beta).expectation(obs);

  QuantumIsingComparison out;
  out.quantum = raw / std::pow(spin, subset_size(x_set));

  std::map<Subset, double> j_ising;
  for (const auto& [mask, c] : spec.couplings.entries())
    j_ising[mask] = std::pow(spin, subset_size(mask)) * c.j2;
  out.ising = ising_expectation(IsingInstance(spec.sites, std::move(j_ising), spec.beta),
                                x_set);
  return out;
}

// (1/N^2) sum_{x,y} <S1_x S1_y>, evaluated as <A^2>/N^2 with A = sum_x S1_x.
inline double finite_volume_magnetisation(const ModelSpec& spec) {
  const SpinBasis basis{spec.twice_spin, spec.sites.count};
  const long dim = basis.dim();
  const SpinOps ops = spin_matrices(spec.twice_spin);

  Operator total = Operator::Zero(dim, dim);
  for (int x = 0; x < spec.sites.count; ++x)
    total += site_operator(ops.s1, x, basis);

  const Operator h = assemble_hamiltonian(spec);
  const double n = spec.sites.count;
  return ThermalState(h, spec.beta).expectation(total * total) / (n * n);
}

}  // namespace spinlab
