#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "spinlab/classical.hpp"
#include "spinlab/common.hpp"
#include "spinlab/decomposition.hpp"
#include "spinlab/ising.hpp"
#include "spinlab/model.hpp"
#include "spinlab/quantum.hpp"

// Randomised, seeded verification campaigns over the correlation
// inequalities: instance generation, sign checks, finite-difference
// monotonicity, cross-model comparisons, and machine-readable reports.
// A fixed (config, seed) pair reproduces a byte-identical report.

namespace spinlab {

// ----- configuration -----

enum class Engine { exact, mc };
enum class Family { classical_xy, quantum_xy, ising, kitaev };
enum class CouplingMode { ferromagnetic, correlated, two_body };

struct TolerancePolicy {
  double exact = 1e-9;     // sign checks through exact engines
  double fd = 1e-7;        // finite-difference monotonicity checks
  double mc_sigma = 3.0;   // MC checks pass within mc_sigma standard errors
};

struct SweepConfig {
  Family family = Family::classical_xy;
  int min_sites = 2;
  int max_sites = 4;
  CouplingMode mode = CouplingMode::ferromagnetic;
  double j_min = 0.0;
  double j_max = 2.0;
  int max_subset_size = 2;
  double beta_min = 0.05;
  double beta_max = 2.0;
  int count = 100;
  std::uint64_t seed = 1;
  Engine engine = Engine::exact;
  std::vector<int> twice_spins = {1};      // cycled over instances
  std::vector<std::string> checks = {"T1"};
  TolerancePolicy tol;
  long mc_sweeps = 200000;
  long mc_burn_in = -1;
  bool check_hypotheses = true;
};

namespace detail {

inline bool has_check(const SweepConfig& cfg, const std::string& name) {
  for (const auto& c : cfg.checks)
    if (c == name) return true;
  return false;
}

}  // namespace detail

inline void validate(const SweepConfig& cfg) {
  if (cfg.count < 1) throw validation_error("sweep: count must be >= 1");
  if (cfg.min_sites < 1 || cfg.max_sites < cfg.min_sites)
    throw validation_error("sweep: invalid site range");
  if (cfg.beta_min <= 0.0 || cfg.beta_max < cfg.beta_min)
    throw validation_error("sweep: invalid beta range");
  if (cfg.j_max < cfg.j_min) throw validation_error("sweep: invalid coupling range");
  if (cfg.max_subset_size < 1) throw validation_error("sweep: invalid subset size cap");
  if (cfg.checks.empty()) throw validation_error("sweep: no checks enabled");
  if (cfg.twice_spins.empty()) throw validation_error("sweep: no spin values");
  if (cfg.check_hypotheses && cfg.j_min < 0.0)
    throw validation_error(
        "sweep: negative couplings violate the ferromagnetic hypothesis; "
        "set check_hypotheses=false to probe violations");
  if (cfg.family == Family::classical_xy && cfg.engine == Engine::exact &&
      cfg.max_sites > kMaxQuadratureSites)
    throw validation_error("sweep: classical quadrature capped at N <= 5");
  const bool fd_checks = detail::has_check(cfg, "C2") || detail::has_check(cfg, "T3");
  if (fd_checks && cfg.engine == Engine::mc)
    throw validation_error("sweep: finite-difference checks require the exact engine");
  if (detail::has_check(cfg, "T3") &&
      (cfg.family != Family::classical_xy || cfg.mode == CouplingMode::ferromagnetic))
    throw validation_error(
        "sweep: temperature monotonicity needs classical instances in the "
        "correlated or two-body coupling mode");
  if (cfg.mode == CouplingMode::correlated || cfg.mode == CouplingMode::two_body) {
    if (cfg.min_sites < 2)
      throw validation_error("sweep: correlated/two-body modes need N >= 2");
  }
  if (cfg.family == Family::quantum_xy) {
    for (int ts : cfg.twice_spins) {
      long dim = 1;
      for (int i = 0; i < cfg.max_sites; ++i) {
        dim *= ts + 1;
        if (dim > kMaxQuantumDim)
          throw validation_error("sweep: quantum dimension budget exceeded");
      }
    }
  }
}

// ----- report -----

struct CheckRecord {
  int instance = -1;
  std::string theorem;
  std::string digest;
  std::vector<int> x, y;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;     // normalised: pass iff margin >= -tolerance
  double tolerance = 0.0;
  bool pass = true;
};

struct InequalityReport {
  json config;
  std::vector<CheckRecord> checks;
  int failures = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  int worst_index = -1;
  std::optional<double> t3_negative_j2_fraction;
  std::vector<std::string> errors;
  json worst_instance;
  std::vector<json> failed_instances;

  json to_json() const {
    json j;
    j["config"] = config;
    json arr = json::array();
    for (const CheckRecord& r : checks) {
      json c;
      c["instance"] = r.instance;
      c["theorem"] = r.theorem;
      c["digest"] = r.digest;
      c["x"] = r.x;
      c["y"] = r.y;
      c["lhs"] = r.lhs;
      c["rhs"] = r.rhs;
      c["margin"] = r.margin;
      c["tolerance"] = r.tolerance;
      c["pass"] = r.pass;
      arr.push_back(std::move(c));
    }
    j["checks"] = std::move(arr);
    json summary;
    summary["checks"] = checks.size();
    summary["failures"] = failures;
    summary["worst_margin"] = worst_margin;
    summary["worst_index"] = worst_index;
    if (t3_negative_j2_fraction)
      summary["t3_negative_j2_fraction"] = *t3_negative_j2_fraction;
    j["summary"] = std::move(summary);
    if (!errors.empty()) j["errors"] = errors;
    if (!worst_instance.is_null()) j["worst_instance"] = worst_instance;
    if (!failed_instances.empty()) j["failed_instances"] = failed_instances;
    return j;
  }

  // one row per check; `campaign` distinguishes segments of multi-sweep runs
  std::string to_csv(int campaign = 0, bool header = true) const {
    std::string out;
    if (header) out = "campaign,instance,theorem,digest,x,y,lhs,rhs,margin,tolerance,pass\n";
    char buf[512];
    auto sites_field = [](const std::vector<int>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(v[i]);
      }
      return s;
    };
    for (const CheckRecord& r : checks) {
      std::snprintf(buf, sizeof buf, "%d,%d,%s,%s,%s,%s,%.17g,%.17g,%.17g,%.17g,%d\n",
                    campaign, r.instance, r.theorem.c_str(), r.digest.c_str(),
                    sites_field(r.x).c_str(), sites_field(r.y).c_str(), r.lhs, r.rhs,
                    r.margin, r.tolerance, r.pass ? 1 : 0);
      out += buf;
    }
    return out;
  }
};

// ----- individual checks -----

struct CheckOptions {
  Engine engine = Engine::exact;
  double quad_target = 1e-11;   // per-expectation goal for the exact classical engine
  double fd_step = 1e-4;
  double fd_quad_target = 1e-12;
  long mc_sweeps = 200000;
  long mc_burn_in = -1;
  std::uint64_t mc_seed = 1;
  double mc_sigma = 3.0;
  double exact_tol = 1e-9;
};

struct TheoremOneMargins {
  double pp = 0.0;      // truncated <s1_X ; s1_Y>, expected >= 0
  double ps = 0.0;      // truncated <s1_X ; s2_Y>, expected <= 0
  double lhs_pp = 0.0, rhs_pp = 0.0;
  double lhs_ps = 0.0, rhs_ps = 0.0;
  double tol_pp = 0.0, tol_ps = 0.0;
};

// Ginibre sign pair for one instance and one (X, Y). The second-axis
// observable follows the coupling table's axis convention (sigma^2 / S^2,
// or S^3 for 1-3 tables).
inline TheoremOneMargins check_theorem1(const ModelSpec& spec, Subset x_set,
                                        Subset y_set, const CheckOptions& opt = {}) {
  TheoremOneMargins out;
  out.tol_pp = out.tol_ps = opt.exact_tol;

  if (spec.kind() == ModelKind::quantum_xy) {
    const SpinBasis basis{spec.twice_spin, spec.sites.count};
    const SpinOps ops = spin_matrices(spec.twice_spin);
    const Operator& second =
        spec.couplings.axes() == AxisPair::one_two ? ops.s2 : ops.s3;
    const ThermalState state(assemble_hamiltonian(spec), spec.beta);
    const Operator ox = subset_operator(ops.s1, x_set, basis);
    const Operator oy1 = subset_operator(ops.s1, y_set, basis);
    const Operator oy2 = subset_operator(second, y_set, basis);
    const double ex = state.expectation(ox);
    out.lhs_pp = state.expectation(ox * oy1);
    out.rhs_pp = ex * state.expectation(oy1);
    out.lhs_ps = state.expectation(ox * oy2);
    out.rhs_ps = ex * state.expectation(oy2);
    out.pp = out.lhs_pp - out.rhs_pp;
    out.ps = out.lhs_ps - out.rhs_ps;
    return out;
  }

  const ClassicalInstance inst = ClassicalInstance::from_model(spec);
  ObservableSpec obs_x = ObservableSpec::product(x_set, 1);
  ObservableSpec obs_y1 = ObservableSpec::product(y_set, 1);
  ObservableSpec obs_y2 = ObservableSpec::product(y_set, 2);
  ObservableSpec obs_xy1 = obs_x;
  obs_xy1.append(y_set, 1);
  ObservableSpec obs_xy2 = obs_x;
  obs_xy2.append(y_set, 2);
  const ObservableSpec all[] = {obs_x, obs_y1, obs_xy1, obs_y2, obs_xy2};

  if (opt.engine == Engine::exact) {
    QuadratureOptions qopt;
    qopt.target = opt.quad_target;
    const auto est = quadrature_expectations(inst, all, qopt);
    out.lhs_pp = est[2].value;
    out.rhs_pp = est[0].value * est[1].value;
    out.lhs_ps = est[4].value;
    out.rhs_ps = est[0].value * est[3].value;
  } else {
    McOptions mopt;
    mopt.sweeps = opt.mc_sweeps;
    mopt.burn_in = opt.mc_burn_in;
    mopt.seed = opt.mc_seed;
    const McResult mc = mc_expectations(inst, all, mopt);
    const auto pp = jackknife(mc.batch_means, [](std::span<const double> v) {
      return v[2] - v[0] * v[1];
    });
    const auto ps = jackknife(mc.batch_means, [](std::span<const double> v) {
      return v[4] - v[0] * v[3];
    });
    out.lhs_pp = mc.estimates[2].value;
    out.rhs_pp = mc.estimates[0].value * mc.estimates[1].value;
    out.lhs_ps = mc.estimates[4].value;
    out.rhs_ps = mc.estimates[0].value * mc.estimates[3].value;
    out.tol_pp = std::max(opt.exact_tol, opt.mc_sigma * pp.stderr_);
    out.tol_ps = std::max(opt.exact_tol, opt.mc_sigma * ps.stderr_);
  }
  out.pp = out.lhs_pp - out.rhs_pp;
  out.ps = out.lhs_ps - out.rhs_ps;
  return out;
}

namespace detail {

inline double first_axis_expectation(const ModelSpec& spec, Subset x_set,
                                     double quad_target) {
  if (spec.kind() == ModelKind::quantum_xy) {
    const SpinBasis basis{spec.twice_spin, spec.sites.count};
    const Operator obs =
        subset_operator(spin_matrices(spec.twice_spin).s1, x_set, basis);
    return ThermalState(assemble_hamiltonian(spec), spec.beta).expectation(obs);
  }
  if (spec.kind() == ModelKind::ising)
    return ising_expectation(IsingInstance::from_model(spec), x_set);
  QuadratureOptions qopt;
  qopt.target = quad_target;
  const ObservableSpec obs[] = {ObservableSpec::product(x_set, 1)};
  return quadrature_expectations(ClassicalInstance::from_model(spec), obs, qopt)[0].value;
}

}  // namespace detail

// Central finite difference of <prod_{x in X} (first axis)_x> in J^axis_Y.
// Expected >= -tol for axis 1, <= tol for axis 2.
inline double check_coupling_monotonicity(const ModelSpec& spec, Subset x_set,
                                          Subset y_set, int axis,
                                          const CheckOptions& opt = {}) {
  if (axis != 1 && axis != 2)
    throw validation_error("monotonicity: axis must be 1 or 2");
  if (y_set == 0) return 0.0;
  const double h = opt.fd_step;
  ModelSpec plus = spec, minus = spec;
  plus.couplings.adjust(y_set, axis, h);
  minus.couplings.adjust(y_set, axis, -h);
  const double fp = detail::first_axis_expectation(plus, x_set, opt.fd_quad_target);
  const double fm = detail::first_axis_expectation(minus, x_set, opt.fd_quad_target);
  return (fp - fm) / (2.0 * h);
}

// Central finite difference of <sigma^1_B> in beta for classical instances
// with J1_A >= |J2_A| and J2_A = 0 on odd subsets. Expected >= -tol.
inline double check_beta_monotonicity(const ModelSpec& spec, Subset b_set,
                                      const CheckOptions& opt = {}) {
  if (spec.kind() != ModelKind::classical_xy)
    throw validation_error("beta monotonicity: classical instances only");
  for (const auto& [mask, c] : spec.couplings.entries()) {
    if (c.j1 < std::abs(c.j2))
      throw validation_error("beta monotonicity: hypothesis J1 >= |J2| violated");
    if (subset_size(mask) % 2 == 1 && c.j2 != 0.0)
      throw validation_error("beta monotonicity: hypothesis J2 = 0 on odd subsets violated");
  }
  const double h = opt.fd_step;
  ModelSpec plus = spec, minus = spec;
  plus.beta += h;
  minus.beta -= h;
  if (minus.beta <= 0.0) throw validation_error("beta monotonicity: beta too small for step");
  const double fp = detail::first_axis_expectation(plus, b_set, opt.fd_quad_target);
  const double fm = detail::first_axis_expectation(minus, b_set, opt.fd_quad_target);
  return (fp - fm) / (2.0 * h);
}

// Two-body form: derivative of <sigma^1_A> in the pair strength J_xy, which
// moves (j1, j2) of that pair jointly by (1, eta). Expected >= -tol when
// |eta| <= 1.
inline double check_two_body_monotonicity(const ModelSpec& spec, Subset a_set,
                                          Subset pair, double eta,
                                          const CheckOptions& opt = {}) {
  if (subset_size(pair) != 2)
    throw validation_error("two-body monotonicity: pair subset must have two sites");
  if (std::abs(eta) > 1.0)
    throw validation_error("two-body monotonicity: need |eta| <= 1");
  const double h = opt.fd_step;
  ModelSpec plus = spec, minus = spec;
  plus.couplings.adjust(pair, 1, h);
  plus.couplings.adjust(pair, 2, eta * h);
  minus.couplings.adjust(pair, 1, -h);
  minus.couplings.adjust(pair, 2, -eta * h);
  const double fp = detail::first_axis_expectation(plus, a_set, opt.fd_quad_target);
  const double fm = detail::first_axis_expectation(minus, a_set, opt.fd_quad_target);
  return (fp - fm) / (2.0 * h);
}

// Ising domination margins. Classical: <s_X>_{J1} - <sigma^1_X>. Quantum
// spin-1/2, (1,2) axes: 2^{-|X|} <s_X>_{J*} - <S1_X> with J*_A = 2^{-|A|} J1_A.
inline double check_xy_vs_ising_classical(const ModelSpec& spec, Subset x_set,
                                          const CheckOptions& opt = {}) {
  std::map<Subset, double> j1;
  for (const auto& [mask, c] : spec.couplings.entries()) j1[mask] = c.j1;
  const double ising =
      ising_expectation(IsingInstance(spec.sites, std::move(j1), spec.beta), x_set);
  const double xy = detail::first_axis_expectation(spec, x_set, opt.quad_target);
  return ising - xy;
}

inline double check_xy_vs_ising_quantum_direct(const ModelSpec& spec, Subset x_set) {
  if (spec.twice_spin != 1)
    throw validation_error("direct quantum comparison is spin-1/2 only");
  std::map<Subset, double> j_star;
  for (const auto& [mask, c] : spec.couplings.entries())
    j_star[mask] = std::ldexp(c.j1, -subset_size(mask));
  const double ising =
      ising_expectation(IsingInstance(spec.sites, std::move(j_star), spec.beta), x_set);

  const SpinBasis basis{1, spec.sites.count};
  const Operator obs = subset_operator(spin_matrices(1).s1, x_set, basis);
  const double quantum =
      ThermalState(assemble_hamiltonian(spec, AxisPair::one_two), spec.beta)
          .expectation(obs);
  return std::ldexp(ising, -subset_size(x_set)) - quantum;
}

// dispatcher matching the model kind; quantum goes through the composite
// general-spin comparison
inline double check_xy_vs_ising(const ModelSpec& spec, Subset x_set,
                                const CheckOptions& opt = {}) {
  if (spec.kind() == ModelKind::quantum_xy) {
    const QuantumIsingComparison c = composite_ising_quantum_expectation(spec, x_set);
    return c.ising - c.quantum;
  }
  return check_xy_vs_ising_classical(spec, x_set, opt);
}

// FKG lattice-condition margin of the decomposition weight, normalised by
// w(theta) w(xi); expected >= -tol.
inline double check_fkg_hypothesis(const ModelSpec& spec, std::span<const double> theta,
                                   std::span<const double> xi) {
  if (spec.kind() != ModelKind::classical_xy)
    throw validation_error("fkg: classical instances only");
  if (!spec.couplings.ferromagnetic())
    throw validation_error("fkg: ferromagnetic instances only");
  return fkg_lattice_margin(ClassicalInstance::from_model(spec), theta, xi);
}

// ----- instance generation -----

struct GeneratedInstance {
  ModelSpec spec;
  Subset x = 0, y = 0;
  std::vector<double> theta, xi;
  Subset two_body_pair = 0;
  double two_body_eta = 0.0;
  bool has_negative_j2 = false;
  std::uint64_t seed = 0;
};

namespace detail {

inline Subset random_subset_of_size(Rng& rng, int n_sites, int size) {
  std::vector<int> sites(static_cast<std::size_t>(n_sites));
  for (int i = 0; i < n_sites; ++i) sites[static_cast<std::size_t>(i)] = i;
  Subset mask = 0;
  for (int k = 0; k < size; ++k) {
    const auto pick = static_cast<std::size_t>(rng.uniform_int(k, n_sites - 1));
    std::swap(sites[static_cast<std::size_t>(k)], sites[pick]);
    mask |= 1ull << sites[static_cast<std::size_t>(k)];
  }
  return mask;
}

inline Subset random_nonempty_subset(Rng& rng, int n_sites) {
  const std::uint64_t full = n_sites == 64 ? ~0ull : (1ull << n_sites) - 1;
  return 1 + static_cast<Subset>(rng.uniform_int(0, static_cast<std::int64_t>(full) - 1));
}

}  // namespace detail

inline GeneratedInstance generate_instance(const SweepConfig& cfg, int index) {
  GeneratedInstance out;
  out.seed = substream_seed(cfg.seed, static_cast<std::uint64_t>(index));
  Rng rng(out.seed);

  if (cfg.family == Family::kitaev) {
    // alternate between the 1x1 and 2x1 lattices
    const int width = index % 2 == 0 ? 1 : 2;
    const KitaevLattice lat{width, 1};
    std::vector<double> jx(static_cast<std::size_t>(lat.vertices()));
    std::vector<double> jf(static_cast<std::size_t>(lat.faces()));
    for (double& v : jx) v = rng.uniform(std::max(0.0, cfg.j_min), cfg.j_max);
    for (double& v : jf) v = rng.uniform(std::max(0.0, cfg.j_min), cfg.j_max);
    out.spec.sites = SiteSet(lat.edges());
    out.spec.sites.geometry = Geometry{GeometryKind::kitaev_edges, {width, 1}, false};
    out.spec.couplings = kitaev_couplings(width, 1, jx, jf);
    out.spec.twice_spin = 1;
    out.spec.beta = rng.uniform(cfg.beta_min, cfg.beta_max);
    out.x = detail::random_nonempty_subset(rng, lat.edges());
    out.y = detail::random_nonempty_subset(rng, lat.edges());
    return out;
  }

  const int n = static_cast<int>(rng.uniform_int(cfg.min_sites, cfg.max_sites));
  out.spec.sites = SiteSet(n);
  out.spec.beta = rng.uniform(cfg.beta_min, cfg.beta_max);
  out.spec.twice_spin =
      cfg.twice_spins[static_cast<std::size_t>(index) % cfg.twice_spins.size()];

  ModelKind kind = ModelKind::classical_xy;
  if (cfg.family == Family::quantum_xy) kind = ModelKind::quantum_xy;
  if (cfg.family == Family::ising) kind = ModelKind::ising;
  CouplingTable table(kind);

  const int max_size = std::min(cfg.max_subset_size, n);
  const int n_entries = static_cast<int>(rng.uniform_int(1, n + 1));
  for (int e = 0; e < n_entries; ++e) {
    int size = static_cast<int>(rng.uniform_int(1, max_size));
    if (cfg.mode == CouplingMode::two_body) size = 2;
    if (cfg.mode == CouplingMode::correlated && e == 0) size = 2;  // ensure an even entry
    Subset mask = detail::random_subset_of_size(rng, n, size);
    if (table.contains(mask)) continue;

    double j1 = 0.0, j2 = 0.0;
    switch (cfg.mode) {
      case CouplingMode::ferromagnetic:
        j1 = rng.uniform(cfg.j_min, cfg.j_max);
        j2 = kind == ModelKind::ising ? 0.0 : rng.uniform(cfg.j_min, cfg.j_max);
        break;
      case CouplingMode::correlated: {
        j1 = rng.uniform(std::max(0.0, cfg.j_min), cfg.j_max);
        if (size % 2 == 0) {
          double eta = rng.uniform(-1.0, 1.0);
          // guarantee negative-J2 coverage on half the instances
          if (e == 0 && index % 2 == 0) eta = -std::abs(eta);
          j2 = eta * j1;
        }
        break;
      }
      case CouplingMode::two_body: {
        j1 = rng.uniform(std::max(0.0, cfg.j_min), cfg.j_max);
        double eta = rng.uniform(-1.0, 1.0);
        if (e == 0 && index % 2 == 0) eta = -std::abs(eta);
        j2 = eta * j1;
        if (out.two_body_pair == 0) {
          out.two_body_pair = mask;
          out.two_body_eta = eta;
        }
        break;
      }
    }
    if (j2 < 0.0) out.has_negative_j2 = true;
    table.add(mask, j1, j2);
  }
  out.spec.couplings = std::move(table);

  out.x = detail::random_nonempty_subset(rng, n);
  out.y = detail::random_nonempty_subset(rng, n);
  out.theta.resize(static_cast<std::size_t>(n));
  out.xi.resize(static_cast<std::size_t>(n));
  for (double& t : out.theta) t = rng.uniform(0.0, 0.5 * std::numbers::pi);
  for (double& t : out.xi) t = rng.uniform(0.0, 0.5 * std::numbers::pi);
  return out;
}

// ----- sweep driver -----

inline json sweep_config_to_json(const SweepConfig& cfg);

namespace detail {

inline void evaluate_instance(const SweepConfig& cfg, int index,
                              const GeneratedInstance& gen,
                              std::vector<CheckRecord>& records,
                              std::vector<std::string>& errors) {
  const ModelSpec& spec = gen.spec;
  const std::string digest = hex64(fnv1a(model_to_json(spec).dump()));
  const std::vector<int> x_sites = subset_sites(gen.x);
  const std::vector<int> y_sites = subset_sites(gen.y);

  CheckOptions opt;
  opt.engine = cfg.engine;
  opt.exact_tol = cfg.tol.exact;
  opt.mc_sigma = cfg.tol.mc_sigma;
  opt.mc_sweeps = cfg.mc_sweeps;
  opt.mc_burn_in = cfg.mc_burn_in;
  opt.mc_seed = substream_seed(gen.seed, 0x6d63);

  auto push = [&](const std::string& theorem, double lhs, double rhs, double margin,
                  double tol, const std::vector<int>& x, const std::vector<int>& y) {
    CheckRecord r;
    r.instance = index;
    r.theorem = theorem;
    r.digest = digest;
    r.x = x;
    r.y = y;
    r.lhs = lhs;
    r.rhs = rhs;
    r.margin = margin;
    r.tolerance = tol;
    r.pass = margin >= -tol;
    records.push_back(std::move(r));
  };

  const bool quantum = spec.kind() == ModelKind::quantum_xy;
  const char* tag = quantum ? "qu" : (spec.kind() == ModelKind::ising ? "is" : "cl");

  try {
    if (has_check(cfg, "T1")) {
      if (spec.kind() == ModelKind::ising) {
        const IsingInstance inst = IsingInstance::from_model(spec);
        const Subset obs[] = {gen.x, gen.y, gen.x ^ gen.y};
        const IsingMoments m = ising_moments(inst, obs);
        push("G1-is", m.expectations[0], 0.0, m.expectations[0], cfg.tol.exact,
             x_sites, {});
        const double truncated = m.expectations[2] - m.expectations[0] * m.expectations[1];
        push("G2-is", m.expectations[2], m.expectations[0] * m.expectations[1], truncated,
             cfg.tol.exact, x_sites, y_sites);
      } else {
        const TheoremOneMargins m = check_theorem1(spec, gen.x, gen.y, opt);
        push(std::string("T1-") + tag + "-pp", m.lhs_pp, m.rhs_pp, m.pp, m.tol_pp,
             x_sites, y_sites);
        push(std::string("T1-") + tag + "-ps", m.lhs_ps, m.rhs_ps, -m.ps, m.tol_ps,
             x_sites, y_sites);
      }
    }

    if (has_check(cfg, "C2")) {
      const double d1 = check_coupling_monotonicity(spec, gen.x, gen.y, 1, opt);
      push(std::string("C2-") + tag + "-1", d1, 0.0, d1, cfg.tol.fd, x_sites, y_sites);
      if (spec.kind() != ModelKind::ising) {
        const double d2 = check_coupling_monotonicity(spec, gen.x, gen.y, 2, opt);
        push(std::string("C2-") + tag + "-2", d2, 0.0, -d2, cfg.tol.fd, x_sites, y_sites);
      }
    }

    if (has_check(cfg, "T3")) {
      const double db = check_beta_monotonicity(spec, gen.x, opt);
      push("T3-beta", db, 0.0, db, cfg.tol.fd, x_sites, {});
      if (cfg.mode == CouplingMode::two_body && gen.two_body_pair != 0) {
        const double dj = check_two_body_monotonicity(spec, gen.x, gen.two_body_pair,
                                                      gen.two_body_eta, opt);
        push("T3-2body", dj, 0.0, dj, cfg.tol.fd, x_sites,
             subset_sites(gen.two_body_pair));
      }
    }

    if (has_check(cfg, "T4")) {
      if (quantum) {
        if (spec.twice_spin == 1) {
          const double m12 = check_xy_vs_ising_quantum_direct(spec, gen.x);
          push("T4-qu-12", m12, 0.0, m12, cfg.tol.exact, x_sites, {});
        }
        const QuantumIsingComparison c = composite_ising_quantum_expectation(spec, gen.x);
        push("T4-qu-13", c.ising, c.quantum, c.ising - c.quantum, cfg.tol.exact,
             x_sites, {});
      } else if (spec.kind() == ModelKind::classical_xy) {
        const double m = check_xy_vs_ising_classical(spec, gen.x, opt);
        push("T4-cl", m, 0.0, m, cfg.tol.exact, x_sites, {});
      }
    }

    if (has_check(cfg, "FKG") && spec.kind() == ModelKind::classical_xy) {
      const double m = check_fkg_hypothesis(spec, gen.theta, gen.xi);
      push("FKG", m + 1.0, 1.0, m, cfg.tol.exact, {}, {});
    }
  } catch (const budget_error& e) {
    errors.push_back("instance " + std::to_string(index) + ": " + e.what());
  }
}

}  // namespace detail

// Runs every enabled check over `count` generated instances. Deterministic
// for a fixed config: the report bytes do not depend on the thread count,
// since each instance is generated up front and evaluated independently.
inline InequalityReport run_sweep(const SweepConfig& cfg, int threads = 1) {
  validate(cfg);

  std::vector<GeneratedInstance> instances;
  instances.reserve(static_cast<std::size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) instances.push_back(generate_instance(cfg, i));

  std::vector<std::vector<CheckRecord>> slots(instances.size());
  std::vector<std::vector<std::string>> error_slots(instances.size());

  const int workers = std::max(1, std::min<int>(threads, cfg.count));
  if (workers == 1) {
    for (std::size_t i = 0; i < instances.size(); ++i)
      detail::evaluate_instance(cfg, static_cast<int>(i), instances[i], slots[i],
                                error_slots[i]);
  } else {
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= instances.size()) return;
        detail::evaluate_instance(cfg, static_cast<int>(i), instances[i], slots[i],
                                  error_slots[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  InequalityReport report;
  report.config = sweep_config_to_json(cfg);

  int worst_instance_index = -1;
  std::vector<bool> instance_failed(instances.size(), false);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (CheckRecord& r : slots[i]) {
      if (!r.pass) {
        ++report.failures;
        instance_failed[i] = true;
      }
      if (r.margin < report.worst_margin) {
        report.worst_margin = r.margin;
        report.worst_index = static_cast<int>(report.checks.size());
        worst_instance_index = static_cast<int>(i);
      }
      report.checks.push_back(std::move(r));
    }
    for (std::string& e : error_slots[i]) report.errors.push_back(std::move(e));
  }

  // hypothesis coverage for the temperature-monotonicity generator
  if (detail::has_check(cfg, "T3")) {
    int negative = 0;
    for (const GeneratedInstance& g : instances) negative += g.has_negative_j2 ? 1 : 0;
    const double fraction = static_cast<double>(negative) / cfg.count;
    report.t3_negative_j2_fraction = fraction;
    CheckRecord r;
    r.instance = -1;
    r.theorem = "T3-coverage";
    r.digest = std::string(16, '0');
    r.lhs = fraction;
    r.rhs = 0.40;
    r.margin = fraction - 0.40;
    r.tolerance = 0.0;
    r.pass = fraction >= 0.40;
    if (!r.pass) ++report.failures;
    report.checks.push_back(std::move(r));
  }

  if (report.checks.empty()) report.worst_margin = 0.0;
  if (worst_instance_index >= 0)
    report.worst_instance =
        model_to_json(instances[static_cast<std::size_t>(worst_instance_index)].spec);
  for (std::size_t i = 0; i < instances.size(); ++i)
    if (instance_failed[i])
      report.failed_instances.push_back(model_to_json(instances[i].spec));
  return report;
}

// The standard verification campaign: Ginibre sign checks with both exact
// engines, coupling and temperature monotonicity by finite differences,
// Ising domination for classical and quantum (spin 1/2 and 1) models, the
// FKG lattice condition, Ising Griffiths checks, and the small Kitaev
// lattices in the 1-3 axis convention.
inline std::vector<SweepConfig> default_campaign(std::uint64_t seed = 1) {
  std::vector<SweepConfig> out;
  auto next = [&](Family family, int lo, int hi, int count,
                  std::vector<std::string> checks) {
    SweepConfig c;
    c.family = family;
    c.min_sites = lo;
    c.max_sites = hi;
    c.count = count;
    c.checks = std::move(checks);
    c.seed = substream_seed(seed, 100 + out.size());
    out.push_back(c);
    return out.size() - 1;
  };

  next(Family::classical_xy, 2, 4, 200, {"T1"});
  next(Family::quantum_xy, 2, 5, 200, {"T1"});
  next(Family::classical_xy, 2, 3, 100, {"C2"});
  next(Family::quantum_xy, 2, 4, 100, {"C2"});

  std::size_t i = next(Family::classical_xy, 2, 3, 60, {"T3"});
  out[i].mode = CouplingMode::correlated;
  i = next(Family::classical_xy, 2, 3, 40, {"T3"});
  out[i].mode = CouplingMode::two_body;

  next(Family::classical_xy, 2, 3, 50, {"T4"});
  i = next(Family::quantum_xy, 2, 3, 50, {"T4"});
  out[i].twice_spins = {1, 2};

  next(Family::classical_xy, 2, 3, 100, {"FKG"});
  next(Family::ising, 2, 5, 100, {"T1"});
  next(Family::kitaev, 0, 0, 8, {"T1"});
  out.back().min_sites = 1;
  out.back().max_sites = 1;
  return out;
}

// ----- config (de)serialisation -----

inline const char* family_name(Family f) {
  switch (f) {
    case Family::classical_xy: return "classical-xy";
    case Family::quantum_xy:   return "quantum-xy";
    case Family::ising:        return "ising";
    case Family::kitaev:       return "kitaev";
  }
  return "?";
}

inline const char* mode_name(CouplingMode m) {
  switch (m) {
    case CouplingMode::ferromagnetic: return "ferromagnetic";
    case CouplingMode::correlated:    return "correlated";
    case CouplingMode::two_body:      return "two-body";
  }
  return "?";
}

inline json sweep_config_to_json(const SweepConfig& cfg) {
  json j;
  j["family"] = family_name(cfg.family);
  j["sites"] = {cfg.min_sites, cfg.max_sites};
  j["mode"] = mode_name(cfg.mode);
  j["j_min"] = cfg.j_min;
  j["j_max"] = cfg.j_max;
  j["max_subset_size"] = cfg.max_subset_size;
  j["beta"] = {cfg.beta_min, cfg.beta_max};
  j["count"] = cfg.count;
  j["seed"] = cfg.seed;
  j["engine"] = cfg.engine == Engine::exact ? "exact" : "mc";
  json spins = json::array();
  for (int ts : cfg.twice_spins) spins.push_back(detail::format_twice_spin(ts));
  j["spins"] = std::move(spins);
  j["checks"] = cfg.checks;
  j["tolerances"] = {{"exact", cfg.tol.exact},
                     {"fd", cfg.tol.fd},
                     {"mc_sigma", cfg.tol.mc_sigma}};
  j["mc"] = {{"sweeps", cfg.mc_sweeps}, {"burn_in", cfg.mc_burn_in}};
  j["check_hypotheses"] = cfg.check_hypotheses;
  return j;
}

inline SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig cfg;
  if (!j.is_object()) throw validation_error("$: sweep config must be a JSON object");

  if (auto it = j.find("family"); it != j.end()) {
    const std::string f = it->get<std::string>();
    if (f == "classical-xy") cfg.family = Family::classical_xy;
    else if (f == "quantum-xy") cfg.family = Family::quantum_xy;
    else if (f == "ising") cfg.family = Family::ising;
    else if (f == "kitaev") cfg.family = Family::kitaev;
    else throw validation_error("family: unknown family '" + f + "'");
  }
  if (auto it = j.find("sites"); it != j.end()) {
    const auto v = it->get<std::vector<int>>();
    if (v.size() != 2) throw validation_error("sites: need [min, max]");
    cfg.min_sites = v[0];
    cfg.max_sites = v[1];
  }
  if (auto it = j.find("mode"); it != j.end()) {
    const std::string m = it->get<std::string>();
    if (m == "ferromagnetic") cfg.mode = CouplingMode::ferromagnetic;
    else if (m == "correlated") cfg.mode = CouplingMode::correlated;
    else if (m == "two-body") cfg.mode = CouplingMode::two_body;
    else throw validation_error("mode: unknown mode '" + m + "'");
  }
  cfg.j_min = j.value("j_min", cfg.j_min);
  cfg.j_max = j.value("j_max", cfg.j_max);
  cfg.max_subset_size = j.value("max_subset_size", cfg.max_subset_size);
  if (auto it = j.find("beta"); it != j.end()) {
    const auto v = it->get<std::vector<double>>();
    if (v.size() != 2) throw validation_error("beta: need [min, max]");
    cfg.beta_min = v[0];
    cfg.beta_max = v[1];
  }
  cfg.count = j.value("count", cfg.count);
  cfg.seed = j.value("seed", cfg.seed);
  if (auto it = j.find("engine"); it != j.end()) {
    const std::string e = it->get<std::string>();
    if (e == "exact") cfg.engine = Engine::exact;
    else if (e == "mc") cfg.engine = Engine::mc;
    else throw validation_error("engine: must be \"exact\" or \"mc\"");
  }
  if (auto it = j.find("spins"); it != j.end()) {
    cfg.twice_spins.clear();
    for (const json& s : *it)
      cfg.twice_spins.push_back(detail::parse_twice_spin(s, "spins"));
  }
  if (auto it = j.find("checks"); it != j.end())
    cfg.checks = it->get<std::vector<std::string>>();
  if (auto it = j.find("tolerances"); it != j.end()) {
    cfg.tol.exact = it->value("exact", cfg.tol.exact);
    cfg.tol.fd = it->value("fd", cfg.tol.fd);
    cfg.tol.mc_sigma = it->value("mc_sigma", cfg.tol.mc_sigma);
  }
  if (auto it = j.find("mc"); it != j.end()) {
    cfg.mc_sweeps = it->value("sweeps", cfg.mc_sweeps);
    cfg.mc_burn_in = it->value("burn_in", cfg.mc_burn_in);
  }
  cfg.check_hypotheses = j.value("check_hypotheses", cfg.check_hypotheses);
  validate(cfg);
  return cfg;
}

}  // namespace spinlab
