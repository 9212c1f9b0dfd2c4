// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. The bound criteria drive the installed binary (path in argv[1]);
// the campaign criteria run the library directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "spinlab/spinlab.hpp"

using namespace spinlab;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int index, const char* name, bool pass, const std::string& detail,
            double seconds) {
  std::printf("[%d] %-22s %s (%s, %.2f s)\n", index, name, pass ? "PASS" : "FAIL",
              detail.c_str(), seconds);
  if (!pass) ++g_failures;
}

std::string run_cli(const std::string& command, int& exit_code) {
  std::string output;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) {
    exit_code = -1;
    return output;
  }
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  const int status = pclose(pipe);
  exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return output;
}

double bessel_i(int order, double z) {
  double term = std::pow(0.5 * z, order);
  for (int k = 1; k <= order; ++k) term /= k;
  double sum = term;
  for (int m = 1; m < 60; ++m) {
    term *= 0.25 * z * z / (m * (m + order));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// quadratic closed form for the threshold crossing, used as the oracle for
// the bisection result
double quadratic_crossing(const BoundConstants& c) {
  const double a = 0.5 / c.j3;
  const double b = 2.0 * c.k3 / c.j3;
  const double qa = 2.0 * b * b;
  const double qb = -4.0 * a * b + b * c.i3 - 2.0 * c.k3p;
  const double qc = 2.0 * a * a - a * c.i3;
  const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  for (double u : {(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)}) {
    if (u <= 0.0) continue;
    const double t = a - b * u;
    const double branch = 2.0 * t - 0.5 * c.i3;
    if (branch >= 0.0 &&
        std::abs(branch - std::sqrt(0.25 * c.i3 * c.i3 + 4.0 * c.k3p * u)) < 1e-9)
      return u;
  }
  return -1.0;
}

SweepConfig campaign(Family family, int lo, int hi, int count,
                     std::vector<std::string> checks, std::uint64_t seed) {
  SweepConfig cfg;
  cfg.family = family;
  cfg.min_sites = lo;
  cfg.max_sites = hi;
  cfg.count = count;
  cfg.checks = std::move(checks);
  cfg.seed = seed;
  cfg.j_min = 0.0;
  cfg.j_max = 2.0;
  cfg.beta_min = 0.05;
  cfg.beta_max = 2.0;
  return cfg;
}

// ----- criteria -----

void criterion_1_threshold(const std::string& cli) {
  Timer timer;
  int code = 0;
  const std::string out = run_cli(cli + " bound --json", code);
  bool pass = code == 0;
  double t_star = 0.0;
  std::string three_sf;
  if (pass) {
    const auto j = json::parse(out, nullptr, false);
    pass = !j.is_discarded();
    if (pass) {
      t_star = j.value("t_star", 0.0);
      three_sf = j.value("t_star_3sf", std::string());
      pass = t_star >= 0.3220 && t_star <= 0.3231 && three_sf == "0.323";
    }
  }
  const double oracle = quadratic_crossing(BoundConstants{});
  pass = pass && std::abs(t_star - oracle) < 1e-6;
  const double elapsed = timer.seconds();
  pass = pass && elapsed < 1.0;
  char detail[160];
  std::snprintf(detail, sizeof detail, "T*=%.6f, 3sf=%s, |oracle gap|=%.1e", t_star,
                three_sf.c_str(), std::abs(t_star - oracle));
  report(1, "bound-threshold", pass, detail, elapsed);
}

void criterion_2_interval(const std::string& cli) {
  Timer timer;
  int code = 0;
  const std::string out = run_cli(cli + " bound --ising-upper 5.0010 --json", code);
  bool pass = code == 0;
  double high = 0.0;
  std::string display;
  if (pass) {
    const auto j = json::parse(out, nullptr, false);
    pass = !j.is_discarded() && j.contains("interval");
    if (pass) {
      high = j["interval"].value("high", 0.0);
      display = j["interval"].value("display", std::string());
      pass = std::abs(high - 1.25025) < 1e-9 &&
             display.find("0.323") != std::string::npos &&
             display.find("1.250") != std::string::npos;
    }
  }
  const double elapsed = timer.seconds();
  pass = pass && elapsed < 1.0;
  char detail[160];
  std::snprintf(detail, sizeof detail, "high=%.6f, display=\"%s\"", high, display.c_str());
  report(2, "interval-chain", pass, detail, elapsed);
}

void criterion_3_theorem1() {
  Timer timer;
  const InequalityReport classical =
      run_sweep(campaign(Family::classical_xy, 2, 4, 200, {"T1"}, 301), 2);
  const InequalityReport quantum =
      run_sweep(campaign(Family::quantum_xy, 2, 5, 200, {"T1"}, 302), 2);
  const int failures = classical.failures + quantum.failures;
  const double worst = std::min(classical.worst_margin, quantum.worst_margin);
  const double elapsed = timer.seconds();
  char detail[160];
  std::snprintf(detail, sizeof detail, "400 instances, %d violations, worst margin %.2e",
                failures, worst);
  report(3, "theorem1-campaign", failures == 0 && elapsed < 600.0, detail, elapsed);
}

void criterion_4_monotonicity() {
  Timer timer;
  const InequalityReport c2_cl =
      run_sweep(campaign(Family::classical_xy, 2, 3, 100, {"C2"}, 401), 2);
  const InequalityReport c2_qu =
      run_sweep(campaign(Family::quantum_xy, 2, 4, 100, {"C2"}, 402), 2);

  SweepConfig t3a = campaign(Family::classical_xy, 2, 3, 60, {"T3"}, 403);
  t3a.mode = CouplingMode::correlated;
  SweepConfig t3b = campaign(Family::classical_xy, 2, 3, 40, {"T3"}, 404);
  t3b.mode = CouplingMode::two_body;
  const InequalityReport ra = run_sweep(t3a, 2);
  const InequalityReport rb = run_sweep(t3b, 2);

  const int failures = c2_cl.failures + c2_qu.failures + ra.failures + rb.failures;
  const double coverage =
      std::min(ra.t3_negative_j2_fraction.value_or(0.0), rb.t3_negative_j2_fraction.value_or(0.0));
  const double elapsed = timer.seconds();
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d violations at 1e-7, negative-J2 coverage >= %.0f%%", failures,
                100.0 * coverage);
  report(4, "monotonicity-campaign", failures == 0 && coverage >= 0.40 && elapsed < 600.0,
         detail, elapsed);
}

void criterion_5_domination() {
  Timer timer;
  const InequalityReport classical =
      run_sweep(campaign(Family::classical_xy, 2, 3, 50, {"T4"}, 501), 2);
  SweepConfig qcfg = campaign(Family::quantum_xy, 2, 3, 50, {"T4"}, 502);
  qcfg.twice_spins = {1, 2};
  const InequalityReport quantum = run_sweep(qcfg, 2);

  // two-site spin-1/2 saturation against (1/4) tanh(beta/4) on both sides
  bool saturated = true;
  double worst_gap = 0.0;
  for (double beta : {0.4, 0.9, 1.7}) {
    ModelSpec spec;
    spec.sites = SiteSet(2);
    spec.couplings = CouplingTable(ModelKind::quantum_xy);
    spec.couplings.add(0b11, 1.0, 1.0);
    spec.twice_spin = 1;
    spec.beta = beta;
    const double closed = 0.25 * std::tanh(0.25 * beta);

    const SpinBasis basis{1, 2};
    const double qu_side =
        ThermalState(assemble_hamiltonian(spec), beta)
            .expectation(subset_operator(spin_matrices(1).s1, 0b11, basis));
    std::map<Subset, double> j_star{{0b11, 0.25}};
    const double is_side =
        0.25 * ising_expectation(IsingInstance(spec.sites, std::move(j_star), beta), 0b11);
    worst_gap = std::max({worst_gap, std::abs(qu_side - closed), std::abs(is_side - closed)});
    saturated = saturated && std::abs(qu_side - closed) < 1e-10 &&
                std::abs(is_side - closed) < 1e-10;
  }

  const int failures = classical.failures + quantum.failures;
  const double elapsed = timer.seconds();
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d violations, saturation gap %.1e (tol 1e-10)", failures, worst_gap);
  report(5, "ising-domination", failures == 0 && saturated, detail, elapsed);
}

void criterion_6_proof_machinery() {
  Timer timer;
  bool pass = true;
  std::string what = "ok";

  // FKG hypothesis margins on 100 random pairs
  {
    const InequalityReport fkg =
        run_sweep(campaign(Family::classical_xy, 2, 3, 100, {"FKG"}, 601), 2);
    if (fkg.failures != 0 || fkg.worst_margin < -1e-9) {
      pass = false;
      what = "fkg margins";
    }
  }

  // duplicated-cone positivity on 50 expressions
  Rng rng(602);
  for (int rep = 0; rep < 50 && pass; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(1, 2));
    CouplingTable table;
    const int entries = static_cast<int>(rng.uniform_int(1, n + 1));
    for (int e = 0; e < entries; ++e) {
      const Subset mask =
          1 + static_cast<Subset>(rng.uniform_int(0, (1 << n) - 2));
      if (table.contains(mask)) continue;
      const double j1 = rng.uniform(0.0, 1.5);
      const double j2 = subset_size(mask) % 2 == 0 ? rng.uniform(-1.0, 1.0) * j1 : 0.0;
      table.add(mask, j1, j2);
    }
    const CosineForm k = cosine_form(table, n);
    CosineForm k_bar(n);
    for (const auto& [mode, coeff] : k.coefficients())
      k_bar.add(mode, coeff * rng.uniform());
    const DuplicatedInstance dup(k, k_bar, rng.uniform(0.2, 1.5));

    auto random_atom = [&] {
      std::vector<int> mode(static_cast<std::size_t>(n), 0);
      bool nonzero = false;
      while (!nonzero)
        for (int x = 0; x < n; ++x) {
          mode[static_cast<std::size_t>(x)] = static_cast<int>(rng.uniform_int(-2, 2));
          nonzero = nonzero || mode[static_cast<std::size_t>(x)] != 0;
        }
      return ConeExpr::atom(mode, rng.uniform() < 0.5 ? 1 : -1);
    };
    ConeExpr expr = random_atom();
    if (rng.uniform() < 0.6) expr = ConeExpr::product({expr, random_atom()});
    if (rng.uniform() < 0.5) expr = ConeExpr::sum({expr, random_atom()});
    if (rng.uniform() < 0.3) expr = ConeExpr::scaled(rng.uniform(0.0, 2.0), expr);

    QuadratureOptions opt;
    opt.nodes = 16;
    opt.target = 1e-9;
    if (duplicated_expectation(dup, expr, opt).value < -1e-9) {
      pass = false;
      what = "cone positivity";
    }
  }

  // mu/nu sign patterns, exact to 1e-13, N <= 2
  if (pass) {
    const SpinOps ops = spin_matrices(1);
    for (int n = 1; n <= 2 && pass; ++n) {
      const SpinBasis basis{1, n};
      const Operator u = mu_nu_basis(n);
      for (int x = 0; x < n && pass; ++x) {
        const Operator s1x = site_operator(ops.s1, x, basis);
        const Operator s3x = site_operator(ops.s3, x, basis);
        const Operator mats[] = {conjugate_basis(u, doubled_operator(s1x, +1)),
                                 conjugate_basis(u, doubled_operator(s1x, -1)),
                                 conjugate_basis(u, doubled_operator(s3x, +1)),
                                 conjugate_basis(u, -doubled_operator(s3x, -1))};
        for (const Operator& m : mats)
          for (Eigen::Index i = 0; i < m.rows() && pass; ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
              if (m(i, j).real() < -1e-13 || std::abs(m(i, j).imag()) > 1e-13) {
                pass = false;
                what = "mu/nu signs";
                break;
              }
      }
    }
  }

  // cosine-form round trip on 100 random configurations
  if (pass) {
    Rng crng(603);
    CouplingTable table;
    table.add(0b011, 1.3, -0.6);
    table.add(0b110, 0.8, 0.5);
    table.add(0b001, 0.9, 0.0);
    table.add(0b111, 0.4, 0.0);
    const ClassicalInstance inst(SiteSet(3), table, 1.0);
    const CosineForm form = cosine_form(table, 3);
    for (int c = 0; c < 100; ++c) {
      double phi[3];
      for (double& p : phi) p = crng.uniform(0.0, 2.0 * std::numbers::pi);
      if (std::abs(form.energy(phi) - classical_energy(inst, phi)) > 1e-10) {
        pass = false;
        what = "cosine round trip";
        break;
      }
    }
  }

  report(6, "proof-machinery", pass, what, timer.seconds());
}

void criterion_7_mc_oracle() {
  Timer timer;
  Rng rng(701);
  bool pass = true;
  double worst_sigma = 0.0, worst_se = 0.0;
  for (int c = 0; c < 20; ++c) {
    const double j1 = rng.uniform(0.0, 1.5);
    const double j2 = rng.uniform(0.0, 1.5);
    const double beta = rng.uniform(0.2, 1.2);
    const ClassicalInstance inst(SiteSet(4),
                                 nearest_neighbour_couplings({2, 2}, j1, j2, false), beta);
    const ObservableSpec obs = ObservableSpec::product(0b0011, 1);

    QuadratureOptions qopt;
    qopt.target = 1e-10;
    const ObservableSpec list[] = {obs};
    const double exact = quadrature_expectations(inst, list, qopt)[0].value;

    McOptions mopt;
    mopt.sweeps = 1000000;
    mopt.burn_in = 50000;
    mopt.seed = rng.next_u64();
    mopt.batches = 40;  // sharper standard-error estimate for the 3-sigma gate
    const GibbsEstimate mc = mc_expectations(inst, list, mopt).estimates[0];

    const double sigmas = std::abs(mc.value - exact) / mc.error;
    worst_sigma = std::max(worst_sigma, sigmas);
    worst_se = std::max(worst_se, mc.error);
    if (sigmas > 3.0 || mc.error > 5e-3) pass = false;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail, "worst |diff|/se = %.2f, worst se = %.1e",
                worst_sigma, worst_se);
  report(7, "mc-quadrature", pass, detail, timer.seconds());
}

void criterion_8_anchors() {
  Timer timer;
  bool pass = true;
  double worst = 0.0;
  auto check = [&](double got, double expected) {
    const double gap = std::abs(got - expected);
    worst = std::max(worst, gap);
    if (gap > 1e-8) pass = false;
  };

  // single-site quantum: half tanh(beta J / 2)
  {
    ModelSpec spec;
    spec.sites = SiteSet(1);
    spec.couplings = CouplingTable(ModelKind::quantum_xy);
    spec.couplings.add(0b1, 0.8, 0.0);
    spec.beta = 1.3;
    const ThermalState state(assemble_hamiltonian(spec), spec.beta);
    check(state.expectation(spin_matrices(1).s1), 0.5 * std::tanh(0.5 * 1.3 * 0.8));
  }

  // two-site Ising: tanh(beta J)
  check(ising_expectation(IsingInstance(SiteSet(2), {{0b11, 0.9}}, 1.1), 0b11),
        std::tanh(0.9 * 1.1));

  // single-site classical: I1(beta J) / I0(beta J)
  {
    CouplingTable t;
    t.add(0b1, 1.0, 0.0);
    const ClassicalInstance inst(SiteSet(1), std::move(t), 1.0);
    check(classical_expectation(inst, ObservableSpec::product(0b1, 1), 64).value,
          bessel_i(1, 1.0) / bessel_i(0, 1.0));
  }

  // two-site XY: quarter tanh(beta / 4)
  {
    ModelSpec spec;
    spec.sites = SiteSet(2);
    spec.couplings = CouplingTable(ModelKind::quantum_xy);
    spec.couplings.add(0b11, 1.0, 1.0);
    spec.beta = 1.6;
    const SpinBasis basis{1, 2};
    const ThermalState state(assemble_hamiltonian(spec), spec.beta);
    check(state.expectation(subset_operator(spin_matrices(1).s1, 0b11, basis)),
          0.25 * std::tanh(0.25 * 1.6));
  }

  char detail[64];
  std::snprintf(detail, sizeof detail, "worst gap %.1e (tol 1e-8)", worst);
  report(8, "closed-form-anchors", pass, detail, timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "./tools/spinlab";

  criterion_1_threshold(cli);
  criterion_2_interval(cli);
  criterion_3_theorem1();
  criterion_4_monotonicity();
  criterion_5_domination();
  criterion_6_proof_machinery();
  criterion_7_mc_oracle();
  criterion_8_anchors();

  if (g_failures == 0)
    std::puts("acceptance: all criteria passed");
  else
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return g_failures;
}
