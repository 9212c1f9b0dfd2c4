// Command-line front end: single expectations, verification sweeps, the
// critical-temperature bound solver, and report comparison.
//
// Exit codes are a stable contract:
//   0  success / all checks passed
//   1  an inequality check failed (or compared reports differ)
//   2  bad input (parse error, invariant violation, unknown flag)
//   3  resource budget exceeded
//   4  threshold solver found no crossing

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinlab/spinlab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailedCheck = 1;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNoCrossing = 4;

spinlab::ObservableSpec parse_observable(const std::string& text) {
  spinlab::ObservableSpec obs;
  if (text.empty()) return obs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string part = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    const std::size_t colon = part.find(':');
    if (colon == std::string::npos)
      throw spinlab::validation_error("obs: expected axis:site pairs, e.g. \"1:0,1:1\"");
    try {
      const int axis = std::stoi(part.substr(0, colon));
      const int site = std::stoi(part.substr(colon + 1));
      obs.factors.push_back({site, axis});
    } catch (const std::exception&) {
      throw spinlab::validation_error("obs: could not parse \"" + part + "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return obs;
}

struct ComputeArgs {
  std::string model_file;
  std::string obs_text;
  std::string engine = "exact";
  double beta = -1.0;
  int nodes = 32;
  long sweeps = 200000;
  long burn_in = -1;
  std::uint64_t seed = 1;
  bool as_json = false;
};

int run_compute(const ComputeArgs& args) {
  using namespace spinlab;
  ModelSpec spec = load_model(args.model_file);
  if (args.beta > 0.0) spec.beta = args.beta;

  const ObservableSpec obs = parse_observable(args.obs_text);
  obs.validate_against(spec.sites);

  GibbsEstimate est;
  switch (spec.kind()) {
    case ModelKind::ising: {
      Subset x = 0;
      for (const auto& f : obs.factors) {
        if (f.axis != 1)
          throw validation_error("obs: ising observables use axis 1 only");
        x ^= 1ull << f.site;  // repeated sites square away
      }
      est = ising_estimate(IsingInstance::from_model(spec), x);
      break;
    }
    case ModelKind::classical_xy: {
      const ClassicalInstance inst = ClassicalInstance::from_model(spec);
      if (args.engine == "mc")
        est = classical_expectation_mc(inst, obs, args.sweeps, args.burn_in, args.seed);
      else
        est = classical_expectation(inst, obs, args.nodes);
      break;
    }
    case ModelKind::quantum_xy: {
      const SpinBasis basis{spec.twice_spin, spec.sites.count};
      const long dim = basis.dim();
      const SpinOps ops = spin_matrices(spec.twice_spin);
      const Operator& second =
          spec.couplings.axes() == AxisPair::one_two ? ops.s2 : ops.s3;
      Operator o = Operator::Identity(dim, dim);
      for (const auto& f : obs.factors)
        o = o * site_operator(f.axis == 1 ? ops.s1 : second, f.site, basis);
      const ThermalState state(assemble_hamiltonian(spec), spec.beta);
      est.value = state.expectation(o);
      est.error = 1e-13 * static_cast<double>(dim);
      est.method = Method::eigensolve;
      break;
    }
  }

  if (args.as_json) {
    json out;
    out["value"] = est.value;
    out["error"] = est.error;
    out["method"] = method_name(est.method);
    out["converged"] = est.converged;
    if (est.autocorr_warning) out["autocorr_warning"] = true;
    std::cout << out.dump() << '\n';
  } else {
    std::printf("value = %.6f  error <= %.3g  method = %s%s\n", est.value, est.error,
                method_name(est.method), est.converged ? "" : "  NOT CONVERGED");
    if (est.autocorr_warning)
      std::printf("warning: integrated autocorrelation time is large; increase sweeps\n");
  }
  return kExitOk;
}

struct SweepArgs {
  std::string config_file;
  bool use_default = false;
  std::string out_prefix = "sweep_report";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool as_json = false;
};

int run_sweep_cmd(const SweepArgs& args) {
  using namespace spinlab;

  std::vector<SweepConfig> configs;
  if (args.use_default) {
    configs = default_campaign(args.seed_given ? args.seed : 1);
  } else {
    if (args.config_file.empty())
      throw validation_error("sweep: need --config FILE or --default");
    std::ifstream in(args.config_file);
    if (!in) throw validation_error("cannot open config file: " + args.config_file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw validation_error("parse error in " + args.config_file + ": " + e.what());
    }
    if (j.is_array()) {
      for (const json& c : j) configs.push_back(sweep_config_from_json(c));
    } else {
      configs.push_back(sweep_config_from_json(j));
    }
    if (args.seed_given)
      for (std::size_t i = 0; i < configs.size(); ++i)
        configs[i].seed = substream_seed(args.seed, i);
  }

  int total_failures = 0;
  double worst = std::numeric_limits<double>::infinity();
  json reports = json::array();
  std::string csv;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const InequalityReport report = run_sweep(configs[i], args.threads);
    total_failures += report.failures;
    worst = std::min(worst, report.worst_margin);
    reports.push_back(report.to_json());
    csv += report.to_csv(static_cast<int>(i), i == 0);
    if (!args.as_json)
      std::printf("campaign %zu: %s, %zu checks, %d failures, worst margin %.3g\n", i,
                  family_name(configs[i].family), report.checks.size(), report.failures,
                  report.worst_margin);
  }

  json out;
  if (reports.size() == 1) {
    out = reports[0];
  } else {
    out["campaigns"] = reports;
    out["summary"] = {{"failures", total_failures}, {"worst_margin", worst}};
  }

  {
    std::ofstream jf(args.out_prefix + ".json");
    if (!jf) throw validation_error("cannot write " + args.out_prefix + ".json");
    jf << out.dump(2) << '\n';
    std::ofstream cf(args.out_prefix + ".csv");
    if (!cf) throw validation_error("cannot write " + args.out_prefix + ".csv");
    cf << csv;
  }

  if (args.as_json) {
    json summary;
    summary["failures"] = total_failures;
    summary["worst_margin"] = worst;
    summary["report"] = args.out_prefix + ".json";
    std::cout << summary.dump() << '\n';
  } else {
    std::printf("total failures: %d (report: %s.json, %s.csv)\n", total_failures,
                args.out_prefix.c_str(), args.out_prefix.c_str());
  }
  return total_failures == 0 ? kExitOk : kExitFailedCheck;
}

struct BoundArgs {
  spinlab::BoundConstants constants;
  double ising_upper = -1.0;
  bool as_json = false;
};

int run_bound(const BoundArgs& args) {
  using namespace spinlab;
  const BoundResult res = critical_threshold(args.constants);
  const std::string three_sf = format_3sf(res.t_star);

  double high = -1.0;
  if (args.ising_upper > 0.0) high = 0.25 * args.ising_upper;

  if (args.as_json) {
    json out;
    out["t_star"] = res.t_star;
    out["t_star_3sf"] = three_sf;
    out["beta_star"] = res.beta_star;
    out["certificate"] = {{"t", res.t_at_crossing},
                          {"r_plus", res.r_plus_at_crossing},
                          {"residual", res.residual},
                          {"bracket", json::array({res.bracket_lo, res.bracket_hi})}};
    if (high > 0.0) {
      char disp[128];
      std::snprintf(disp, sizeof disp, "%s <= T <= %.3f", three_sf.c_str(), high);
      out["interval"] = {{"low", res.t_star}, {"high", high}, {"display", disp}};
    }
    std::cout << out.dump() << '\n';
  } else {
    std::printf("T* = %.6f (%s at 3 s.f.)\n", res.t_star, three_sf.c_str());
    std::printf("certificate: beta* = %.9f, t = %.9f, r+ = %.9f, residual = %.3g\n",
                res.beta_star, res.t_at_crossing, res.r_plus_at_crossing, res.residual);
    if (high > 0.0)
      std::printf("interval: %s <= T <= %.3f (raw [%.6f, %.6f])\n", three_sf.c_str(),
                  high, res.t_star, high);
  }
  return kExitOk;
}

struct DiffArgs {
  std::string file_a, file_b;
  double tol = 0.0;
  bool as_json = false;
};

// flattens single- or multi-campaign report files into key -> (margin, pass)
std::map<std::string, std::pair<double, bool>> flatten_report(const spinlab::json& j,
                                                              const std::string& file) {
  using spinlab::validation_error;
  std::map<std::string, std::pair<double, bool>> out;
  auto add_checks = [&](const spinlab::json& report, int campaign) {
    auto it = report.find("checks");
    if (it == report.end() || !it->is_array())
      throw validation_error(file + ": not an inequality report (no checks array)");
    for (const auto& c : *it) {
      std::string key = std::to_string(campaign) + "/" +
                        c.value("theorem", std::string("?")) + "/i" +
                        std::to_string(c.value("instance", -1));
      key += "/x";
      for (int v : c.value("x", std::vector<int>{})) key += std::to_string(v) + ";";
      key += "/y";
      for (int v : c.value("y", std::vector<int>{})) key += std::to_string(v) + ";";
      out[key] = {c.value("margin", 0.0), c.value("pass", false)};
    }
  };
  if (j.contains("campaigns")) {
    int idx = 0;
    for (const auto& r : j["campaigns"]) add_checks(r, idx++);
  } else {
    add_checks(j, 0);
  }
  return out;
}

int run_report_diff(const DiffArgs& args) {
  using namespace spinlab;
  auto load = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open report: " + path);
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      throw validation_error("parse error in " + path + ": " + e.what());
    }
  };
  const auto a = flatten_report(load(args.file_a), args.file_a);
  const auto b = flatten_report(load(args.file_b), args.file_b);

  int missing = 0, pass_diff = 0, margin_diff = 0;
  double max_delta = 0.0;
  for (const auto& [key, va] : a) {
    auto it = b.find(key);
    if (it == b.end()) {
      ++missing;
      if (!args.as_json) std::printf("only in %s: %s\n", args.file_a.c_str(), key.c_str());
      continue;
    }
    if (va.second != it->second.second) {
      ++pass_diff;
      if (!args.as_json)
        std::printf("pass flag differs: %s (%d vs %d)\n", key.c_str(), va.second,
                    it->second.second);
    }
    const double delta = std::abs(va.first - it->second.first);
    max_delta = std::max(max_delta, delta);
    if (delta > args.tol) ++margin_diff;
  }
  for (const auto& [key, vb] : b) {
    (void)vb;
    if (!a.count(key)) {
      ++missing;
      if (!args.as_json) std::printf("only in %s: %s\n", args.file_b.c_str(), key.c_str());
    }
  }

  const bool same = missing == 0 && pass_diff == 0 && margin_diff == 0;
  if (args.as_json) {
    json out;
    out["identical"] = same;
    out["missing"] = missing;
    out["pass_differences"] = pass_diff;
    out["margin_differences"] = margin_diff;
    out["max_margin_delta"] = max_delta;
    std::cout << out.dump() << '\n';
  } else if (same) {
    std::printf("reports match (%zu checks, max margin delta %.3g)\n", a.size(), max_delta);
  } else {
    std::printf("reports differ: %d missing, %d pass flips, %d margins beyond %.3g "
                "(max delta %.3g)\n",
                missing, pass_diff, margin_diff, args.tol, max_delta);
  }
  return same ? kExitOk : kExitFailedCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gibbs expectations and correlation-inequality checks for "
               "classical/quantum XY and many-body Ising models"};
  app.require_subcommand(1);

  ComputeArgs compute_args;
  CLI::App* compute = app.add_subcommand("compute", "evaluate one Gibbs expectation");
  compute->add_option("--model", compute_args.model_file, "model JSON file")->required();
  compute->add_option("--obs", compute_args.obs_text,
                      "observable as axis:site pairs, e.g. \"1:0,1:1\"")->required();
  compute->add_option("--engine", compute_args.engine, "exact | mc")
      ->check(CLI::IsMember({"exact", "mc"}));
  compute->add_option("--beta", compute_args.beta, "override the model file's beta");
  compute->add_option("--nodes", compute_args.nodes, "quadrature nodes per site");
  compute->add_option("--sweeps", compute_args.sweeps, "MC measurement sweeps");
  compute->add_option("--burn-in", compute_args.burn_in, "MC burn-in sweeps");
  compute->add_option("--seed", compute_args.seed, "MC seed");
  compute->add_flag("--json", compute_args.as_json, "machine-readable output");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "run a verification campaign");
  sweep->add_option("--config", sweep_args.config_file,
                    "sweep config JSON (object or array of objects)");
  sweep->add_flag("--default", sweep_args.use_default, "run the built-in campaign");
  sweep->add_option("--out", sweep_args.out_prefix, "output prefix for .json/.csv");
  sweep->add_option("--seed", sweep_args.seed, "master seed override")
      ->each([&](const std::string&) { sweep_args.seed_given = true; });
  sweep->add_option("--threads", sweep_args.threads, "instance-level parallelism");
  sweep->add_flag("--json", sweep_args.as_json, "machine-readable summary on stdout");

  BoundArgs bound_args;
  CLI::App* bound = app.add_subcommand("bound", "critical-temperature threshold");
  bound->add_option("--j3", bound_args.constants.j3, "linear-bound slope constant");
  bound->add_option("--i3", bound_args.constants.i3, "quadratic-bound slope constant");
  bound->add_option("--k3", bound_args.constants.k3, "linear-bound 1/beta constant");
  bound->add_option("--k3p", bound_args.constants.k3p, "quadratic-bound 1/beta constant");
  bound->add_option("--ising-upper", bound_args.ising_upper,
                    "rigorous Ising upper bound; prints the chained interval");
  bound->add_flag("--json", bound_args.as_json, "machine-readable output");

  DiffArgs diff_args;
  CLI::App* diff = app.add_subcommand("report-diff", "compare two sweep reports");
  diff->add_option("a", diff_args.file_a, "first report")->required();
  diff->add_option("b", diff_args.file_b, "second report")->required();
  diff->add_option("--tol", diff_args.tol, "allowed absolute margin difference");
  diff->add_flag("--json", diff_args.as_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*compute) return run_compute(compute_args);
    if (*sweep) return run_sweep_cmd(sweep_args);
    if (*bound) return run_bound(bound_args);
    if (*diff) return run_report_diff(diff_args);
  } catch (const spinlab::validation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const spinlab::budget_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const spinlab::no_crossing_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoCrossing;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 70;
  }
  return kExitOk;
}
