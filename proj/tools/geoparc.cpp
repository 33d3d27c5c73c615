#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoparc/acceptance.hpp"
#include "geoparc/error.hpp"
#include "geoparc/kernel.hpp"
#include "geoparc/law_io.hpp"
#include "geoparc/manifest.hpp"
#include "geoparc/oracle.hpp"
#include "geoparc/series.hpp"
#include "geoparc/simulation.hpp"

using namespace geoparc;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct Args {
  std::string law;
  std::string config;
  std::string family;
  std::optional<double> q;
  std::string alpha_grid;
  int nmax = 10;
  std::optional<int> kmax;
  long long samples = 100000;
  int cap_height = kDefaultCapHeight;
  int K = 10;
  std::uint64_t seed = 1;
  std::string out;
  std::string mode;
  bool quick = false;
  std::vector<int> only;
  std::optional<std::uint64_t> verify_seed;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RunManifest manifest(const std::string& command, json config) {
  RunManifest m;
  m.command = command;
  m.config = std::move(config);
  return m;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Writes text to --out (plus its manifest) or to stdout.
void emit(const Args& a, const std::string& text, RunManifest manifest, Clock::time_point t0) {
  if (a.out.empty()) {
    std::cout << text;
    return;
  }
  write_text_file(a.out, text);
  manifest.outputs = {a.out};
  manifest.duration_seconds = since(t0);
  write_manifest(manifest);
}

ArrivalLaw require_law(const Args& a) {
  if (a.law.empty()) throw Error(ErrorCode::BadParam, "--law is required");
  return load_law(a.law);
}

double require_q(const Args& a) {
  if (!a.q) throw Error(ErrorCode::BadParam, "--q is required");
  check_offspring_param(*a.q);
  return *a.q;
}

int cmd_classify(const Args& a) {
  auto t0 = Clock::now();
  auto law = require_law(a);
  double q = require_q(a);
  auto rep = classify(law, q);
  json j = {{"schema", kSchemaVersion},
            {"law", law.describe()},
            {"q", q},
            {"t_c", rep.threshold.t_c},
            {"kind", to_string(rep.threshold.kind)},
            {"criterion", rep.criterion},
            {"q_value", rep.q_value},
            {"q_c", optional_json(rep.q_c)},
            {"phase", to_string(rep.phase)},
            {"boundary", rep.boundary}};
  if (!rep.note.empty()) j["note"] = rep.note;
  emit(a, j.dump(2) + "\n", manifest("classify", {{"law", to_json(law.spec())}, {"q", q}}), t0);
  return kExitOk;
}

std::vector<double> parse_grid(const std::string& text) {
  auto fail = [&] { return Error(ErrorCode::BadParam, "bad --alpha-grid '" + text + "', expected A:B:STEP"); };
  auto c1 = text.find(':');
  auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
  if (c2 == std::string::npos) throw fail();
  double lo, hi, step;
  try {
    std::size_t used = 0;
    lo = std::stod(text.substr(0, c1));
    hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    std::string s = text.substr(c2 + 1);
    step = std::stod(s, &used);
    if (used != s.size()) throw fail();
  } catch (const std::logic_error&) {
    throw fail();
  }
  if (!(step > 0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw fail();
  long n = std::lround((hi - lo) / step);
  if (n > 1000000) throw fail();
  std::vector<double> out;
  for (long i = 0; i <= n; ++i) {
    double v = lo + static_cast<double>(i) * step;
    if (v > hi + 1e-9 * step) break;
    out.push_back(v);
  }
  return out;
}

int cmd_threshold_curve(const Args& a) {
  auto t0 = Clock::now();
  Family family = Family::geometric;
  if (!a.family.empty()) {
    family = family_from_string(a.family);
  } else if (!a.law.empty()) {
    family = load_law_spec(a.law).family;
  }
  if (family != Family::binary && family != Family::geometric && family != Family::poisson) {
    throw Error(ErrorCode::BadParam, "threshold-curve needs a binary, geometric or poisson family");
  }
  if (a.alpha_grid.empty()) throw Error(ErrorCode::BadParam, "--alpha-grid is required");
  auto alphas = parse_grid(a.alpha_grid);
  auto rows = threshold_curve(family, alphas, resolve_threads(0));
  emit(a, curve_to_csv(rows),
       manifest("threshold-curve", {{"family", to_string(family)}, {"alpha_grid", a.alpha_grid}}), t0);
  return kExitOk;
}

ScalarMode mode_for(const Args& a, const ArrivalLaw& law) {
  if (!a.mode.empty()) return scalar_mode_from_string(a.mode);
  return law.is_exact() ? ScalarMode::rational : ScalarMode::floating;
}

int cmd_coeffs(const Args& a) {
  auto t0 = Clock::now();
  auto law = require_law(a);
  auto mode = mode_for(a, law);
  int kmax = a.kmax ? *a.kmax : default_k_max(law, a.nmax);
  auto F = tutte_solve(law, a.nmax, kmax, {mode});
  emit(a, F.to_csv(),
       manifest("coeffs", {{"law", to_json(law.spec())}, {"nmax", a.nmax}, {"kmax", kmax}, {"mode", to_string(mode)}}), t0);
  return kExitOk;
}

int cmd_oracle(const Args& a) {
  auto t0 = Clock::now();
  auto law = require_law(a);
  auto mode = mode_for(a, law);
  int kmax = a.kmax ? *a.kmax : 3;
  auto rep = oracle_compare(law, a.nmax, kmax, mode);
  emit(a, rep.to_csv(),
       manifest("oracle", {{"law", to_json(law.spec())}, {"nmax", a.nmax}, {"kmax", kmax}, {"mode", to_string(mode)}}), t0);
  std::cerr << "oracle: " << rep.rows.size() << " coefficients, max delta " << rep.max_delta << ", "
            << (rep.passed ? "match" : "MISMATCH") << "\n";
  return rep.passed ? kExitOk : kExitFailed;
}

int cmd_simulate(const Args& a) {
  auto t0 = Clock::now();
  ExperimentConfig cfg;
  if (!a.config.empty()) {
    cfg = load_experiment_config(a.config);
  } else {
    if (a.law.empty()) throw Error(ErrorCode::BadParam, "--law or --config is required");
    cfg.law = load_law_spec(a.law);
    cfg.q = require_q(a);
    cfg.samples = a.samples;
    cfg.cap_height = a.cap_height;
    cfg.K = a.K;
    cfg.seed = a.seed;
  }
  check_offspring_param(cfg.q);
  auto law = ArrivalLaw::from_spec(cfg.law);
  auto sim = sim_config_from(cfg);
  auto stats = run_experiment(law, cfg.q, sim);
  RunManifest m = manifest("simulate",
                {{"law", to_json(cfg.law)},
                 {"q", cfg.q},
                 {"samples", sim.samples},
                 {"cap_height", sim.cap_height},
                 {"cap_vertices", sim.cap_vertices},
                 {"K", sim.K}});
  m.seed = sim.seed;
  emit(a, stats.to_csv(), m, t0);
  return kExitOk;
}

int cmd_verify(const Args& a) {
  auto t0 = Clock::now();
  AcceptanceOptions opt;
  opt.quick = a.quick;
  if (a.verify_seed) opt.seed = *a.verify_seed;
  opt.only = a.only;
  bool all = true;
  json results = json::array();
  run_acceptance(opt, [&](const CriterionResult& r) {
    std::cout << format_result(r) << std::endl;
    all = all && r.passed;
    results.push_back(to_json(r));
  });
  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << " (" << since(t0) << " s)\n";
  if (!a.out.empty()) {
    json report = {{"schema", kSchemaVersion}, {"passed", all}, {"criteria", results}};
    write_text_file(a.out, report.dump(2) + "\n");
    RunManifest m = manifest("verify", {{"quick", a.quick}, {"only", a.only}});
    m.seed = opt.seed;
    m.outputs = {a.out};
    m.duration_seconds = since(t0);
    write_manifest(m);
  }
  return all ? kExitOk : kExitFailed;
}

void print_error(const std::string& code, const std::string& message) {
  json j = {{"schema", kSchemaVersion}, {"error", code}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parking on geometric Galton-Watson trees: phase, curves, coefficients, simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  Args a;

  auto law_opt = [&](CLI::App* c) { c->add_option("--law", a.law, "law JSON file"); };
  auto q_opt = [&](CLI::App* c) { c->add_option("--q", a.q, "offspring parameter, 1/2 < q < 1"); };
  auto out_opt = [&](CLI::App* c) { c->add_option("--out", a.out, "output file (stdout if omitted)"); };

  auto* classify_cmd = app.add_subcommand("classify", "phase of (law, q) as JSON");
  law_opt(classify_cmd);
  q_opt(classify_cmd);
  out_opt(classify_cmd);

  auto* curve_cmd = app.add_subcommand("threshold-curve", "CSV alpha,t_c,criterion,q_c over an alpha grid");
  law_opt(curve_cmd);
  curve_cmd->add_option("--family", a.family, "binary, geometric or poisson");
  curve_cmd->add_option("--alpha-grid", a.alpha_grid, "A:B:STEP");
  out_opt(curve_cmd);

  auto* coeffs_cmd = app.add_subcommand("coeffs", "coefficient table of F(x, y)");
  auto* oracle_cmd = app.add_subcommand("oracle", "compare the Tutte solver with brute force");
  for (auto* c : {coeffs_cmd, oracle_cmd}) {
    law_opt(c);
    c->add_option("--nmax", a.nmax, "largest tree size")->check(CLI::Range(1, 100000));
    c->add_option("--kmax", a.kmax, "largest outgoing car count")->check(CLI::NonNegativeNumber);
    c->add_option("--mode", a.mode, "rational or float")->check(CLI::IsMember({"rational", "float"}));
    out_opt(c);
  }

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo parking on sampled trees");
  law_opt(sim_cmd);
  q_opt(sim_cmd);
  sim_cmd->add_option("--config", a.config, "experiment JSON (replaces the other flags)");
  sim_cmd->add_option("--samples", a.samples)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--cap-height", a.cap_height)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--K", a.K, "largest k reported for P(X = k)")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--seed", a.seed);
  out_opt(sim_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
  verify_cmd->add_flag("--quick", a.quick, "fewer supercritical trees");
  verify_cmd->add_option("--only", a.only, "criterion numbers")->check(CLI::Range(1, kCriterionCount));
  verify_cmd->add_option("--seed", a.verify_seed);
  out_opt(verify_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return kExitUsage;
  }

  try {
    if (*classify_cmd) return cmd_classify(a);
    if (*curve_cmd) return cmd_threshold_curve(a);
    if (*coeffs_cmd) return cmd_coeffs(a);
    if (*oracle_cmd) return cmd_oracle(a);
    if (*sim_cmd) return cmd_simulate(a);
    if (*verify_cmd) return cmd_verify(a);
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what());
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    print_error("BadParam", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
