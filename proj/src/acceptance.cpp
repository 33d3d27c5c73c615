#include "geoparc/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "geoparc/error.hpp"
#include "geoparc/kernel.hpp"
#include "geoparc/oracle.hpp"
#include "geoparc/series.hpp"
#include "geoparc/simulation.hpp"

namespace geoparc {

namespace {

// Tolerances and budgets. Budgets are wall-clock seconds per criterion.
constexpr double kCurveTol = 1e-9;
constexpr double kIdentityTol = 1e-10;
constexpr double kOracleFloatTol = 1e-12;
constexpr double kRatioRelTol = 0.05;
constexpr double kFixedPointTol = 1e-6;
constexpr double kDeficitTol = 1e-6;
constexpr double kSigmas = 3.0;
constexpr double kSlopeLo = -2.87;
constexpr double kSlopeHi = -2.47;

constexpr double kBudget[kCriterionCount + 1] = {0, 1, 1, 120, 30, 30, 30, 120, 120, 180, 300};

constexpr long long kMcSamples = 100000;
constexpr long long kSuperSamples = 20000;
constexpr long long kSuperSamplesQuick = 5000;
constexpr long long kPropertyTrees = 10000;
constexpr int kRandomOrders = 5;

const char* const kNames[kCriterionCount + 1] = {
    "",
    "closed-form q_c curves",
    "geometric criterion identity",
    "oracle equivalence",
    "parametrization vs series",
    "radius of F(x,1)",
    "fixed point vs RDE",
    "Monte Carlo vs exact flux law",
    "supercritical divergence",
    "parking property suite",
    "stable tail exponent",
};

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  int n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) out.push_back(lo + i * step);
  return out;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::optional<double> generic_q_c(const ArrivalLaw& law) {
  auto th = find_tc(law);
  return critical_q(th, criterion_value(law, th));
}

void closed_form_curves(CriterionResult& r) {
  struct Family {
    const char* name;
    std::vector<double> alphas;
    ArrivalLaw (*make)(double);
    double (*closed)(double);
  };
  Family families[] = {
      {"geometric", grid(0.05, 0.30, 0.05), [](double a) { return ArrivalLaw::geometric(a); }, geometric_q_c},
      {"binary", grid(0.05, 0.25, 0.05), [](double a) { return ArrivalLaw::binary(a); }, binary_q_c},
      {"poisson", grid(0.05, 0.40, 0.05), [](double a) { return ArrivalLaw::poisson(a); }, poisson_q_c},
  };
  double worst = 0.0;
  bool ok = true;
  for (auto& fam : families) {
    double fam_worst = 0.0;
    for (double a : fam.alphas) {
      auto qc = generic_q_c(fam.make(a));
      if (!qc) {
        ok = false;
        r.detail += std::string(fam.name) + " alpha=" + fmt("%g", a) + " has no q_c; ";
        continue;
      }
      fam_worst = std::max(fam_worst, std::fabs(*qc - fam.closed(a)));
    }
    r.data[fam.name] = fam_worst;
    worst = std::max(worst, fam_worst);
  }
  r.passed = ok && worst <= kCurveTol;
  r.detail += "max |dq_c| " + fmt("%.2e", worst);
}

void criterion_identity(CriterionResult& r) {
  double worst = 0.0;
  for (double a : grid(0.05, 0.30, 0.05)) {
    auto law = ArrivalLaw::geometric(a);
    double generic = criterion_value(law, find_tc(law));
    double closed = 27 * a * (1 + a) * (1 + a) / (4 * (1 + 9 * a) * (1 + 9 * a));
    worst = std::max(worst, std::fabs(generic - closed));
  }
  r.passed = worst <= kIdentityTol;
  r.detail = "max |d criterion| " + fmt("%.2e", worst);
  r.data["max_delta"] = worst;
}

void oracle_equivalence(CriterionResult& r) {
  auto bin = oracle_compare(ArrivalLaw::binary(Rational(1, 5)), 6, 3, ScalarMode::rational);
  auto geo = oracle_compare(ArrivalLaw::geometric(Rational(1, 5)), 6, 3, ScalarMode::rational);
  auto poi = oracle_compare(ArrivalLaw::poisson(0.3), 5, 2, ScalarMode::floating);
  r.passed = bin.passed && bin.max_delta == 0.0 && geo.passed && geo.max_delta == 0.0 && poi.passed &&
             poi.max_delta <= kOracleFloatTol;
  r.detail = "binary " + fmt("%.1e", bin.max_delta) + ", geometric " + fmt("%.1e", geo.max_delta) +
             ", poisson " + fmt("%.1e", poi.max_delta);
  r.data = {{"binary", bin.max_delta}, {"geometric", geo.max_delta}, {"poisson", poi.max_delta}};
}

void parametrization(CriterionResult& r) {
  auto law = ArrivalLaw::geometric(0.2);
  auto F = tutte_solve(law, 200, 200);
  double xc = radius_of_F(law);
  r.passed = true;
  std::ostringstream os;
  for (double Y : {0.3, 0.7, 1.0}) {
    auto v = series_eval(F, x_hat(law, Y), 1.0, xc);
    double diff = std::fabs(F_at_one(law, Y) - v.value);
    bool ok = std::isfinite(v.tail_bound) && diff <= v.tail_bound;
    r.passed = r.passed && ok;
    os << "Y=" << Y << ": " << fmt("%.1e", diff) << " <= " << fmt("%.1e", v.tail_bound) << (ok ? "" : " NO") << "; ";
    r.data["Y=" + fmt("%g", Y)] = {{"diff", diff}, {"bound", v.tail_bound}};
  }
  r.detail = os.str();
}

void radius_check(CriterionResult& r) {
  auto law = ArrivalLaw::geometric(0.2);
  auto F = tutte_solve(law, 200, 200);
  auto a = F.x_coefficients(1.0);
  double ratio = a[200] / a[199];
  double target = 1.0 / radius_of_F(law);
  double rel = std::fabs(ratio - target) / target;
  r.passed = rel <= kRatioRelTol;
  r.detail = "a_200/a_199 " + fmt("%.5f", ratio) + " vs " + fmt("%.5f", target) + " (" + fmt("%.2f", 100 * rel) + "%)";
  r.data = {{"ratio", ratio}, {"target", target}};
}

void fixed_point(CriterionResult& r) {
  auto law = ArrivalLaw::geometric(0.2);
  auto F = tutte_solve(law, 200, 200);
  r.passed = true;
  std::ostringstream os;
  for (double q : {0.51, 0.52, 0.53}) {
    auto fp = solve_p_circ(law, q);
    if (!fp) {
      r.passed = false;
      os << "q=" << q << ": no fixed point; ";
      continue;
    }
    auto rde = iterate_rde(law, q, 60, 200);
    double diff = std::fabs(fp->p_circ - rde.visits[0]);
    auto flux = flux_distribution_exact(law, q, fp->p_circ, F);
    bool ok = diff <= kFixedPointTol && std::fabs(flux.deficit) <= kDeficitTol;
    r.passed = r.passed && ok;
    os << "q=" << q << ": " << fmt("%.1e", diff) << " deficit " << fmt("%.1e", flux.deficit) << "; ";
    r.data["q=" + fmt("%g", q)] = {{"p_circ", fp->p_circ}, {"rde", rde.visits[0]}, {"deficit", flux.deficit}};
  }
  r.detail = os.str();
}

void monte_carlo(CriterionResult& r, const AcceptanceOptions& opt) {
  auto law = ArrivalLaw::geometric(0.2);
  const double q = 0.52;
  auto fp = solve_p_circ(law, q);
  if (!fp) throw Error(ErrorCode::NotSubcritical, "expected a subcritical pair");
  auto flux = flux_distribution_exact(law, q, fp->p_circ, tutte_solve(law, 200, 200));
  SimConfig sim;
  sim.samples = kMcSamples;
  sim.cap_height = 30;
  sim.K = 4;
  sim.seed = opt.seed;
  sim.threads = opt.threads;
  auto stats = run_experiment(law, q, sim);
  double exact[4] = {flux.p_zero, flux.p[0], flux.p[1], flux.p[2]};
  r.passed = true;
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    double z = std::fabs(stats.p_visits[k] - exact[k]) / stats.se_visits[k];
    worst = std::max(worst, z);
    r.passed = r.passed && z <= kSigmas;
    r.data["X=" + std::to_string(k)] = {{"mc", stats.p_visits[k]}, {"se", stats.se_visits[k]}, {"exact", exact[k]}};
  }
  r.detail = "P(X=0) " + fmt("%.5f", stats.p_visits[0]) + " vs " + fmt("%.5f", exact[0]) + ", worst " +
             fmt("%.2f", worst) + " SE";
}

void supercritical(CriterionResult& r, const AcceptanceOptions& opt) {
  auto law = ArrivalLaw::geometric(0.2);
  const double q = 0.58;
  SimConfig sim;
  sim.samples = opt.quick ? kSuperSamplesQuick : kSuperSamples;
  sim.cap_height = 30;
  sim.K = 4;
  sim.seed = opt.seed;
  sim.threads = opt.threads;
  auto stats = run_experiment(law, q, sim);
  double target = (2 * q - 1) / q;
  double z = std::fabs(stats.survival - target) / stats.survival_se;
  bool increasing = stats.median_flux.size() == 3 && stats.median_flux[0] < stats.median_flux[1] &&
                    stats.median_flux[1] < stats.median_flux[2];
  r.passed = z <= kSigmas && increasing;
  std::ostringstream os;
  os << "survival " << fmt("%.4f", stats.survival) << " vs " << fmt("%.4f", target) << " (" << fmt("%.2f", z)
     << " SE); median flux at h=";
  for (std::size_t i = 0; i < stats.heights.size(); ++i) {
    os << (i ? "/" : "") << stats.heights[i];
  }
  os << ": ";
  for (std::size_t i = 0; i < stats.median_flux.size(); ++i) os << (i ? "/" : "") << stats.median_flux[i];
  if (!increasing) os << " not strictly increasing";
  r.detail = os.str();
  r.data = {{"samples", stats.samples}, {"survival", stats.survival}, {"survival_se", stats.survival_se},
            {"target", target}, {"heights", stats.heights}, {"median_flux", stats.median_flux}};
}

void property_suite(CriterionResult& r, const AcceptanceOptions& opt) {
  auto law = ArrivalLaw::geometric(0.2);
  ArrivalSampler sampler(law);
  const double q = 0.52;
  const int cap = 30;
  long long conservation = 0, abelian = 0, monotone = 0;
  for (long long i = 0; i < kPropertyTrees; ++i) {
    std::uint64_t s = derive_seed(opt.seed, static_cast<std::uint64_t>(i));
    RandomStream tree_rng(derive_seed(s, 0)), car_rng(derive_seed(s, 1)), order_rng(derive_seed(s, 2));
    auto tree = sample_tree(q, cap, kDefaultCapVertices, tree_rng);
    auto arrivals = sample_arrivals(sampler, tree.size(), car_rng);
    auto layered = park_layered(tree, arrivals);
    auto bottom = park_bottom_up(tree, arrivals);
    if (!layered.conserves() || !bottom.conserves() || layered.visits != bottom.visits) ++conservation;
    for (int o = 0; o < kRandomOrders; ++o) {
      if (park_in_random_order(tree, arrivals, order_rng).visits != layered.visits) ++abelian;
    }
    long long prev = -1;
    int height = static_cast<int>(tree.level_sizes.size()) - 1;
    for (int h = 0; h <= height; ++h) {
      long long x = park_bottom_up(tree, arrivals, h).root_visits;
      if (x < prev) {
        ++monotone;
        break;
      }
      prev = x;
    }
  }
  TailRateConfig tc;
  tc.K = 30;
  bool bounded = true;
  std::ostringstream os;
  for (double tq : {0.51, 0.52, 0.53}) {
    auto rep = tail_rate_check(law, tq, tc);
    bounded = bounded && rep.bounded;
    if (!rep.bounded) os << "tail rate unbounded at q=" << tq << " k=" << rep.first_violation << "; ";
  }
  r.passed = conservation == 0 && abelian == 0 && monotone == 0 && bounded;
  os << kPropertyTrees << " trees: conservation " << conservation << ", order " << abelian << ", monotonicity "
     << monotone << " violations; tail rate " << (bounded ? "bounded" : "unbounded");
  r.detail = os.str();
  r.data = {{"trees", kPropertyTrees}, {"conservation", conservation}, {"order", abelian},
            {"monotonicity", monotone}, {"tail_bounded", bounded}};
}

nlohmann::json search_json(const StableSearch& s) {
  return {{"rho", s.rho}, {"alpha_s", s.alpha_s}, {"C", s.C}, {"P", s.P}, {"criterion", s.criterion},
          {"q_c", s.q_c}, {"candidates", s.candidates}, {"feasible", s.feasible}};
}

void stable_exponent(CriterionResult& r) {
  double rho = 1.5;
  std::optional<StableConstruction> main;
  try {
    main = construct_stable_law(rho, 2.5);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
  }
  if (!main) {
    for (double alt_rho : {1.2, 2.0, 3.0, 5.0}) {
      try {
        main = construct_stable_law(alt_rho, 2.5);
        rho = alt_rho;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Infeasible) throw;
      }
    }
  }
  if (!main) {
    r.passed = false;
    r.detail = "no feasible stable law found";
    return;
  }
  r.data["construction"] = search_json(main->search);
  auto fit = tail_exponent_fit(main->law, 100, 400);
  std::vector<double> slopes;
  for (double as : {2.2, 2.5, 2.8}) {
    if (as == 2.5) {
      slopes.push_back(fit.slope);
      continue;
    }
    slopes.push_back(tail_exponent_fit(construct_stable_law(rho, as).law, 100, 400).slope);
  }
  bool in_window = fit.slope >= kSlopeLo && fit.slope <= kSlopeHi;
  bool increasing = slopes[0] < slopes[1] && slopes[1] < slopes[2];
  r.passed = in_window && increasing;
  r.detail = "rho=" + fmt("%g", rho) + " slope " + fmt("%.4f", fit.slope) + " (target " + fmt("%.4f", -8.0 / 3) +
             "), alpha_s 2.2/2.5/2.8: " + fmt("%.3f", slopes[0]) + "/" + fmt("%.3f", slopes[1]) + "/" +
             fmt("%.3f", slopes[2]);
  r.data["slope"] = fit.slope;
  r.data["r_squared"] = fit.r_squared;
  r.data["slopes"] = slopes;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
  if (id < 1 || id > kCriterionCount) throw Error(ErrorCode::BadParam, "no criterion " + std::to_string(id));
  CriterionResult r;
  r.id = id;
  r.name = kNames[id];
  r.limit_seconds = kBudget[id];
  auto t0 = std::chrono::steady_clock::now();
  try {
    switch (id) {
      case 1: closed_form_curves(r); break;
      case 2: criterion_identity(r); break;
      case 3: oracle_equivalence(r); break;
      case 4: parametrization(r); break;
      case 5: radius_check(r); break;
      case 6: fixed_point(r); break;
      case 7: monte_carlo(r, options); break;
      case 8: supercritical(r, options); break;
      case 9: property_suite(r, options); break;
      case 10: stable_exponent(r); break;
    }
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.seconds > r.limit_seconds) {
    r.passed = false;
    r.detail += " [over budget]";
  }
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end()) {
      continue;
    }
    out.push_back(run_criterion(id, options));
    if (on_result) on_result(out.back());
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %2d  %-30s (%.2f s / %.0f s)  ", r.passed ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds, r.limit_seconds);
  return head + r.detail;
}

nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id},           {"name", r.name},    {"passed", r.passed}, {"detail", r.detail},
          {"seconds", r.seconds}, {"limit", r.limit_seconds}, {"data", r.data}};
}

}  // namespace geoparc
