#include "geoparc/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "geoparc/error.hpp"
#include "geoparc/kernel.hpp"
#include "geoparc/series.hpp"

namespace geoparc {

namespace {

void finalize(ParkOutcome& out, const SampledTree& tree, const std::vector<int>& arrivals, int max_depth) {
  int cut = max_depth < 0 ? tree.cap_height : std::min(max_depth, tree.cap_height);
  out.root_visits = out.visits.empty() ? 0 : out.visits[0];
  out.flux = std::max(0LL, out.root_visits - 1);
  out.occupied = 0;
  out.cars = 0;
  std::size_t end = tree.prefix_size(cut);
  for (std::size_t v = 0; v < end; ++v) {
    out.cars += arrivals[v];
    if (out.visits[v] >= 1) ++out.occupied;
  }
  out.root_cluster_size = 0;
  out.cluster_at_cut = false;
  if (out.root_visits < 1) return;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    auto sv = static_cast<std::size_t>(v);
    ++out.root_cluster_size;
    if (tree.depth[sv] >= cut || tree.vertex_capped) out.cluster_at_cut = true;
    if (tree.depth[sv] >= cut) continue;
    for (int c = tree.first_child[sv]; c < tree.first_child[sv] + tree.child_count[sv]; ++c) {
      if (out.visits[static_cast<std::size_t>(c)] >= 1) stack.push_back(c);
    }
  }
}

void check_arrivals(const SampledTree& tree, const std::vector<int>& arrivals) {
  if (arrivals.size() != tree.size()) throw Error(ErrorCode::BadParam, "one arrival count per vertex required");
}

template <typename Body>
void parallel_for(long long count, int threads, Body&& body) {
  int workers = static_cast<int>(std::max<long long>(1, std::min<long long>(threads, count)));
  if (workers == 1) {
    for (long long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (long long i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

double median(std::vector<long long> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return static_cast<double>(values[m]);
  return 0.5 * (static_cast<double>(values[m - 1]) + static_cast<double>(values[m]));
}

double proportion_se(double p, long long n) { return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n)); }

void check_sim_config(const SimConfig& c) {
  if (c.samples < 1) throw Error(ErrorCode::BadParam, "samples must be >= 1");
  if (c.cap_height < 1) throw Error(ErrorCode::BadParam, "cap_height must be >= 1");
  if (c.cap_vertices < 1) throw Error(ErrorCode::BadParam, "cap_vertices must be >= 1");
  if (c.K < 0) throw Error(ErrorCode::BadParam, "K must be >= 0");
}

}  // namespace

SampledTree sample_tree(double q, int cap_height, long long cap_vertices, RandomStream& rng) {
  check_offspring_param(q);
  if (cap_height < 0 || cap_vertices < 1) throw Error(ErrorCode::BadParam, "caps must be positive");
  SampledTree t;
  t.cap_height = cap_height;
  t.parent = {-1};
  t.depth = {0};
  for (std::size_t i = 0; i < t.parent.size(); ++i) {
    t.first_child.push_back(static_cast<int>(t.parent.size()));
    t.child_count.push_back(0);
    if (t.depth[i] >= cap_height) {
      t.reached_cap = true;
      continue;
    }
    if (t.vertex_capped) continue;
    // Number of successes before the first failure: P(K >= k) = q^k.
    long long k = 0;
    while (uniform01(rng) < q) ++k;
    long long room = cap_vertices - static_cast<long long>(t.parent.size());
    if (k > room) {
      k = room;
      t.vertex_capped = true;
    }
    t.child_count[i] = static_cast<int>(k);
    t.parent.insert(t.parent.end(), static_cast<std::size_t>(k), static_cast<int>(i));
    t.depth.insert(t.depth.end(), static_cast<std::size_t>(k), t.depth[i] + 1);
  }
  int height = t.depth.back();
  t.level_sizes.assign(static_cast<std::size_t>(height) + 1, 0);
  for (int d : t.depth) ++t.level_sizes[static_cast<std::size_t>(d)];
  return t;
}

SampledTree tree_from_child_counts(const std::vector<int>& child_counts, int cap_height) {
  SampledTree t;
  t.cap_height = cap_height;
  t.parent = {-1};
  t.depth = {0};
  for (std::size_t i = 0; i < t.parent.size(); ++i) {
    if (i >= child_counts.size() || child_counts[i] < 0) {
      throw Error(ErrorCode::BadParam, "child counts do not describe a tree");
    }
    t.first_child.push_back(static_cast<int>(t.parent.size()));
    t.child_count.push_back(child_counts[i]);
    t.parent.insert(t.parent.end(), static_cast<std::size_t>(child_counts[i]), static_cast<int>(i));
    t.depth.insert(t.depth.end(), static_cast<std::size_t>(child_counts[i]), t.depth[i] + 1);
  }
  if (child_counts.size() != t.parent.size()) throw Error(ErrorCode::BadParam, "child counts do not describe a tree");
  int height = t.depth.back();
  if (height > cap_height) throw Error(ErrorCode::BadParam, "tree is taller than its cap");
  t.reached_cap = height == cap_height;
  t.level_sizes.assign(static_cast<std::size_t>(height) + 1, 0);
  for (int d : t.depth) ++t.level_sizes[static_cast<std::size_t>(d)];
  return t;
}

std::vector<int> sample_arrivals(const ArrivalSampler& sampler, std::size_t count, RandomStream& rng) {
  std::vector<int> a(count);
  for (auto& v : a) v = sampler(rng);
  return a;
}

ParkOutcome park_layered(const SampledTree& tree, const std::vector<int>& arrivals, int max_depth) {
  check_arrivals(tree, arrivals);
  int cut = max_depth < 0 ? tree.cap_height : max_depth;
  ParkOutcome out;
  out.visits.assign(tree.size(), 0);
  std::vector<char> occupied(tree.size(), 0);
  // Breadth-first order is depth order.
  for (std::size_t v = 0; v < tree.size(); ++v) {
    if (tree.depth[v] > cut) break;
    for (int car = 0; car < arrivals[v]; ++car) {
      int u = static_cast<int>(v);
      while (u >= 0) {
        auto su = static_cast<std::size_t>(u);
        ++out.visits[su];
        if (!occupied[su]) {
          occupied[su] = 1;
          break;
        }
        u = tree.parent[su];
      }
    }
  }
  finalize(out, tree, arrivals, max_depth);
  return out;
}

ParkOutcome park_layered(const SampledTree& tree, const ArrivalSampler& sampler, RandomStream& rng) {
  return park_layered(tree, sample_arrivals(sampler, tree.size(), rng));
}

namespace {

// Visit counts of the first `end` vertices (a depth prefix) into `visits`.
void bottom_up_visits(const SampledTree& tree, const std::vector<int>& arrivals, std::size_t end,
                      std::vector<long long>& visits) {
  visits.assign(arrivals.begin(), arrivals.begin() + static_cast<long>(end));
  for (std::size_t v = end; v-- > 1;) {
    if (visits[v] > 1) visits[static_cast<std::size_t>(tree.parent[v])] += visits[v] - 1;
  }
}

}  // namespace

std::size_t SampledTree::prefix_size(int max_depth) const {
  if (max_depth < 0) return 0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < level_sizes.size() && static_cast<int>(d) <= max_depth; ++d) {
    n += static_cast<std::size_t>(level_sizes[d]);
  }
  return n;
}

ParkOutcome park_bottom_up(const SampledTree& tree, const std::vector<int>& arrivals, int max_depth) {
  check_arrivals(tree, arrivals);
  int cut = max_depth < 0 ? tree.cap_height : max_depth;
  ParkOutcome out;
  bottom_up_visits(tree, arrivals, tree.prefix_size(cut), out.visits);
  out.visits.resize(tree.size(), 0);
  finalize(out, tree, arrivals, max_depth);
  return out;
}

ParkOutcome park_in_random_order(const SampledTree& tree, const std::vector<int>& arrivals, RandomStream& rng) {
  check_arrivals(tree, arrivals);
  std::vector<int> cars;
  for (std::size_t v = 0; v < tree.size(); ++v) cars.insert(cars.end(), static_cast<std::size_t>(arrivals[v]), static_cast<int>(v));
  std::shuffle(cars.begin(), cars.end(), rng);
  ParkOutcome out;
  out.visits = park_cars_in_order(tree.parent, cars);
  finalize(out, tree, arrivals, -1);
  return out;
}

SimConfig sim_config_from(const ExperimentConfig& cfg) {
  SimConfig s;
  s.samples = cfg.samples;
  s.cap_height = cfg.cap_height;
  s.K = cfg.K;
  s.seed = cfg.seed;
  return s;
}

int resolve_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("GEOPARC_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

namespace {

constexpr int kLevelStats = 16;

struct SampleResult {
  long long visits = 0;
  std::array<long long, 3> flux{};
  bool survived = false;
  bool vertex_capped = false;
  long long cluster = 0;
  bool cluster_at_cut = false;
  bool conserves = true;
  std::array<long long, kLevelStats + 1> levels{};
};

}  // namespace

MonteCarloStats run_experiment(const ArrivalLaw& law, double q, const SimConfig& config) {
  check_offspring_param(q);
  check_sim_config(config);
  ArrivalSampler sampler(law);
  const int H = config.cap_height;
  std::array<int, 3> heights{std::max(1, H / 3), std::max(1, 2 * H / 3), H};
  std::vector<SampleResult> results(static_cast<std::size_t>(config.samples));

  parallel_for(config.samples, resolve_threads(config.threads), [&](long long i) {
    std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    RandomStream tree_rng(derive_seed(seed, 0));
    RandomStream car_rng(derive_seed(seed, 1));
    auto tree = sample_tree(q, H, config.cap_vertices, tree_rng);
    auto arrivals = sample_arrivals(sampler, tree.size(), car_rng);
    auto full = park_bottom_up(tree, arrivals);
    SampleResult r;
    r.visits = full.root_visits;
    r.flux[2] = full.flux;
    std::vector<long long> scratch;
    for (std::size_t h = 0; h < 2; ++h) {
      bottom_up_visits(tree, arrivals, tree.prefix_size(heights[h]), scratch);
      r.flux[h] = std::max(0LL, scratch[0] - 1);
    }
    r.survived = tree.reached_cap;
    r.vertex_capped = tree.vertex_capped;
    r.cluster = full.root_cluster_size;
    r.cluster_at_cut = full.cluster_at_cut;
    r.conserves = full.conserves();
    for (std::size_t n = 0; n < r.levels.size() && n < tree.level_sizes.size(); ++n) r.levels[n] = tree.level_sizes[n];
    results[static_cast<std::size_t>(i)] = r;
  });

  MonteCarloStats s;
  s.samples = config.samples;
  s.cap_height = H;
  s.K = config.K;
  const auto N = config.samples;
  std::vector<long long> exact_count(static_cast<std::size_t>(config.K) + 1, 0);
  std::vector<long long> at_least(static_cast<std::size_t>(config.K) + 1, 0);
  std::array<std::vector<long long>, 3> survivor_flux;
  s.cluster_sizes.assign(kClusterHistogramBins, 0);
  int levels = std::min(H, kLevelStats);
  std::vector<double> level_sum(static_cast<std::size_t>(levels) + 1, 0.0);
  std::vector<double> level_sq(static_cast<std::size_t>(levels) + 1, 0.0);
  for (const auto& r : results) {
    if (r.visits <= config.K) ++exact_count[static_cast<std::size_t>(r.visits)];
    for (int k = 0; k <= config.K && k <= r.visits; ++k) ++at_least[static_cast<std::size_t>(k)];
    if (r.survived) {
      ++s.survived;
      for (std::size_t h = 0; h < 3; ++h) survivor_flux[h].push_back(r.flux[h]);
    }
    if (r.vertex_capped) ++s.vertex_capped;
    if (r.cluster_at_cut) ++s.clusters_at_cut;
    if (!r.conserves) ++s.conservation_violations;
    ++s.cluster_sizes[static_cast<std::size_t>(std::min<long long>(r.cluster, kClusterHistogramBins - 1))];
    for (int n = 0; n <= levels; ++n) {
      double z = static_cast<double>(r.levels[static_cast<std::size_t>(n)]);
      level_sum[static_cast<std::size_t>(n)] += z;
      level_sq[static_cast<std::size_t>(n)] += z * z;
    }
  }
  for (int k = 0; k <= config.K; ++k) {
    double p = static_cast<double>(exact_count[static_cast<std::size_t>(k)]) / N;
    s.p_visits.push_back(p);
    s.se_visits.push_back(proportion_se(p, N));
    double t = static_cast<double>(at_least[static_cast<std::size_t>(k)]) / N;
    s.p_at_least.push_back(t);
    s.se_at_least.push_back(proportion_se(t, N));
  }
  s.survival = static_cast<double>(s.survived) / N;
  s.survival_se = proportion_se(s.survival, N);
  for (std::size_t h = 0; h < 3; ++h) {
    s.heights.push_back(heights[h]);
    s.median_flux.push_back(median(survivor_flux[h]));
  }
  for (int n = 0; n <= levels; ++n) {
    double mean = level_sum[static_cast<std::size_t>(n)] / N;
    double var = std::max(0.0, level_sq[static_cast<std::size_t>(n)] / N - mean * mean);
    s.mean_level.push_back(mean);
    s.se_level.push_back(std::sqrt(var / N));
  }
  return s;
}

std::string MonteCarloStats::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "stat,k_or_n,value,stderr\n";
  os << "samples,0," << samples << ",\n";
  for (std::size_t k = 0; k < p_visits.size(); ++k) os << "p_visits," << k << ',' << p_visits[k] << ',' << se_visits[k] << '\n';
  for (std::size_t k = 0; k < p_at_least.size(); ++k) {
    os << "p_at_least," << k << ',' << p_at_least[k] << ',' << se_at_least[k] << '\n';
  }
  os << "survival," << cap_height << ',' << survival << ',' << survival_se << '\n';
  for (std::size_t h = 0; h < heights.size(); ++h) os << "median_flux," << heights[h] << ',' << median_flux[h] << ",\n";
  for (std::size_t n = 0; n < cluster_sizes.size(); ++n) {
    if (cluster_sizes[n] == 0) continue;
    double f = static_cast<double>(cluster_sizes[n]) / samples;
    os << "cluster_size," << n << ',' << f << ',' << proportion_se(f, samples) << '\n';
  }
  os << "clusters_at_cut,0," << clusters_at_cut << ",\n";
  os << "vertex_capped,0," << vertex_capped << ",\n";
  for (std::size_t n = 0; n < mean_level.size(); ++n) os << "mean_level," << n << ',' << mean_level[n] << ',' << se_level[n] << '\n';
  os << "conservation_violations,0," << conservation_violations << ",\n";
  return os.str();
}

double predicted_cluster_probability(const ArrivalLaw& law, double q, double p_circ, const PlaneTree& target,
                                     const std::vector<int>& target_arrivals) {
  if (!target.valid()) throw Error(ErrorCode::BadParam, "target is not a valid plane tree");
  if (target_arrivals.size() != target.children.size()) throw Error(ErrorCode::BadParam, "one arrival per target vertex");
  auto visits = park_visits(target.parents(), target_arrivals);
  for (long long x : visits) {
    if (x < 1) throw Error(ErrorCode::BadParam, "target is not fully parked");
  }
  int n = target.size();
  double w = 1.0;
  for (int a : target_arrivals) w *= law.coeff(a);
  return w * std::pow(1.0 - q, n) * std::pow(q, n - 1) * std::pow(1.0 - q * p_circ, -(2.0 * n - 1.0));
}

ClusterProbe cluster_probe(const ArrivalLaw& law, double q, const PlaneTree& target,
                           const std::vector<int>& target_arrivals, const SimConfig& config) {
  check_sim_config(config);
  if (target.size() > 4) throw Error(ErrorCode::BadParam, "cluster targets are limited to 4 vertices");
  auto fp = solve_p_circ(law, q);
  if (!fp) throw Error(ErrorCode::NotSubcritical, "cluster law needs a subcritical pair");
  ClusterProbe out;
  out.p_circ = fp->p_circ;
  out.predicted = predicted_cluster_probability(law, q, fp->p_circ, target, target_arrivals);
  out.samples = config.samples;

  ArrivalSampler sampler(law);
  std::vector<char> hit(static_cast<std::size_t>(config.samples), 0);
  const auto n = static_cast<std::size_t>(target.size());
  parallel_for(config.samples, resolve_threads(config.threads), [&](long long i) {
    std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    RandomStream tree_rng(derive_seed(seed, 0));
    RandomStream car_rng(derive_seed(seed, 1));
    auto tree = sample_tree(q, config.cap_height, config.cap_vertices, tree_rng);
    auto arrivals = sample_arrivals(sampler, tree.size(), car_rng);
    auto park = park_bottom_up(tree, arrivals);
    if (park.root_visits < 1 || park.cluster_at_cut || static_cast<std::size_t>(park.root_cluster_size) != n) return;
    // Preorder walk of the root cluster, compared entry by entry.
    std::vector<int> stack{0};
    std::size_t idx = 0;
    while (!stack.empty()) {
      auto v = static_cast<std::size_t>(stack.back());
      stack.pop_back();
      int occupied_children = 0;
      int first = tree.first_child[v];
      int last = first + tree.child_count[v];
      for (int c = last - 1; c >= first; --c) {
        if (park.visits[static_cast<std::size_t>(c)] >= 1) {
          stack.push_back(c);
          ++occupied_children;
        }
      }
      if (idx >= n || arrivals[v] != target_arrivals[idx] || occupied_children != target.children[idx]) return;
      ++idx;
    }
    hit[static_cast<std::size_t>(i)] = idx == n;
  });
  for (char h : hit) out.hits += h;
  out.frequency = static_cast<double>(out.hits) / config.samples;
  out.stderr_ = proportion_se(out.frequency, config.samples);
  return out;
}

TailRateReport tail_rate_check(const ArrivalLaw& law, double q, const TailRateConfig& config) {
  check_offspring_param(q);
  if (config.K < 1) throw Error(ErrorCode::BadParam, "K must be >= 1");
  auto fp = solve_p_circ(law, q);
  if (!fp) throw Error(ErrorCode::NotSubcritical, "tail rate check needs a subcritical pair");
  TailRateReport rep;
  rep.q = q;
  rep.p_circ = fp->p_circ;
  auto F = tutte_solve(law, config.n_max, std::max(config.k_max, config.K + 1));
  auto flux = flux_distribution_exact(law, q, fp->p_circ, F);
  // P(X >= k) = sum_{i >= k-1} P(X = i + 1), summed from the top.
  std::vector<double> tail(flux.p.size() + 1, 0.0);
  for (std::size_t i = flux.p.size(); i-- > 0;) tail[i] = tail[i + 1] + flux.p[i];
  const double growth = q / (1.0 - q);
  for (int k = 0; k <= config.K; ++k) {
    double p = k == 0 ? 1.0 : tail[static_cast<std::size_t>(k - 1)];
    rep.exact.push_back(std::pow(growth, k) * p);
  }
  for (int k = 1; k <= config.K; ++k) {
    std::vector<double> prefix(rep.exact.begin(), rep.exact.begin() + k + 1);
    std::nth_element(prefix.begin(), prefix.begin() + static_cast<long>(prefix.size() / 2), prefix.end());
    double med = prefix[prefix.size() / 2];
    if (rep.exact[static_cast<std::size_t>(k)] > 10.0 * med) {
      rep.bounded = false;
      if (rep.first_violation < 0) rep.first_violation = k;
    }
  }
  if (config.mc_samples > 0) {
    SimConfig sim = config.sim;
    sim.samples = config.mc_samples;
    sim.K = config.mc_K;
    auto stats = run_experiment(law, q, sim);
    for (int k = 0; k <= config.mc_K; ++k) {
      double scale = std::pow(growth, k);
      rep.monte_carlo.push_back(scale * stats.p_at_least[static_cast<std::size_t>(k)]);
      rep.monte_carlo_se.push_back(scale * stats.se_at_least[static_cast<std::size_t>(k)]);
    }
  }
  return rep;
}

}  // namespace geoparc
