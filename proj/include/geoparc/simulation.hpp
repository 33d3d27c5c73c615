#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoparc/arrival_law.hpp"
#include "geoparc/law_io.hpp"
#include "geoparc/numeric.hpp"
#include "geoparc/oracle.hpp"

namespace geoparc {

// BGW tree with geometric(q) offspring, P(k children) = q^k (1 - q), stored in
// breadth-first order so that parents precede children and the children of a
// vertex are contiguous.
struct SampledTree {
  std::vector<int> parent;  // parent[0] = -1
  std::vector<int> depth;
  std::vector<int> first_child;
  std::vector<int> child_count;
  std::vector<long long> level_sizes;  // Z_0 .. Z_height
  int cap_height = 0;
  bool reached_cap = false;    // some vertex sits at depth cap_height
  bool vertex_capped = false;  // generation stopped at the vertex cap

  std::size_t size() const { return parent.size(); }
  // Number of vertices at depth <= max_depth; they form a prefix.
  std::size_t prefix_size(int max_depth) const;
  bool truncated() const { return reached_cap || vertex_capped; }
};

inline constexpr long long kDefaultCapVertices = 2000000;
inline constexpr int kDefaultCapHeight = 30;

SampledTree sample_tree(double q, int cap_height, long long cap_vertices, RandomStream& rng);

// Tree with the given child counts listed in breadth-first order.
SampledTree tree_from_child_counts(const std::vector<int>& child_counts, int cap_height = kDefaultCapHeight);

std::vector<int> sample_arrivals(const ArrivalSampler& sampler, std::size_t count, RandomStream& rng);

struct ParkOutcome {
  std::vector<long long> visits;  // X(u); vertices deeper than the cut are 0
  long long root_visits = 0;      // X
  long long flux = 0;             // (X - 1)+
  long long occupied = 0;
  long long cars = 0;
  long long root_cluster_size = 0;  // 0 when the root is empty
  bool cluster_at_cut = false;      // root cluster reaches the cut depth

  // sum a_u = #occupied + (X - 1)+ and X >= 1 implies the root is occupied.
  bool conserves() const { return cars == occupied + flux; }
};

// Parking on [T]_max_depth (the whole tree when max_depth < 0). Cars are
// released vertex by vertex in order of increasing depth and each walks
// rootward to the first empty vertex.
ParkOutcome park_layered(const SampledTree& tree, const std::vector<int>& arrivals, int max_depth = -1);
ParkOutcome park_layered(const SampledTree& tree, const ArrivalSampler& sampler, RandomStream& rng);

// Same final state computed leaf to root: X(u) = a_u + sum over children (X(c) - 1)+.
ParkOutcome park_bottom_up(const SampledTree& tree, const std::vector<int>& arrivals, int max_depth = -1);

// Releases the cars in a uniformly shuffled order.
ParkOutcome park_in_random_order(const SampledTree& tree, const std::vector<int>& arrivals, RandomStream& rng);

struct SimConfig {
  long long samples = 100000;
  int cap_height = kDefaultCapHeight;
  long long cap_vertices = kDefaultCapVertices;
  int K = 10;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: GEOPARC_THREADS or the hardware concurrency
};

SimConfig sim_config_from(const ExperimentConfig& cfg);

// Worker count: explicit request, else GEOPARC_THREADS, else the hardware.
int resolve_threads(int requested);

struct MonteCarloStats {
  long long samples = 0;
  int cap_height = 0;
  int K = 0;
  std::vector<double> p_visits;  // P(X = k), k = 0..K
  std::vector<double> se_visits;
  std::vector<double> p_at_least;  // P(X >= k), k = 0..K
  std::vector<double> se_at_least;
  long long survived = 0;  // trees reaching the height cap
  double survival = 0.0;
  double survival_se = 0.0;
  std::vector<int> heights;         // cap/3, 2 cap/3, cap
  std::vector<double> median_flux;  // over surviving trees, per height
  std::vector<long long> cluster_sizes;  // root cluster size histogram; last bin collects larger ones
  long long clusters_at_cut = 0;
  long long vertex_capped = 0;
  std::vector<double> mean_level;  // E Z_n, n = 0..min(cap, 16)
  std::vector<double> se_level;
  long long conservation_violations = 0;

  std::string to_csv() const;
};

inline constexpr int kClusterHistogramBins = 64;

MonteCarloStats run_experiment(const ArrivalLaw& law, double q, const SimConfig& config);

struct ClusterProbe {
  long long samples = 0;
  long long hits = 0;
  double frequency = 0.0;
  double stderr_ = 0.0;
  double predicted = 0.0;
  double p_circ = 0.0;
};

// Frequency with which the root cluster equals the decorated plane tree
// (target, arrivals in preorder), against w(t)(1-q)^n q^(n-1)(1-q p)^-(2n-1).
ClusterProbe cluster_probe(const ArrivalLaw& law, double q, const PlaneTree& target,
                           const std::vector<int>& target_arrivals, const SimConfig& config);
double predicted_cluster_probability(const ArrivalLaw& law, double q, double p_circ, const PlaneTree& target,
                                     const std::vector<int>& target_arrivals);

struct TailRateConfig {
  int K = 30;
  int n_max = 200;
  int k_max = 200;
  long long mc_samples = 0;  // 0 skips the Monte Carlo column
  int mc_K = 6;
  SimConfig sim;
};

struct TailRateReport {
  double q = 0.0;
  double p_circ = 0.0;
  std::vector<double> exact;  // (q/(1-q))^k P(X >= k), k = 0..K
  std::vector<double> monte_carlo;
  std::vector<double> monte_carlo_se;
  bool bounded = true;
  int first_violation = -1;
};

TailRateReport tail_rate_check(const ArrivalLaw& law, double q, const TailRateConfig& config);

}  // namespace geoparc
