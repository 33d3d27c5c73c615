#include "geoparc/oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "geoparc/error.hpp"
#include "geoparc/numeric.hpp"

namespace geoparc {

namespace {

void check_size(int n) {
  if (n < 1) throw Error(ErrorCode::BadParam, "tree size must be >= 1");
  if (n > kMaxOracleTreeSize) throw Error(ErrorCode::TooLarge, "tree size capped at " + std::to_string(kMaxOracleTreeSize));
}

// Child-count sequences in preorder: `open` is the number of vertices still
// owed to earlier child counts, and must stay positive until the last vertex.
void enumerate(int n, std::vector<int>& seq, int open, const std::function<void(const PlaneTree&)>& visit) {
  int pos = static_cast<int>(seq.size());
  if (pos == n) {
    if (open == 0) visit(PlaneTree{seq});
    return;
  }
  int remaining = n - pos - 1;
  for (int c = 0; c <= remaining; ++c) {
    int next = open - 1 + c;
    if (next > remaining || (next == 0 && remaining > 0)) continue;
    seq.push_back(c);
    enumerate(n, seq, next, visit);
    seq.pop_back();
  }
}

template <typename T>
struct WeightOps;

template <>
struct WeightOps<double> {
  static double one() { return 1.0; }
  static std::vector<double> table(const ArrivalLaw& law, int size) { return law.coeffs(size); }
  static bool is_zero(double v) { return v == 0.0; }
};

template <>
struct WeightOps<Rational> {
  static Rational one() { return 1; }
  static std::vector<Rational> table(const ArrivalLaw& law, int size) { return law.exact_coeffs(size); }
  static bool is_zero(const Rational& v) { return sgn(v) == 0; }
};

template <typename T, typename Acc>
class Enumerator {
 public:
  Enumerator(const PlaneTree& tree, const std::vector<T>& mu, int n, int k, Acc& acc)
      : mu_(mu), n_(n), k_(k), acc_(acc), parents_(tree.parents()) {
    // Postorder of the preorder-indexed tree.
    std::vector<std::vector<int>> kids(static_cast<std::size_t>(n));
    for (int v = 1; v < n; ++v) kids[static_cast<std::size_t>(parents_[static_cast<std::size_t>(v)])].push_back(v);
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < kids[static_cast<std::size_t>(v)].size()) {
        int c = kids[static_cast<std::size_t>(v)][next++];
        stack.push_back({c, 0});
      } else {
        post_.push_back(v);
        stack.pop_back();
      }
    }
    kids_ = std::move(kids);
    arrivals_.assign(static_cast<std::size_t>(n), 0);
    visits_.assign(static_cast<std::size_t>(n), 0);
  }

  void run() { step(0, n_ + k_, WeightOps<T>::one()); }

 private:
  long long incoming(int v) const {
    long long in = 0;
    for (int c : kids_[static_cast<std::size_t>(v)]) in += std::max(0LL, visits_[static_cast<std::size_t>(c)] - 1);
    return in;
  }

  void step(std::size_t pos, int cars_left, const T& weight) {
    int v = post_[pos];
    long long in = incoming(v);
    auto sv = static_cast<std::size_t>(v);
    if (v == 0) {
      // The root takes whatever is left.
      int a = cars_left;
      if (a >= static_cast<int>(mu_.size()) || WeightOps<T>::is_zero(mu_[static_cast<std::size_t>(a)])) return;
      arrivals_[sv] = a;
      visits_[sv] = a + in;
      finish(weight * mu_[static_cast<std::size_t>(a)]);
      return;
    }
    int max_a = std::min<int>(cars_left, static_cast<int>(mu_.size()) - 1);
    for (int a = 0; a <= max_a; ++a) {
      if (WeightOps<T>::is_zero(mu_[static_cast<std::size_t>(a)])) continue;
      // An empty vertex can never be filled later: cars only move rootward.
      if (a + in == 0) continue;
      arrivals_[sv] = a;
      visits_[sv] = a + in;
      T w = weight * mu_[static_cast<std::size_t>(a)];
      step(pos + 1, cars_left - a, w);
    }
  }

  void finish(const T& weight) {
    int occupied = 0;
    for (long long x : visits_) occupied += x >= 1 ? 1 : 0;
    long long root = visits_[0];
    bool filled = occupied == n_;
    bool flux_ok = root == k_ + 1;
    if (filled != flux_ok) {
      throw Error(ErrorCode::BadParam, "oracle invariant broken: occupancy and root flux disagree");
    }
    // Cross-check against the independent visit computation.
    auto check = park_visits(parents_, arrivals_);
    if (check != visits_) throw Error(ErrorCode::BadParam, "oracle invariant broken: visit counts differ");
    if (filled) acc_.add(weight);
  }

  const std::vector<T>& mu_;
  int n_;
  int k_;
  Acc& acc_;
  std::vector<int> parents_;
  std::vector<std::vector<int>> kids_;
  std::vector<int> post_;
  std::vector<int> arrivals_;
  std::vector<long long> visits_;
};

struct RationalSum {
  Rational s = 0;
  void add(const Rational& v) { s += v; }
};

struct DoubleSum {
  CompensatedSum s;
  void add(double v) { s += v; }
};

void check_oracle_args(int n, int k) {
  check_size(n);
  if (k < 0) throw Error(ErrorCode::BadParam, "k must be >= 0");
  if (n > 8 || k > 5) throw Error(ErrorCode::TooLarge, "brute force limited to n <= 8, k <= 5");
}

}  // namespace

bool PlaneTree::valid() const {
  if (children.empty()) return false;
  long long open = 1;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (children[i] < 0 || open <= 0) return false;
    open += children[i] - 1;
  }
  return open == 0;
}

std::vector<int> PlaneTree::parents() const {
  std::vector<int> parent(children.size(), -1);
  std::vector<std::pair<int, int>> stack;  // (vertex, children still to attach)
  for (std::size_t v = 0; v < children.size(); ++v) {
    while (!stack.empty() && stack.back().second == 0) stack.pop_back();
    if (!stack.empty()) {
      parent[v] = stack.back().first;
      --stack.back().second;
    }
    stack.push_back({static_cast<int>(v), children[v]});
  }
  return parent;
}

void for_each_plane_tree(int n, const std::function<void(const PlaneTree&)>& visit) {
  check_size(n);
  std::vector<int> seq;
  seq.reserve(static_cast<std::size_t>(n));
  enumerate(n, seq, 1, visit);
}

std::vector<PlaneTree> enum_plane_trees(int n) {
  std::vector<PlaneTree> out;
  for_each_plane_tree(n, [&](const PlaneTree& t) { out.push_back(t); });
  return out;
}

std::vector<long long> park_visits(const std::vector<int>& parents, const std::vector<int>& arrivals) {
  std::vector<long long> visits(arrivals.begin(), arrivals.end());
  for (std::size_t v = parents.size(); v-- > 1;) {
    if (visits[v] > 1) visits[static_cast<std::size_t>(parents[v])] += visits[v] - 1;
  }
  return visits;
}

std::vector<long long> park_cars_in_order(const std::vector<int>& parents, const std::vector<int>& car_vertices) {
  std::vector<long long> visits(parents.size(), 0);
  std::vector<char> occupied(parents.size(), 0);
  for (int start : car_vertices) {
    int v = start;
    while (v >= 0) {
      auto sv = static_cast<std::size_t>(v);
      ++visits[sv];
      if (!occupied[sv]) {
        occupied[sv] = 1;
        break;
      }
      v = parents[sv];
    }
  }
  return visits;
}

Rational brute_force_coeff_exact(const ArrivalLaw& law, int n, int k) {
  check_oracle_args(n, k);
  auto mu = WeightOps<Rational>::table(law, n + k + 1);
  RationalSum acc;
  for_each_plane_tree(n, [&](const PlaneTree& t) { Enumerator<Rational, RationalSum>(t, mu, n, k, acc).run(); });
  return acc.s;
}

double brute_force_coeff(const ArrivalLaw& law, int n, int k) {
  check_oracle_args(n, k);
  auto mu = WeightOps<double>::table(law, n + k + 1);
  DoubleSum acc;
  for_each_plane_tree(n, [&](const PlaneTree& t) { Enumerator<double, DoubleSum>(t, mu, n, k, acc).run(); });
  return acc.s.value();
}

std::string OracleReport::to_csv() const {
  std::ostringstream os;
  os << "n,k,oracle,tutte,delta,mode\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.n << ',' << r.k << ',' << r.oracle << ',' << r.tutte << ',' << r.delta << ',' << to_string(mode) << '\n';
  }
  return os.str();
}

OracleReport oracle_compare(const ArrivalLaw& law, int n_max, int k_max, ScalarMode mode) {
  check_oracle_args(n_max, k_max);
  OracleReport report;
  report.mode = mode;
  report.tolerance = mode == ScalarMode::rational ? 0.0 : 1e-12;
  TutteOptions opts;
  opts.mode = mode;
  auto F = tutte_solve(law, n_max, k_max, opts);
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  for (int n = 1; n <= n_max; ++n) {
    for (int k = 0; k <= k_max; ++k) {
      OracleRow row;
      row.n = n;
      row.k = k;
      if (mode == ScalarMode::rational) {
        Rational o = brute_force_coeff_exact(law, n, k);
        Rational t = F.exact_coeff(n, k);
        Rational d = o - t;
        row.oracle = to_string(o);
        row.tutte = to_string(t);
        row.delta = std::fabs(d.get_d());
        if (sgn(d) != 0 && row.delta == 0.0) row.delta = std::numeric_limits<double>::denorm_min();
      } else {
        double o = brute_force_coeff(law, n, k);
        double t = F.coeff(n, k);
        row.oracle = fmt(o);
        row.tutte = fmt(t);
        row.delta = std::fabs(o - t);
      }
      report.max_delta = std::max(report.max_delta, row.delta);
      if (row.delta > report.tolerance) report.passed = false;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace geoparc
