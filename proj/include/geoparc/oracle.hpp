#pragma once

#include <functional>
#include <string>
#include <vector>

#include "geoparc/arrival_law.hpp"
#include "geoparc/series.hpp"

namespace geoparc {

// Rooted ordered tree stored as the child counts of its vertices in preorder.
struct PlaneTree {
  std::vector<int> children;

  int size() const { return static_cast<int>(children.size()); }
  bool valid() const;
  // Parent index of each vertex in preorder; -1 for the root.
  std::vector<int> parents() const;
};

inline constexpr int kMaxOracleTreeSize = 10;

// Every plane tree with n vertices, each exactly once, in a fixed order.
std::vector<PlaneTree> enum_plane_trees(int n);
void for_each_plane_tree(int n, const std::function<void(const PlaneTree&)>& visit);

// Visit counts after parking arrivals[u] cars at each vertex of the tree
// given by its parent array (parents before children).
std::vector<long long> park_visits(const std::vector<int>& parents, const std::vector<int>& arrivals);

// Parks cars one by one, in the given order of arrival vertices; each car
// walks rootward to the first empty vertex. Returns visit counts.
std::vector<long long> park_cars_in_order(const std::vector<int>& parents, const std::vector<int>& car_vertices);

// Sum of prod mu_{a_u} over plane trees with n vertices and arrival vectors
// whose parking fills every vertex and sends k cars out of the root.
Rational brute_force_coeff_exact(const ArrivalLaw& law, int n, int k);
double brute_force_coeff(const ArrivalLaw& law, int n, int k);

struct OracleRow {
  int n = 0;
  int k = 0;
  std::string oracle;
  std::string tutte;
  double delta = 0.0;
};

struct OracleReport {
  ScalarMode mode = ScalarMode::floating;
  std::vector<OracleRow> rows;
  double max_delta = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string to_csv() const;
};

OracleReport oracle_compare(const ArrivalLaw& law, int n_max, int k_max, ScalarMode mode);

}  // namespace geoparc
