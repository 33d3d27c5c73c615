#include <doctest.h>

#include <set>

#include "geoparc/error.hpp"
#include "geoparc/oracle.hpp"

using namespace geoparc;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Io;
}

struct Golden {
  int n, k;
  const char* value;
};

// Brute-force sums recorded from the enumeration.
const Golden kBinaryFifth[] = {
    {1, 0, "0"},         {1, 1, "1/10"},  {1, 2, "0"},          {2, 0, "9/100"}, {2, 1, "0"},
    {2, 2, "1/100"},     {3, 0, "0"},     {3, 1, "27/1000"},    {3, 2, "0"},     {4, 0, "81/2000"},
    {4, 1, "0"},         {4, 2, "9/1000"}, {5, 0, "0"},         {5, 1, "2187/100000"}, {5, 2, "0"},
};

const Golden kGeometricFifth[] = {
    {1, 0, "5/36"},           {1, 1, "5/216"},           {1, 2, "5/1296"},
    {2, 0, "25/648"},         {2, 1, "25/2592"},         {2, 2, "25/11664"},
    {3, 0, "125/5832"},       {3, 1, "625/93312"},       {3, 2, "125/69984"},
    {4, 0, "25625/1679616"},  {4, 1, "55625/10077696"},  {4, 2, "625/373248"},
    {5, 0, "15625/1259712"},  {5, 1, "603125/120932352"}, {5, 2, "1815625/1088391168"},
};

}  // namespace

TEST_CASE("plane tree counts are Catalan numbers") {
  const std::size_t catalan[] = {1, 1, 2, 5, 14, 42, 132, 429, 1430};
  for (int n = 1; n <= 9; ++n) {
    auto trees = enum_plane_trees(n);
    CHECK(trees.size() == catalan[n - 1]);
    std::set<std::vector<int>> distinct;
    for (const auto& t : trees) {
      CHECK(t.size() == n);
      CHECK(t.valid());
      distinct.insert(t.children);
    }
    CHECK(distinct.size() == trees.size());
  }
  CHECK(code_of([] { enum_plane_trees(11); }) == ErrorCode::TooLarge);
  CHECK(code_of([] { enum_plane_trees(0); }) == ErrorCode::BadParam);
}

TEST_CASE("parents in preorder") {
  PlaneTree t{{2, 1, 0, 0}};
  CHECK(t.parents() == std::vector<int>{-1, 0, 1, 0});
  CHECK_FALSE(PlaneTree{{1, 0, 0}}.valid());
}

TEST_CASE("parking on fixed trees") {
  CHECK(park_visits({-1}, {3}) == std::vector<long long>{3});
  CHECK(park_visits({-1, 0}, {0, 2}) == std::vector<long long>{1, 2});
  CHECK(park_cars_in_order({-1, 0}, {1, 1}) == std::vector<long long>{1, 2});
  // order does not change the final visit counts
  std::vector<int> parents{-1, 0, 1, 0};
  CHECK(park_cars_in_order(parents, {2, 2, 0, 3}) == park_cars_in_order(parents, {3, 0, 2, 2}));
  CHECK(park_cars_in_order(parents, {2, 2, 0, 3}) == park_visits(parents, {1, 0, 2, 1}));
}

TEST_CASE("brute force small cases") {
  auto geo = ArrivalLaw::geometric(Rational(1, 5));
  for (int k = 0; k < 5; ++k) CHECK(brute_force_coeff_exact(geo, 1, k) == geo.exact_coeff(k + 1));
  for (int k = 0; k < 4; ++k) {
    Rational sum = 0;
    for (int a = 1; a <= k + 2; ++a) sum += geo.exact_coeff(a) * geo.exact_coeff(k + 2 - a);
    CHECK(brute_force_coeff_exact(geo, 2, k) == sum);
  }
  CHECK(brute_force_coeff(ArrivalLaw::binary(0.2), 2, 0) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(code_of([&] { brute_force_coeff_exact(geo, 9, 0); }) == ErrorCode::TooLarge);
  CHECK(code_of([&] { brute_force_coeff_exact(geo, 3, 6); }) == ErrorCode::TooLarge);
}

TEST_CASE("frozen brute force values") {
  auto bin = ArrivalLaw::binary(Rational(1, 5));
  for (const auto& g : kBinaryFifth) CHECK(brute_force_coeff_exact(bin, g.n, g.k) == parse_rational(g.value));
  auto geo = ArrivalLaw::geometric(Rational(1, 5));
  for (const auto& g : kGeometricFifth) CHECK(brute_force_coeff_exact(geo, g.n, g.k) == parse_rational(g.value));
  auto Fb = tutte_solve(bin, 5, 2, {ScalarMode::rational});
  auto Fg = tutte_solve(geo, 5, 2, {ScalarMode::rational});
  for (const auto& g : kBinaryFifth) CHECK(Fb.exact_coeff(g.n, g.k) == parse_rational(g.value));
  for (const auto& g : kGeometricFifth) CHECK(Fg.exact_coeff(g.n, g.k) == parse_rational(g.value));
}

TEST_CASE("oracle comparison reports") {
  auto bin = oracle_compare(ArrivalLaw::binary(Rational(1, 5)), 6, 3, ScalarMode::rational);
  CHECK(bin.passed);
  CHECK(bin.max_delta == 0.0);
  CHECK(bin.rows.size() == 24);
  auto geo = oracle_compare(ArrivalLaw::geometric(Rational(1, 5)), 5, 3, ScalarMode::rational);
  CHECK(geo.passed);
  CHECK(geo.max_delta == 0.0);
  auto poi = oracle_compare(ArrivalLaw::poisson(0.3), 5, 2, ScalarMode::floating);
  CHECK(poi.passed);
  CHECK(poi.max_delta <= 1e-12);
  CHECK(poi.to_csv().rfind("n,k,oracle,tutte,delta,mode\n", 0) == 0);
}
