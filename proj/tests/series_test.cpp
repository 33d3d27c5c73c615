#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geoparc/error.hpp"
#include "geoparc/kernel.hpp"
#include "geoparc/oracle.hpp"
#include "geoparc/series.hpp"

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

}  // namespace

TEST_CASE("single vertex row") {
  for (const auto& law : {ArrivalLaw::geometric(0.2), ArrivalLaw::poisson(0.3), ArrivalLaw::binary(0.2)}) {
    auto F = tutte_solve(law, 4, 6);
    for (int k = 0; k <= 6; ++k) CHECK(F.coeff(1, k) == doctest::Approx(law.coeff(k + 1)).epsilon(1e-14));
  }
}

TEST_CASE("two vertex trees") {
  auto bin = tutte_solve(ArrivalLaw::binary(Rational(1, 5)), 4, 4, {ScalarMode::rational});
  CHECK(bin.exact_coeff(2, 0) == Rational(9, 100));
  auto geo = tutte_solve(ArrivalLaw::geometric(Rational(1, 5)), 4, 4, {ScalarMode::rational});
  CHECK(geo.exact_coeff(2, 0) == Rational(25, 648));
  auto geo_f = tutte_solve(ArrivalLaw::geometric(0.2), 4, 4);
  CHECK(geo_f.coeff(2, 0) == doctest::Approx(25.0 / 648).epsilon(1e-14));
}

TEST_CASE("coefficients are nonnegative and respect bounded support") {
  auto law = ArrivalLaw::custom(std::vector<double>{0.6, 0.1, 0.1, 0.2});
  auto F = tutte_solve(law, 12, default_k_max(law, 12));
  CHECK(F.exact_in_y());
  for (int n = 1; n <= 12; ++n) {
    for (int k = 0; k <= F.k_max(); ++k) {
      CHECK(F.coeff(n, k) >= 0.0);
      if (k > 2 * n) CHECK(F.coeff(n, k) == 0.0);
    }
  }
  auto geo = tutte_solve(ArrivalLaw::geometric(0.2), 40, 40);
  for (int n = 1; n <= 40; ++n)
    for (int k = 0; k <= 40; ++k) CHECK(geo.coeff(n, k) >= 0.0);
}

TEST_CASE("rational and float tables agree") {
  auto exact = ArrivalLaw::geometric(Rational(1, 5));
  auto R = tutte_solve(exact, 10, 6, {ScalarMode::rational});
  auto D = tutte_solve(ArrivalLaw::geometric(0.2), 10, 6);
  for (int n = 1; n <= 10; ++n)
    for (int k = 0; k <= 6; ++k) CHECK(D.coeff(n, k) == doctest::Approx(R.exact_coeff(n, k).get_d()).epsilon(1e-13));
  CHECK(R.max_constant_residual() == 0.0);
}

TEST_CASE("scaled table") {
  auto law = ArrivalLaw::geometric(0.2);
  const double s = 0.75;
  auto plain = tutte_solve(law, 30, 30);
  TutteOptions opt;
  opt.x_scale = s;
  auto scaled = tutte_solve(law, 30, 30, opt);
  for (int n = 1; n <= 30; ++n)
    CHECK(scaled.coeff(n, 0) == doctest::Approx(plain.coeff(n, 0) * std::pow(s, n)).epsilon(1e-12));
}

TEST_CASE("tutte errors") {
  auto geo = ArrivalLaw::geometric(Rational(1, 5));
  CHECK(code_of([&] { tutte_solve(geo, 5, -1); }) == ErrorCode::BadTruncation);
  CHECK(code_of([&] { tutte_solve(geo, 0, 3); }) == ErrorCode::BadTruncation);
  CHECK(code_of([] { tutte_solve(ArrivalLaw::poisson(0.3), 5, 3, {ScalarMode::rational}); }) ==
        ErrorCode::BadParam);
  TutteOptions tiny{ScalarMode::rational, 64};
  CHECK(code_of([&] { tutte_solve(geo, 20, 10, tiny); }) == ErrorCode::Overflow);
}

TEST_CASE("series evaluation") {
  auto law = ArrivalLaw::geometric(0.2);
  auto F = tutte_solve(law, 60, 60);
  auto zero = series_eval(F, 0.0, 1.0);
  CHECK(zero.value == 0.0);

  double x1 = x_hat(law, 1.0);
  CHECK(x1 == doctest::Approx(1 / 1.44));
  auto v = series_eval(F, x1, 1.0, radius_of_F(law));
  CHECK(std::fabs(v.value - 0.2 / 1.2) <= v.tail_bound);

  CHECK(code_of([&] { series_eval(F, 0.99 * radius_of_F(law), 1.0, radius_of_F(law)); }) == ErrorCode::NearRadius);
  auto near = series_eval(F, 0.995 * radius_of_F(law), 1.0, radius_of_F(law), true);
  CHECK(std::isinf(near.tail_bound));
}

TEST_CASE("series evaluation against brute force") {
  auto law = ArrivalLaw::binary(Rational(1, 5));
  auto F = tutte_solve(ArrivalLaw::binary(0.2), 40, 40);
  double brute = 0;
  for (int n = 1; n <= 6; ++n) brute += brute_force_coeff(law, n, 0) * std::pow(0.1, n);
  auto v = series_eval(F, 0.1, 0.0);
  // brute force stops at n = 6; the table carries the rest, of order 0.1^8
  CHECK(v.value == doctest::Approx(brute).epsilon(1e-6));
  CHECK(v.value >= 9e-4);
  CHECK(std::fabs(v.value - brute) <= 1e-7);
}

TEST_CASE("exact flux law sums to one") {
  auto law = ArrivalLaw::geometric(0.2);
  auto F = tutte_solve(law, 200, 200);
  for (double q : {0.51, 0.52, 0.53}) {
    auto fp = solve_p_circ(law, q);
    REQUIRE(fp);
    auto flux = flux_distribution_exact(law, q, fp->p_circ, F);
    CHECK(std::fabs(flux.deficit) <= 1e-6);
    for (double p : flux.p) CHECK(p >= 0.0);
  }
  auto fp = solve_p_circ(law, 0.52);
  auto flux = flux_distribution_exact(law, 0.52, fp->p_circ, F);
  CHECK(flux.p[0] == doctest::Approx(0.1605249623).epsilon(1e-8));
  CHECK(flux.p[1] == doctest::Approx(0.03406375078).epsilon(1e-8));
  CHECK(flux.p[2] == doctest::Approx(0.007693477716).epsilon(1e-8));
  CHECK(code_of([&] { flux_distribution_exact(law, 0.56, 0.7, F); }) == ErrorCode::NotSubcritical);
}

TEST_CASE("csv layout") {
  auto F = tutte_solve(ArrivalLaw::binary(Rational(1, 5)), 2, 2, {ScalarMode::rational});
  auto csv = F.to_csv();
  CHECK(csv.rfind("n,k,coeff\n", 0) == 0);
  CHECK(csv.find("2,0,9/100\n") != std::string::npos);
  CHECK(csv.find("1,0,") == std::string::npos);
}

TEST_CASE("scalar mode names") {
  CHECK(scalar_mode_from_string("rational") == ScalarMode::rational);
  CHECK(scalar_mode_from_string("float") == ScalarMode::floating);
  CHECK(code_of([] { scalar_mode_from_string("double"); }) == ErrorCode::BadParam);
}
