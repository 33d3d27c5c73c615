#include <doctest.h>

#include <cmath>

#include "geoparc/error.hpp"
#include "geoparc/kernel.hpp"

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

TEST_CASE("discriminant") {
  auto geo = ArrivalLaw::geometric(0.2);
  CHECK(discriminant(geo, 0.0) == doctest::Approx(std::pow(geo.coeff(0), 2)));
  CHECK(std::fabs(discriminant(geo, 1.5)) <= 1e-12);
  for (const auto& law : {ArrivalLaw::binary(0.2), ArrivalLaw::poisson(0.3), geo}) {
    auto s = law.stats();
    double sigma2 = s.variance;
    double at_one = discriminant(law, 1.0);
    CHECK(at_one == doctest::Approx((1 - s.mean) * (1 - s.mean) - 2 * law.G(1.0, 2)));
    CHECK((at_one > 0) == (2 * sigma2 + s.mean * s.mean < 1));
  }
  CHECK(code_of([&] { discriminant(geo, 7.0); }) == ErrorCode::BeyondRadius);
}

TEST_CASE("threshold for the geometric family") {
  for (double a : {0.05, 0.1, 0.2, 0.3}) {
    auto th = find_tc(ArrivalLaw::geometric(a));
    CHECK(th.kind == ThresholdKind::root);
    CHECK(th.t_c == doctest::Approx((1 + a) / (4 * a)).epsilon(1e-12));
  }
}

TEST_CASE("threshold for the poisson family") {
  auto th = find_tc(ArrivalLaw::poisson(0.3));
  CHECK(th.kind == ThresholdKind::root);
  CHECK(th.t_c == doctest::Approx((std::sqrt(2.0) - 1) / 0.3).epsilon(1e-12));
}

TEST_CASE("threshold for the binary family") {
  const double a = 0.2;
  auto law = ArrivalLaw::binary(a);
  auto th = find_tc(law);
  // root of (1-b)^2 - 6b(1-b)t^2 - 3b^2 t^4 with b = a/2
  double expected = std::sqrt((2 * std::sqrt(3.0) - 3) / 3) * std::sqrt((2 - a) / a);
  CHECK(th.t_c == doctest::Approx(expected).epsilon(1e-12));
  CHECK(th.t_c == doctest::Approx(1.1799596795710).epsilon(1e-12));
  CHECK(std::fabs(discriminant(law, th.t_c)) <= 1e-12);
  // sqrt(2/(sqrt3-1)) sqrt((2-a)/a) is not a root
  double other = std::sqrt(2 / (std::sqrt(3.0) - 1)) * std::sqrt((2 - a) / a);
  CHECK(other == doctest::Approx(4.9586749).epsilon(1e-7));
  CHECK(std::fabs(discriminant(law, other)) > 1.0);
}

TEST_CASE("dense phase") {
  // G = P + C (1 - t/rho)^alpha_s built to keep D(rho) > 0
  auto st = construct_stable_law(1.5, 2.5);
  auto th = find_tc(st.law);
  CHECK(th.t_c == doctest::Approx(1.5));
  CHECK(st.search.discriminant_at_rho >= -1e-12);
}

TEST_CASE("phi") {
  auto geo = ArrivalLaw::geometric(0.2);
  CHECK(phi(geo, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(phi(ArrivalLaw::poisson(0.3), 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(phi(geo, 0.0) == doctest::Approx(geo.coeff(0)));
  CHECK(phi(geo, 1.5) == doctest::Approx(2 * 2.8 / (1.8 * 1.2)).epsilon(1e-14));
  CHECK(code_of([&] { phi(geo, 6.5); }) == ErrorCode::BeyondRadius);
}

TEST_CASE("classification") {
  auto geo = ArrivalLaw::geometric(0.2);
  auto sub = classify(geo, 0.52);
  CHECK(sub.phase == Phase::subcritical);
  REQUIRE(sub.q_c);
  CHECK(*sub.q_c == doctest::Approx((1 + std::pow(0.4, 1.5) / 2.8) / 2).epsilon(1e-12));
  CHECK(*sub.q_c == doctest::Approx(0.5451754).epsilon(1e-7));
  CHECK(classify(geo, 0.56).phase == Phase::supercritical);

  auto at = classify(geo, *sub.q_c);
  CHECK(at.phase == Phase::subcritical);
  CHECK(at.boundary);

  auto bin = classify(ArrivalLaw::binary(0.5), 0.9);
  CHECK(bin.phase == Phase::supercritical);
  CHECK_FALSE(bin.q_c);
  CHECK(bin.threshold.t_c <= 1.0);

  CHECK(code_of([&] { classify(geo, 0.5); }) == ErrorCode::BadParam);
  CHECK(code_of([&] { classify(geo, 1.0); }) == ErrorCode::BadParam);
}

TEST_CASE("criterion identity on the geometric family") {
  for (double a = 0.01; a <= 0.33; a += 0.01) {
    auto law = ArrivalLaw::geometric(a);
    double c = criterion_value(law, find_tc(law));
    CHECK(c == doctest::Approx(27 * a * (1 + a) * (1 + a) / (4 * (1 + 9 * a) * (1 + 9 * a))).epsilon(1e-10));
    // 1 - 4c factors as a cube
    CHECK(1 - 4 * c == doctest::Approx(std::pow(1 - 3 * a, 3) / std::pow(1 + 9 * a, 2)).epsilon(1e-9));
  }
}

TEST_CASE("closed form q_c curves") {
  for (double a : {0.05, 0.1, 0.2, 0.3}) {
    auto law = ArrivalLaw::geometric(a);
    auto th = find_tc(law);
    CHECK(*critical_q(th, criterion_value(law, th)) == doctest::Approx(geometric_q_c(a)).epsilon(1e-9));
  }
  for (double a : {0.05, 0.1, 0.2, 0.25}) {
    auto law = ArrivalLaw::binary(a);
    auto th = find_tc(law);
    CHECK(*critical_q(th, criterion_value(law, th)) == doctest::Approx(binary_q_c(a)).epsilon(1e-9));
  }
  for (double a : {0.05, 0.2, 0.4}) {
    auto law = ArrivalLaw::poisson(a);
    auto th = find_tc(law);
    CHECK(*critical_q(th, criterion_value(law, th)) == doctest::Approx(poisson_q_c(a)).epsilon(1e-9));
  }
}

TEST_CASE("threshold curve") {
  std::vector<double> alphas;
  for (int i = 1; i <= 33; ++i) alphas.push_back(0.01 * i);
  auto rows = threshold_curve(Family::geometric, alphas, 2);
  REQUIRE(rows.size() == alphas.size());
  for (const auto& r : rows) {
    REQUIRE(r.q_c);
    CHECK(std::fabs(*r.q_c - 0.5 * (1 + std::pow(1 - 3 * r.alpha, 1.5) / (1 + 9 * r.alpha))) <= 1e-9);
  }
  auto csv = curve_to_csv(rows);
  CHECK(csv.rfind("alpha,t_c,criterion,q_c\n", 0) == 0);

  auto outside = threshold_curve(Family::binary, {0.2, 0.5}, 1);
  CHECK(outside[0].q_c);
  CHECK_FALSE(outside[1].q_c);

  auto edge = threshold_curve(Family::poisson, {std::sqrt(2.0) - 1}, 1);
  REQUIRE(edge[0].q_c);
  CHECK(*edge[0].q_c == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("binary q_c near zero behaves like 1 - c sqrt(alpha)") {
  std::vector<double> alphas;
  for (int i = 1; i <= 20; ++i) alphas.push_back(0.001 * i);
  auto rows = threshold_curve(Family::binary, alphas, 1);
  // ordinary least squares of q_c on sqrt(alpha)
  double n = static_cast<double>(rows.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    double x = std::sqrt(r.alpha), y = *r.q_c;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  for (const auto& r : rows) {
    double y = *r.q_c;
    ss_res += std::pow(y - intercept - slope * std::sqrt(r.alpha), 2);
    ss_tot += std::pow(y - sy / n, 2);
  }
  CHECK(slope < 0);
  CHECK(1 - ss_res / ss_tot > 0.99);
}

TEST_CASE("kernel parametrization") {
  auto geo = ArrivalLaw::geometric(0.2);
  CHECK(x_hat(geo, 0.0) == 0.0);
  CHECK(x_hat(geo, 1.0) == doctest::Approx(1 / 1.44).epsilon(1e-15));
  auto poi = ArrivalLaw::poisson(0.3);
  CHECK(x_hat(poi, 1.0) == doctest::Approx(1 / (1.3 * 1.3)).epsilon(1e-15));
  CHECK(F_at_one(geo, 1.0) == doctest::Approx(0.2 / 1.2).epsilon(1e-12));
  CHECK(F_at_one(geo, 0.0) == doctest::Approx(0.0));
  CHECK(code_of([&] { x_hat(geo, 1.6); }) == ErrorCode::BeyondThreshold);
  for (double Y : {0.2, 0.8, 1.3}) CHECK(invert_x_hat(geo, x_hat(geo, Y), find_tc(geo)) == doctest::Approx(Y));
}

TEST_CASE("F(x, 0) against the table") {
  auto law = ArrivalLaw::geometric(0.2);
  auto F = tutte_solve(law, 200, 200);
  for (double Y : {0.3, 0.7, 1.0}) {
    auto v = series_eval(F, x_hat(law, Y), 0.0, radius_of_F(law));
    CHECK(std::fabs(F_at_zero(law, Y) - v.value) <= std::max(v.tail_bound, 1e-12));
  }
}

TEST_CASE("radius of F") {
  auto geo = ArrivalLaw::geometric(0.2);
  double g = 10.0 / 9, dg = 0.2 * g * g;
  CHECK(radius_of_F(geo) == doctest::Approx(1.5 * g / std::pow(g + 1.5 * dg, 2)).epsilon(1e-14));
  auto bin = ArrivalLaw::binary(0.2);
  CHECK(radius_of_F(bin) >= x_hat(bin, 1.0));
}

TEST_CASE("fixed point") {
  auto geo = ArrivalLaw::geometric(0.2);
  CHECK_FALSE(solve_p_circ(geo, 0.56));
  auto fp = solve_p_circ(geo, 0.52);
  REQUIRE(fp);
  CHECK(fp->residual <= 1e-9);
  CHECK(fp->p_circ == doctest::Approx(0.795156392105).epsilon(1e-11));
  double qc = *classify(geo, 0.52).q_c;
  auto edge = solve_p_circ(geo, qc);
  REQUIRE(edge);
  CHECK(std::fabs(edge->x_circ - radius_of_F(geo)) <= 1e-6);
}

TEST_CASE("distributional recursion") {
  auto geo = ArrivalLaw::geometric(0.2);
  auto one = iterate_rde(geo, 0.52, 1, 50);
  CHECK(one.flux[0] == doctest::Approx(geo.coeff(0) + geo.coeff(1)).epsilon(1e-15));
  for (int k = 1; k < 10; ++k) CHECK(one.flux[k] == doctest::Approx(geo.coeff(k + 1)).epsilon(1e-14));

  auto r = iterate_rde(geo, 0.52, 60, 200);
  CHECK(r.visits[0] == doctest::Approx(0.795156392105).epsilon(1e-6));
  CHECK(std::fabs(r.visits[0] - solve_p_circ(geo, 0.52)->p_circ) <= 1e-6);

  // supercritical: mass at 0 keeps falling and ends below the extinction probability
  double prev = 1.0;
  for (int it : {20, 40, 60}) {
    double p0 = iterate_rde(geo, 0.56, it, 400).visits[0];
    CHECK(p0 < prev);
    prev = p0;
  }
  CHECK(prev < (1 - 0.56) / 0.56);
  CHECK(code_of([&] { iterate_rde(geo, 0.52, 60, 3); }) == ErrorCode::CutoffTooSmall);
}

TEST_CASE("stable construction") {
  auto st = construct_stable_law(1.5, 2.5);
  CHECK(st.law.G(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 0; k <= 50; ++k) CHECK(st.law.coeff(k) >= 0.0);
  CHECK(st.search.C < 0);
  CHECK(st.search.feasible > 0);
  CHECK(code_of([] { construct_stable_law(0.9, 2.5); }) == ErrorCode::BadParam);
}

TEST_CASE("tail exponent fit") {
  auto geo = ArrivalLaw::geometric(0.2);
  CHECK(code_of([&] { tail_exponent_fit(geo, 100, 150); }) == ErrorCode::InsufficientRange);
  // generic laws sit in the n^(-5/2) class
  auto fit = tail_exponent_fit(geo, 100, 300);
  CHECK(fit.slope == doctest::Approx(-2.5).epsilon(0.03));
  CHECK(fit.r_squared > 0.999);
}
