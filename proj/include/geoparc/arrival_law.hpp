#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoparc/numeric.hpp"
#include "geoparc/rational.hpp"

namespace geoparc {

enum class Family { binary, geometric, poisson, custom, stable };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

// Plain descriptor of a car-arrival law, as read from a law file.
// For the stable family `alpha` is the exponent of the singular term.
struct LawSpec {
  Family family = Family::geometric;
  double alpha = 0.0;
  std::vector<double> coeffs;
  double rho = 0.0;
  double C = 0.0;
  std::vector<double> P;
  // Decimal text of alpha/coeffs when they were given as exact literals;
  // enables the rational coefficient mode.
  std::optional<std::string> alpha_text;
  std::vector<std::string> coeff_texts;
};

struct LawStats {
  double mean = 0.0;
  double variance = 0.0;
  double radius = 0.0;  // +inf when G is entire
};

// The car-arrival law mu with generating function G(t) = sum_k mu_k t^k.
//
// Immutable after construction. Construction validates that mu is a
// probability law with mu_0 + mu_1 < 1 and that the family parameters are in
// range; rational families also carry exact coefficients.
class ArrivalLaw {
 public:
  // Two cars with probability alpha/2, none otherwise.
  static ArrivalLaw binary(double alpha);
  static ArrivalLaw binary(const Rational& alpha);
  // Geometric law with mean alpha: mu_k = (1-p) p^k, p = alpha/(1+alpha).
  static ArrivalLaw geometric(double alpha);
  static ArrivalLaw geometric(const Rational& alpha);
  static ArrivalLaw poisson(double alpha);
  static ArrivalLaw custom(std::vector<double> coeffs);
  static ArrivalLaw custom(std::vector<Rational> coeffs);
  // G(t) = P(t) + C (1 - t/rho)^alpha_s with P given lowest degree first.
  static ArrivalLaw stable(std::vector<double> P, double C, double rho, double alpha_s);

  static ArrivalLaw from_spec(const LawSpec& spec);

  Family family() const { return family_; }
  double alpha() const { return alpha_; }
  double radius() const { return radius_; }
  bool is_exact() const { return !exact_.empty() || exact_geometric_p_.has_value(); }
  // Largest arrival with positive probability, for finite-support laws.
  std::optional<int> support_bound() const { return support_bound_; }

  double coeff(int k) const;
  std::vector<double> coeffs(int count) const;
  Rational exact_coeff(int k) const;
  std::vector<Rational> exact_coeffs(int count) const;
  // sum_{j >= k} mu_j, summed from k upwards.
  double tail_mass(int k) const;

  // G, G' or G'' at t (order 0, 1 or 2). Throws BeyondRadius for t > rho
  // and DivergentAtRadius when the value is infinite at t = rho.
  double G(double t, int order = 0) const;

  double mean() const;
  double variance() const;
  LawStats stats() const { return {mean(), variance(), radius_}; }

  const std::vector<double>& stable_polynomial() const { return poly_; }
  double stable_constant() const { return C_; }

  LawSpec spec() const;
  std::string describe() const;

 private:
  ArrivalLaw() = default;
  void validate_probability(double tolerance) const;

  Family family_ = Family::custom;
  double alpha_ = 0.0;
  double radius_ = 0.0;
  double p_ = 0.0;                       // geometric ratio
  std::vector<double> finite_;           // binary/custom coefficients
  std::vector<Rational> exact_;          // binary/custom exact coefficients
  std::optional<Rational> exact_geometric_p_;
  std::optional<Rational> exact_alpha_;
  std::optional<int> support_bound_;
  std::vector<double> poly_;             // stable P
  double C_ = 0.0;                       // stable C
};

// Inverse-CDF sampler over a coefficient table. Infinite-support laws are
// truncated where the remaining mass drops below 1e-12; the residual goes
// to the last bucket.
class ArrivalSampler {
 public:
  explicit ArrivalSampler(const ArrivalLaw& law);
  static ArrivalSampler from_coefficients(std::vector<double> coeffs);

  int operator()(RandomStream& rng) const { return from_uniform(uniform01(rng)); }
  int from_uniform(double u) const;
  const std::vector<double>& cdf() const { return cdf_; }

 private:
  ArrivalSampler() = default;
  void build(const std::vector<double>& coeffs);

  std::vector<double> cdf_;
  std::vector<double> mass_;
};

inline constexpr double kSamplerTailMass = 1e-12;

}  // namespace geoparc
