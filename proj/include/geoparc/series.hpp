#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "geoparc/arrival_law.hpp"
#include "geoparc/rational.hpp"

namespace geoparc {

enum class ScalarMode { rational, floating };

std::string_view to_string(ScalarMode mode);
ScalarMode scalar_mode_from_string(std::string_view name);

struct TutteOptions {
  ScalarMode mode = ScalarMode::floating;
  // Rational mode gives up with Overflow once a numerator or denominator
  // grows past this many bits.
  std::size_t max_bits = 1u << 16;
  // Float mode only: store c[n][k] s^n, i.e. the table of F(s x, y). Keeps
  // long tables in range when the radius in x is small.
  double x_scale = 1.0;
};

// Truncated table of c[n][k] = [x^n y^k] F(x, y), the generating function of
// fully parked trees counted by vertices (x) and outgoing cars (y).
class BivariateSeries {
 public:
  int n_max() const { return n_max_; }
  int k_max() const { return k_max_; }
  ScalarMode mode() const { return mode_; }
  double x_scale() const { return x_scale_; }
  // True when no entry with k <= k_max is affected by the y truncation and
  // the table holds every nonzero coefficient of each row.
  bool exact_in_y() const { return exact_in_y_; }

  // Stored entry, which is c[n][k] x_scale^n.
  double coeff(int n, int k) const;
  Rational exact_coeff(int n, int k) const;
  const std::vector<double>& row(int n) const { return rows_[static_cast<std::size_t>(n)]; }

  // a_n(y) = sum_k c[n][k] y^k for n = 0..n_max (a_0 = 0).
  std::vector<double> x_coefficients(double y) const;

  // Largest relative size of the y-constant term that the division by y
  // discards; zero in rational mode.
  double max_constant_residual() const { return max_residual_; }

  // "n,k,coeff" rows for every nonzero entry (stored values).
  std::string to_csv() const;

 private:
  friend BivariateSeries tutte_solve(const ArrivalLaw&, int, int, const TutteOptions&);

  int n_max_ = 0;
  int k_max_ = 0;
  double x_scale_ = 1.0;
  ScalarMode mode_ = ScalarMode::floating;
  bool exact_in_y_ = false;
  double max_residual_ = 0.0;
  std::vector<std::vector<double>> rows_;
  std::vector<std::vector<Rational>> exact_rows_;
};

// k_max large enough to make bounded-support tables exact, 4 n_max otherwise.
int default_k_max(const ArrivalLaw& law, int n_max);

// Solves Tutte's equation degree by degree in x:
//   F = x/y (G(y)/(1 - F(x,y)) - G(0)/(1 - F(x,0))).
BivariateSeries tutte_solve(const ArrivalLaw& law, int n_max, int k_max, const TutteOptions& options = {});

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;  // +inf when no bound could be formed
};

// Sums the table at (x, y) and bounds the omitted mass from the growth rate
// of the last coefficients. radius_hint, when positive, is a known radius in x
// used alongside the observed ratios. Throws NearRadius when x is within 1% of
// the estimated radius unless allow_near_radius is set, in which case the
// bound is reported as infinite.
SeriesValue series_eval(const BivariateSeries& F, double x, double y, double radius_hint = 0.0,
                        bool allow_near_radius = false);

struct FluxDistribution {
  double p_zero = 0.0;
  std::vector<double> p;  // p[k] = P(X = k + 1)
  double x_circ = 0.0;
  double deficit = 0.0;           // 1 - p_zero - sum p
  double truncation_bound = 0.0;  // bound on the mass missing from the table
};

// Law of the number of cars visiting the root from the Boltzmann cluster
// formula P(X = k+1) = (1 - q p)/q [y^k] F(q(1-q)/(1 - q p)^2, y).
FluxDistribution flux_distribution_exact(const ArrivalLaw& law, double q, double p_circ, const BivariateSeries& F);

}  // namespace geoparc
