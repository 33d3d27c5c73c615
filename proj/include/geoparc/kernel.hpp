#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoparc/arrival_law.hpp"
#include "geoparc/series.hpp"

namespace geoparc {

enum class ThresholdKind { root, dense };
enum class Phase { subcritical, supercritical, undetermined };

std::string_view to_string(ThresholdKind kind);
std::string_view to_string(Phase phase);

struct Threshold {
  double t_c = 0.0;
  ThresholdKind kind = ThresholdKind::root;
};

struct PhaseReport {
  Threshold threshold;
  double criterion = 0.0;  // t_c G(t_c) / phi(t_c)^2
  double q = 0.0;
  double q_value = 0.0;    // q (1 - q)
  Phase phase = Phase::supercritical;
  bool boundary = false;   // criterion == q(1-q) up to roundoff
  std::optional<double> q_c;
  std::string note;
};

struct FixedPoint {
  double p_circ = 0.0;
  double x_circ = 0.0;
  double residual = 0.0;
  bool boundary = false;  // root sits at the radius of F(., 1)
};

// Scan grid for the first sign change of the discriminant.
inline constexpr int kThresholdGridPoints = 4096;
inline constexpr double kThresholdGridStart = 1e-6;
// Infinite-radius laws are scanned up to this t.
inline constexpr double kThresholdGridEnd = 1e8;

// (G - t G')^2 - 2 t^2 G G''.
double discriminant(const ArrivalLaw& law, double t);
Threshold find_tc(const ArrivalLaw& law);

// (y + 1) G(y) - y (y - 1) G'(y).
double phi(const ArrivalLaw& law, double y);
double criterion_value(const ArrivalLaw& law, const Threshold& threshold);

// Largest q in (1/2, 1) with q(1-q) >= criterion, when t_c >= 1.
std::optional<double> critical_q(const Threshold& threshold, double criterion);

void check_offspring_param(double q);
PhaseReport classify(const ArrivalLaw& law, double q);
PhaseReport classify(const ArrivalLaw& law, double q, const Threshold& threshold);

// Kernel parametrization x = x_hat(Y) of the singular curve, Y in [0, t_c].
double x_hat(const ArrivalLaw& law, double Y);
double x_hat(const ArrivalLaw& law, double Y, const Threshold& threshold);
// F(x_hat(Y), 1), lower branch for Y <= 1 and upper branch above.
double F_at_one(const ArrivalLaw& law, double Y);
double F_at_one(const ArrivalLaw& law, double Y, const Threshold& threshold);
// F(x_hat(Y), 0) = 1 - G(0) G(Y) / (G(Y)^2 - Y^2 G'(Y)^2).
double F_at_zero(const ArrivalLaw& law, double Y);
// Y in [0, t_c] with x_hat(Y) = x.
double invert_x_hat(const ArrivalLaw& law, double x, const Threshold& threshold);

// Radius of convergence of x -> F(x, 1), x_hat(t_c).
double radius_of_F(const ArrivalLaw& law);
double radius_of_F(const ArrivalLaw& law, const Threshold& threshold);

// p -> (1 - q p)/q F(q(1-q)/(1 - q p)^2, 1) + p.
double characteristic_map(const ArrivalLaw& law, double q, double p, const Threshold& threshold);
std::optional<FixedPoint> solve_p_circ(const ArrivalLaw& law, double q);

struct RdeResult {
  std::vector<double> visits;  // law of X on 0..cutoff+1
  std::vector<double> flux;    // law of Z = (X - 1)+ on 0..cutoff
  double escaped = 0.0;        // P(Z > cutoff), infinite flux included
  int iters = 0;
};

// Iterates Z -> (sum_{i <= Y} Z_i + A - 1)+ from Z = 0, with Y geometric(q).
// After n steps Z is the outgoing flux of a tree cut at height n.
RdeResult iterate_rde(const ArrivalLaw& law, double q, int iters, int cutoff);

struct StableSearch {
  double rho = 0.0;
  double alpha_s = 0.0;
  double C = 0.0;
  std::vector<double> P;
  double criterion = 0.0;
  double q_c = 0.0;
  double discriminant_at_rho = 0.0;
  long candidates = 0;
  long feasible = 0;
};

struct StableConstruction {
  ArrivalLaw law;
  StableSearch search;
};

// Critical law G(t) = P(t) + C (1 - t/rho)^alpha_s with P quadratic, G(1) = 1,
// and discriminant vanishing at rho. Among feasible grid points the most
// singular (largest |C|) wins.
StableConstruction construct_stable_law(double rho, double alpha_s);

struct TailFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rms_residual = 0.0;
  int n_min = 0;
  int n_max = 0;
  int points = 0;
};

// Least-squares slope of log([x^n] F(x, 0) x_c^n) against log n.
TailFit tail_exponent_fit(const ArrivalLaw& law, int n_min, int n_max);
TailFit tail_exponent_fit(const BivariateSeries& F, double x_c, int n_min, int n_max);

struct CurveRow {
  double alpha = 0.0;
  std::optional<double> t_c;
  std::optional<double> criterion;
  std::optional<double> q_c;
};

std::vector<CurveRow> threshold_curve(Family family, const std::vector<double>& alphas, int threads = 1);
std::string curve_to_csv(const std::vector<CurveRow>& rows);

// Published closed forms, used as references for the generic pipeline.
double geometric_q_c(double alpha);
double geometric_criterion(double alpha);
double binary_q_c(double alpha);
double poisson_q_c(double alpha);

}  // namespace geoparc
