#include "geoparc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "geoparc/error.hpp"
#include "geoparc/numeric.hpp"

namespace geoparc {

namespace {

constexpr double kBoundaryTolerance = 1e-14;
constexpr double kRadicandClamp = 1e-12;
constexpr double kFixedPointTolerance = 1e-12;
constexpr double kRdeCutoffMass = 1e-6;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_Y(double Y, const Threshold& th) {
  if (!(Y >= 0.0)) throw Error(ErrorCode::BadParam, "Y must be >= 0");
  if (Y > th.t_c * (1.0 + 1e-12)) {
    throw Error(ErrorCode::BeyondThreshold, "Y = " + fmt(Y) + " exceeds t_c = " + fmt(th.t_c));
  }
}

}  // namespace

std::string_view to_string(ThresholdKind kind) { return kind == ThresholdKind::root ? "root" : "dense"; }

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::subcritical: return "subcritical";
    case Phase::supercritical: return "supercritical";
    case Phase::undetermined: return "undetermined";
  }
  return "undetermined";
}

double discriminant(const ArrivalLaw& law, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::BadParam, "t must be >= 0");
  double g = law.G(t, 0);
  double g1 = law.G(t, 1);
  double g2 = law.G(t, 2);
  double a = g - t * g1;
  return a * a - 2.0 * t * t * g * g2;
}

Threshold find_tc(const ArrivalLaw& law) {
  double rho = law.radius();
  bool finite_radius = std::isfinite(rho);
  double lo = kThresholdGridStart;
  double hi = finite_radius ? rho * (1.0 - 1e-9) : kThresholdGridEnd;
  auto D = [&](double t) { return discriminant(law, t); };

  double prev_t = 0.0;
  double step = std::pow(hi / lo, 1.0 / (kThresholdGridPoints - 1));
  for (int i = 0; i < kThresholdGridPoints; ++i) {
    double t = i == kThresholdGridPoints - 1 ? hi : lo * std::pow(step, i);
    double d = D(t);
    if (std::isnan(d) || std::isinf(d)) {
      throw Error(ErrorCode::BadParam, "discriminant not finite at t = " + fmt(t) + " before any root");
    }
    if (d == 0.0) return {t, ThresholdKind::root};
    if (d < 0.0) return {bisect(D, prev_t, t), ThresholdKind::root};
    prev_t = t;
  }
  if (!finite_radius) throw Error(ErrorCode::BadParam, "discriminant has no root below " + fmt(hi));
  // No sign change inside the disk: dense phase, provided G'' is finite at rho.
  double d_rho = D(rho);
  if (d_rho < 0.0) return {bisect(D, prev_t, rho), ThresholdKind::root};
  if (d_rho == 0.0) return {rho, ThresholdKind::root};
  return {rho, ThresholdKind::dense};
}

double phi(const ArrivalLaw& law, double y) {
  return (y + 1.0) * law.G(y, 0) - y * (y - 1.0) * law.G(y, 1);
}

double criterion_value(const ArrivalLaw& law, const Threshold& threshold) {
  double t = threshold.t_c;
  double p = phi(law, t);
  return t * law.G(t, 0) / (p * p);
}

std::optional<double> critical_q(const Threshold& threshold, double criterion) {
  if (threshold.t_c < 1.0 - 1e-9) return std::nullopt;
  if (criterion > 0.25 + 1e-12) return std::nullopt;
  double r = std::max(0.0, 1.0 - 4.0 * criterion);
  return 0.5 * (1.0 + std::sqrt(r));
}

void check_offspring_param(double q) {
  if (!(q > 0.5 && q < 1.0)) throw Error(ErrorCode::BadParam, "q out of range: need 1/2 < q < 1, got " + fmt(q));
}

PhaseReport classify(const ArrivalLaw& law, double q) {
  check_offspring_param(q);
  Threshold th;
  try {
    th = find_tc(law);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DivergentAtRadius) throw;
    PhaseReport r;
    r.q = q;
    r.q_value = q * (1.0 - q);
    r.threshold = {law.radius(), ThresholdKind::dense};
    r.criterion = std::numeric_limits<double>::quiet_NaN();
    r.phase = law.radius() <= 1.0 ? Phase::supercritical : Phase::undetermined;
    r.note = "criterion undefined: G or a derivative diverges at the radius";
    return r;
  }
  return classify(law, q, th);
}

PhaseReport classify(const ArrivalLaw& law, double q, const Threshold& threshold) {
  check_offspring_param(q);
  PhaseReport r;
  r.threshold = threshold;
  r.q = q;
  r.q_value = q * (1.0 - q);
  r.criterion = criterion_value(law, threshold);
  r.q_c = critical_q(threshold, r.criterion);
  if (threshold.t_c <= 1.0) {
    r.phase = Phase::supercritical;
    r.note = "t_c <= 1";
    return r;
  }
  double gap = r.criterion - r.q_value;
  r.boundary = std::fabs(gap) <= kBoundaryTolerance;
  r.phase = gap <= kBoundaryTolerance ? Phase::subcritical : Phase::supercritical;
  return r;
}

double x_hat(const ArrivalLaw& law, double Y) { return x_hat(law, Y, find_tc(law)); }

double x_hat(const ArrivalLaw& law, double Y, const Threshold& threshold) {
  check_Y(Y, threshold);
  Y = std::min(Y, threshold.t_c);
  double g = law.G(Y, 0);
  double h = g + Y * law.G(Y, 1);
  return Y * g / (h * h);
}

double F_at_one(const ArrivalLaw& law, double Y) { return F_at_one(law, Y, find_tc(law)); }

double F_at_one(const ArrivalLaw& law, double Y, const Threshold& threshold) {
  check_Y(Y, threshold);
  Y = std::min(Y, threshold.t_c);
  if (Y == 0.0) return 0.0;
  double g = law.G(Y, 0);
  double h = g + Y * law.G(Y, 1);
  double p = phi(law, Y);
  double rad = 1.0 - 4.0 * Y * g / (p * p);
  if (rad < -kRadicandClamp) {
    throw Error(ErrorCode::NegativeRadicand, "radicand " + fmt(rad) + " at Y = " + fmt(Y));
  }
  double s = std::sqrt(std::max(rad, 0.0));
  if (Y <= 1.0) return 1.0 - p * (1.0 + s) / (2.0 * h);
  return 1.0 + p * (s - 1.0) / (2.0 * h);
}

double F_at_zero(const ArrivalLaw& law, double Y) {
  check_Y(Y, find_tc(law));
  double g = law.G(Y, 0);
  double g1 = law.G(Y, 1);
  return 1.0 - law.G(0.0, 0) * g / (g * g - Y * Y * g1 * g1);
}

double invert_x_hat(const ArrivalLaw& law, double x, const Threshold& threshold) {
  if (!(x >= 0.0)) throw Error(ErrorCode::BadParam, "x must be >= 0");
  if (x == 0.0) return 0.0;
  double x_c = x_hat(law, threshold.t_c, threshold);
  if (x > x_c * (1.0 + 1e-12)) throw Error(ErrorCode::BeyondRadius, "x = " + fmt(x) + " beyond radius " + fmt(x_c));
  if (x >= x_c) return threshold.t_c;
  return bisect([&](double Y) { return x_hat(law, Y, threshold) - x; }, 0.0, threshold.t_c);
}

double radius_of_F(const ArrivalLaw& law) { return radius_of_F(law, find_tc(law)); }

double radius_of_F(const ArrivalLaw& law, const Threshold& threshold) {
  return x_hat(law, threshold.t_c, threshold);
}

double characteristic_map(const ArrivalLaw& law, double q, double p, const Threshold& threshold) {
  double d = 1.0 - q * p;
  double x = q * (1.0 - q) / (d * d);
  double Y = invert_x_hat(law, x, threshold);
  return d / q * F_at_one(law, Y, threshold) + p;
}

std::optional<FixedPoint> solve_p_circ(const ArrivalLaw& law, double q) {
  check_offspring_param(q);
  Threshold th = find_tc(law);
  if (th.t_c <= 1.0) return std::nullopt;
  double x_c = radius_of_F(law, th);
  // x(p) = q(1-q)/(1-qp)^2 increases with p; p_max puts x at the radius.
  double p_max = (1.0 - std::sqrt(q * (1.0 - q) / x_c)) / q;
  if (!(p_max > 0.0)) return std::nullopt;
  p_max = std::min(p_max, 1.0);
  auto M = [&](double p) {
    double d = 1.0 - q * p;
    double x = std::min(q * (1.0 - q) / (d * d), x_c);
    return d / q * F_at_one(law, invert_x_hat(law, x, th), th) + p - 1.0;
  };
  auto finish = [&](double p, bool boundary) {
    FixedPoint fp;
    fp.p_circ = p;
    double d = 1.0 - q * p;
    fp.x_circ = std::min(q * (1.0 - q) / (d * d), x_c);
    fp.residual = M(p);
    fp.boundary = boundary;
    return fp;
  };
  double at_max = M(p_max);
  if (std::fabs(at_max) <= kFixedPointTolerance) return finish(p_max, p_max < 1.0);
  if (at_max < 0.0) return std::nullopt;
  if (M(0.0) >= 0.0) return std::nullopt;
  return finish(bisect(M, 0.0, p_max), false);
}

RdeResult iterate_rde(const ArrivalLaw& law, double q, int iters, int cutoff) {
  check_offspring_param(q);
  if (iters < 1) throw Error(ErrorCode::BadParam, "iters must be >= 1");
  if (cutoff < 1) throw Error(ErrorCode::BadParam, "cutoff must be >= 1");
  auto c = static_cast<std::size_t>(cutoff);
  auto mu = law.coeffs(cutoff + 2);
  // tail[j] = P(A >= j), summed from the top so small tails keep their digits.
  std::vector<double> tail(c + 3, 0.0);
  tail[c + 2] = law.tail_mass(cutoff + 2);
  for (std::size_t j = c + 2; j-- > 0;) tail[j] = tail[j + 1] + mu[j];

  std::vector<double> Z(c + 1, 0.0);
  Z[0] = 1.0;
  double escaped = 0.0;
  std::vector<double> S(c + 2, 0.0);
  std::vector<double> X(c + 2, 0.0);
  for (int it = 0; it < iters; ++it) {
    // S = sum of Y i.i.d. copies of Z with P(Y = j) = q^j (1 - q); pgf
    // (1 - q)/(1 - q f_Z). Infinite copies are excluded from the finite part.
    double denom = 1.0 - q * Z[0];
    S[0] = (1.0 - q) / denom;
    for (std::size_t n = 1; n < S.size(); ++n) {
      CompensatedSum acc;
      for (std::size_t j = 1; j <= std::min(n, c); ++j) acc += Z[j] * S[n - j];
      S[n] = q * acc.value() / denom;
    }
    CompensatedSum s_mass;
    for (double v : S) s_mass += v;
    double s_escaped = std::max(0.0, 1.0 - s_mass.value());

    CompensatedSum x_escaped;
    x_escaped += s_escaped;
    for (std::size_t n = 0; n < X.size(); ++n) {
      CompensatedSum acc;
      for (std::size_t s = 0; s <= n; ++s) acc += S[s] * mu[n - s];
      X[n] = acc.value();
    }
    for (std::size_t s = 0; s < S.size(); ++s) x_escaped += S[s] * tail[c + 2 - s];

    Z[0] = X[0] + X[1];
    for (std::size_t n = 1; n <= c; ++n) Z[n] = X[n + 1];
    escaped = x_escaped.value();
  }

  RdeResult out;
  out.visits = X;
  out.flux = Z;
  out.escaped = escaped;
  out.iters = iters;
  if (escaped > kRdeCutoffMass && classify(law, q).phase == Phase::subcritical) {
    throw Error(ErrorCode::CutoffTooSmall, "mass " + fmt(escaped) + " beyond cutoff " + std::to_string(cutoff));
  }
  return out;
}

namespace {

struct StableCandidate {
  double C;
  double p0, p1, p2;
  double criterion;
};

double stable_G(const StableCandidate& s, double rho, double a, double t, int order) {
  double u = 1.0 - t / rho;
  if (order == 0) return s.p0 + s.p1 * t + s.p2 * t * t + s.C * std::pow(u, a);
  if (order == 1) return s.p1 + 2.0 * s.p2 * t - s.C * a / rho * std::pow(u, a - 1.0);
  return 2.0 * s.p2 + s.C * a * (a - 1.0) / (rho * rho) * std::pow(u, a - 2.0);
}

double stable_discriminant(const StableCandidate& s, double rho, double a, double t) {
  double g = stable_G(s, rho, a, t, 0);
  double g1 = stable_G(s, rho, a, t, 1);
  double g2 = stable_G(s, rho, a, t, 2);
  double d = g - t * g1;
  return d * d - 2.0 * t * t * g * g2;
}

}  // namespace

StableConstruction construct_stable_law(double rho, double alpha_s) {
  if (!(rho > 1.0) || !std::isfinite(rho)) throw Error(ErrorCode::BadParam, "rho must be > 1");
  if (!(alpha_s > 2.0 && alpha_s < 3.0)) throw Error(ErrorCode::BadParam, "alpha_s must lie in (2, 3)");
  const double a = alpha_s;
  const double r = rho;
  const int c_points = 60;
  const int p2_points = 200;
  const int disc_points = 400;

  std::vector<double> grid(disc_points);
  for (int i = 0; i < disc_points; ++i) {
    grid[static_cast<std::size_t>(i)] = 1e-6 * std::pow(r * (1.0 - 1e-9) / 1e-6, static_cast<double>(i) / (disc_points - 1));
  }

  StableSearch search;
  search.rho = rho;
  search.alpha_s = alpha_s;
  std::optional<StableCandidate> best;
  for (int ci = 0; ci < c_points; ++ci) {
    double C = -std::pow(10.0, -3.0 + (std::log10(5.0) + 3.0) * ci / (c_points - 1));
    for (int pi = 1; pi <= p2_points; ++pi) {
      double p2 = static_cast<double>(pi) / p2_points;
      // p0 + p1 + p2 = 1 - C (1 - 1/rho)^a, and discriminant(rho) = 0, which
      // is quadratic in p0 once p1 is eliminated.
      double s = 1.0 - C * std::pow(1.0 - 1.0 / r, a) - p2;
      double B = -2.0 * p2 * r * r - 4.0 * r * r * p2 * (1.0 - r);
      double Cq = (p2 * r * r) * (p2 * r * r) - 4.0 * r * r * p2 * (s * r + p2 * r * r);
      double disc = B * B - 4.0 * Cq;
      if (disc < 0.0) continue;
      for (int sign : {1, -1}) {
        ++search.candidates;
        StableCandidate cand{C, (-B + sign * std::sqrt(disc)) / 2.0, 0.0, p2, 0.0};
        cand.p1 = s - cand.p0;
        double m0 = cand.p0 + C;
        double m1 = cand.p1 - C * a / r;
        double m2 = cand.p2 + C * a * (a - 1.0) / (2.0 * r * r);
        if (m0 < 0.0 || m1 < 0.0 || m2 < 0.0 || m0 + m1 >= 1.0) continue;
        bool positive = true;
        for (double t : grid) {
          if (!(stable_discriminant(cand, r, a, t) > 0.0)) {
            positive = false;
            break;
          }
        }
        if (!positive) continue;
        double g = stable_G(cand, r, a, r, 0);
        double ph = (r + 1.0) * g - r * (r - 1.0) * stable_G(cand, r, a, r, 1);
        cand.criterion = r * g / (ph * ph);
        if (cand.criterion > 0.25) continue;
        ++search.feasible;
        if (!best || cand.C < best->C) best = cand;
      }
    }
  }
  if (!best) {
    std::ostringstream os;
    os << "no admissible (P, C) for rho=" << rho << ", alpha_s=" << alpha_s << " among " << search.candidates
       << " candidates";
    throw Error(ErrorCode::Infeasible, os.str());
  }
  search.C = best->C;
  search.P = {best->p0, best->p1, best->p2};
  search.discriminant_at_rho = stable_discriminant(*best, r, a, r);
  ArrivalLaw law = ArrivalLaw::stable(search.P, search.C, rho, alpha_s);
  Threshold th = find_tc(law);
  search.criterion = criterion_value(law, th);
  search.q_c = critical_q(th, search.criterion).value_or(std::numeric_limits<double>::quiet_NaN());
  return {law, search};
}

TailFit tail_exponent_fit(const ArrivalLaw& law, int n_min, int n_max) {
  if (n_min < 1 || n_max - n_min < 100) {
    throw Error(ErrorCode::InsufficientRange, "need 1 <= n_min and n_max - n_min >= 100");
  }
  double x_c = radius_of_F(law);
  TutteOptions opts;
  opts.x_scale = x_c;
  auto F = tutte_solve(law, n_max, 0, opts);
  return tail_exponent_fit(F, x_c, n_min, n_max);
}

TailFit tail_exponent_fit(const BivariateSeries& F, double x_c, int n_min, int n_max) {
  if (n_min < 1 || n_max - n_min < 100) {
    throw Error(ErrorCode::InsufficientRange, "need 1 <= n_min and n_max - n_min >= 100");
  }
  if (n_max > F.n_max()) throw Error(ErrorCode::InsufficientRange, "table shorter than n_max");
  double log_ratio = std::log(x_c / F.x_scale());
  std::vector<double> xs;
  std::vector<double> ys;
  for (int n = n_min; n <= n_max; ++n) {
    double c = F.coeff(n, 0);
    if (c <= 0.0) continue;
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(c) + n * log_ratio);
  }
  TailFit fit;
  fit.n_min = n_min;
  fit.n_max = n_max;
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 3) throw Error(ErrorCode::InsufficientRange, "fewer than 3 nonzero coefficients in range");
  double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.rms_residual = std::sqrt(ss_res / n);
  return fit;
}

namespace {

ArrivalLaw family_law(Family family, double alpha) {
  switch (family) {
    case Family::binary: return ArrivalLaw::binary(alpha);
    case Family::geometric: return ArrivalLaw::geometric(alpha);
    case Family::poisson: return ArrivalLaw::poisson(alpha);
    default: throw Error(ErrorCode::BadParam, "threshold curves need a one-parameter family");
  }
}

CurveRow curve_row(Family family, double alpha) {
  CurveRow row;
  row.alpha = alpha;
  try {
    auto law = family_law(family, alpha);
    auto th = find_tc(law);
    row.t_c = th.t_c;
    row.criterion = criterion_value(law, th);
    row.q_c = critical_q(th, *row.criterion);
  } catch (const Error&) {
    // Out-of-domain points keep empty fields.
  }
  return row;
}

}  // namespace

std::vector<CurveRow> threshold_curve(Family family, const std::vector<double>& alphas, int threads) {
  if (family != Family::binary && family != Family::geometric && family != Family::poisson) {
    throw Error(ErrorCode::BadParam, "threshold curves need family binary, geometric or poisson");
  }
  std::vector<CurveRow> rows(alphas.size());
  int workers = std::max(1, std::min<int>(threads, static_cast<int>(alphas.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < alphas.size(); ++i) rows[i] = curve_row(family, alphas[i]);
    return rows;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < alphas.size(); i += static_cast<std::size_t>(workers)) {
        rows[i] = curve_row(family, alphas[i]);
      }
    });
  }
  for (auto& t : pool) t.join();
  return rows;
}

std::string curve_to_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha,t_c,criterion,q_c\n";
  for (const auto& r : rows) {
    os << r.alpha << ',';
    if (r.t_c) os << *r.t_c;
    os << ',';
    if (r.criterion) os << *r.criterion;
    os << ',';
    if (r.q_c) os << *r.q_c;
    os << '\n';
  }
  return os.str();
}

double geometric_criterion(double alpha) {
  double d = 1.0 + 9.0 * alpha;
  return 27.0 * alpha * (1.0 + alpha) * (1.0 + alpha) / (4.0 * d * d);
}

double geometric_q_c(double alpha) {
  return 0.5 * (1.0 + std::pow(1.0 - 3.0 * alpha, 1.5) / (1.0 + 9.0 * alpha));
}

double binary_q_c(double alpha) {
  const double s3 = std::sqrt(3.0);
  double bracket = 3.0 + std::sqrt(2.0 * s3 - 3.0) * std::sqrt((2.0 - alpha) / alpha);
  double inner = 6.0 * std::sqrt(2.0 * s3 + 3.0) / (std::sqrt(alpha * (2.0 - alpha)) * bracket * bracket);
  return 0.5 * (1.0 + std::sqrt(1.0 - inner));
}

double poisson_q_c(double alpha) {
  const double c = std::sqrt(2.0) - 1.0;
  double d = alpha + 3.0 - 2.0 * std::sqrt(2.0);
  double inner = 2.0 * c * alpha * std::exp(alpha - c) / (d * d);
  return 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - inner)));
}

}  // namespace geoparc
