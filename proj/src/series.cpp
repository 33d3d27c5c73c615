#include "geoparc/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geoparc/error.hpp"
#include "geoparc/kernel.hpp"

namespace geoparc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Branch-free two-sum accumulator; the Tutte convolutions add millions of
// terms per coefficient row.
struct FloatAcc {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double t = s + x;
    double z = t - s;
    c += (s - (t - z)) + (x - z);
    s = t;
  }
  double value() const { return s + c; }
};

struct RationalAcc {
  Rational s = 0;
  void add(const Rational& x) { s += x; }
  const Rational& value() const { return s; }
};

template <typename T>
struct Traits;

template <>
struct Traits<double> {
  using Acc = FloatAcc;
  static bool is_zero(double v) { return v == 0.0; }
  static void check(double, std::size_t) {}
  static double residual(double a, double b) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) / scale;
  }
};

template <>
struct Traits<Rational> {
  using Acc = RationalAcc;
  static bool is_zero(const Rational& v) { return sgn(v) == 0; }
  static void check(const Rational& v, std::size_t max_bits) {
    if (bit_size(v) > max_bits) {
      throw Error(ErrorCode::Overflow, "rational coefficient exceeds " + std::to_string(max_bits) + " bits");
    }
  }
  static double residual(const Rational& a, const Rational& b) { return a == b ? 0.0 : 1.0; }
};

template <typename T>
struct Solution {
  std::vector<std::vector<T>> rows;
  double residual = 0.0;
};

// g holds the arrival coefficients mu_0..mu_{n_max + k_max + 1}; bound is the
// maximal arrival for bounded support, or -1.
template <typename T>
Solution<T> solve(const std::vector<T>& g, int n_max, int k_max, int bound, std::size_t max_bits, const T& scale) {
  using Acc = typename Traits<T>::Acc;
  // F_n is needed up to degree k_max + n_max - n for later rows to be exact up
  // to degree k_max; R_m = [x^m] 1/(1 - F) up to one degree more.
  auto f_len = [&](int n) {
    long len = static_cast<long>(k_max) + n_max - n + 1;
    if (bound >= 0) len = std::min<long>(len, static_cast<long>(n) * (bound - 1) + 1);
    return static_cast<std::size_t>(std::max<long>(len, 1));
  };
  auto r_len = [&](int m) {
    long len = static_cast<long>(k_max) + n_max - m + 1;
    if (bound >= 0) len = std::min<long>(len, static_cast<long>(m) * (bound - 1) + 1);
    return static_cast<std::size_t>(std::max<long>(len, 1));
  };

  std::vector<std::vector<T>> F(static_cast<std::size_t>(n_max) + 1);
  std::vector<std::vector<T>> R(static_cast<std::size_t>(n_max) + 1);
  std::vector<T> r0(static_cast<std::size_t>(n_max) + 1);  // R(x, 0), computed on its own
  R[0] = {T(1)};
  r0[0] = T(1);
  Solution<T> out;

  for (int n = 1; n <= n_max; ++n) {
    const auto& Rm = R[static_cast<std::size_t>(n - 1)];
    // y-constant term of G(y) R_m - G(0) R(x,0)_m: vanishes when R_m[0] and
    // the separately computed column agree.
    out.residual = std::max(out.residual, Traits<T>::residual(Rm[0], r0[static_cast<std::size_t>(n - 1)]));

    auto& Fn = F[static_cast<std::size_t>(n)];
    Fn.assign(f_len(n), T(0));
    for (std::size_t k = 0; k < Fn.size(); ++k) {
      Acc acc;
      std::size_t top = std::min(k + 1, Rm.size() - 1);
      for (std::size_t j = 0; j <= top; ++j) {
        std::size_t i = k + 1 - j;
        if (i < g.size() && !Traits<T>::is_zero(g[i]) && !Traits<T>::is_zero(Rm[j])) acc.add(g[i] * Rm[j]);
      }
      Fn[k] = scale * acc.value();
      Traits<T>::check(Fn[k], max_bits);
    }

    auto& Rn = R[static_cast<std::size_t>(n)];
    Rn.assign(r_len(n), T(0));
    for (std::size_t d = 0; d < Rn.size(); ++d) {
      Acc acc;
      for (int j = 1; j <= n; ++j) {
        const auto& Fj = F[static_cast<std::size_t>(j)];
        const auto& Rr = R[static_cast<std::size_t>(n - j)];
        std::size_t i_hi = std::min(d, Fj.size() - 1);
        std::size_t i_lo = d >= Rr.size() ? d - (Rr.size() - 1) : 0;
        for (std::size_t i = i_lo; i <= i_hi; ++i) {
          if constexpr (std::is_same_v<T, double>) {
            acc.add(Fj[i] * Rr[d - i]);
          } else {
            if (!Traits<T>::is_zero(Fj[i]) && !Traits<T>::is_zero(Rr[d - i])) acc.add(Fj[i] * Rr[d - i]);
          }
        }
      }
      Rn[d] = acc.value();
      Traits<T>::check(Rn[d], max_bits);
    }

    Acc col;
    for (int j = n; j >= 1; --j) col.add(F[static_cast<std::size_t>(j)][0] * r0[static_cast<std::size_t>(n - j)]);
    r0[static_cast<std::size_t>(n)] = col.value();
  }

  out.rows.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 1; n <= n_max; ++n) {
    auto& Fn = F[static_cast<std::size_t>(n)];
    Fn.resize(std::min<std::size_t>(Fn.size(), static_cast<std::size_t>(k_max) + 1), T(0));
    out.rows[static_cast<std::size_t>(n)] = std::move(Fn);
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(ScalarMode mode) { return mode == ScalarMode::rational ? "rational" : "float"; }

ScalarMode scalar_mode_from_string(std::string_view name) {
  if (name == "rational") return ScalarMode::rational;
  if (name == "float") return ScalarMode::floating;
  throw Error(ErrorCode::BadParam, "mode must be 'rational' or 'float'");
}

double BivariateSeries::coeff(int n, int k) const {
  if (n < 1 || n > n_max_ || k < 0) return 0.0;
  const auto& r = rows_[static_cast<std::size_t>(n)];
  return static_cast<std::size_t>(k) < r.size() ? r[static_cast<std::size_t>(k)] : 0.0;
}

Rational BivariateSeries::exact_coeff(int n, int k) const {
  if (mode_ != ScalarMode::rational) throw Error(ErrorCode::BadParam, "table was computed in float mode");
  if (n < 1 || n > n_max_ || k < 0) return 0;
  const auto& r = exact_rows_[static_cast<std::size_t>(n)];
  return static_cast<std::size_t>(k) < r.size() ? r[static_cast<std::size_t>(k)] : Rational(0);
}

std::vector<double> BivariateSeries::x_coefficients(double y) const {
  std::vector<double> a(static_cast<std::size_t>(n_max_) + 1, 0.0);
  for (int n = 1; n <= n_max_; ++n) {
    const auto& r = rows_[static_cast<std::size_t>(n)];
    double acc = 0.0;
    for (std::size_t k = r.size(); k-- > 0;) acc = acc * y + r[k];
    a[static_cast<std::size_t>(n)] = acc;
  }
  return a;
}

std::string BivariateSeries::to_csv() const {
  std::ostringstream os;
  os << "n,k,coeff\n";
  for (int n = 1; n <= n_max_; ++n) {
    const auto& r = rows_[static_cast<std::size_t>(n)];
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (mode_ == ScalarMode::rational) {
        const auto& e = exact_rows_[static_cast<std::size_t>(n)][k];
        if (sgn(e) != 0) os << n << ',' << k << ',' << to_string(e) << '\n';
      } else if (r[k] != 0.0) {
        os << n << ',' << k << ',' << format_double(r[k]) << '\n';
      }
    }
  }
  return os.str();
}

int default_k_max(const ArrivalLaw& law, int n_max) {
  if (auto b = law.support_bound()) return std::max(0, n_max * (*b - 1));
  return 4 * n_max;
}

BivariateSeries tutte_solve(const ArrivalLaw& law, int n_max, int k_max, const TutteOptions& options) {
  if (n_max < 1) throw Error(ErrorCode::BadTruncation, "n_max must be >= 1");
  if (k_max < 0) throw Error(ErrorCode::BadTruncation, "k_max must be >= 0");
  BivariateSeries s;
  s.n_max_ = n_max;
  s.k_max_ = k_max;
  s.mode_ = options.mode;
  if (!(options.x_scale > 0.0) || !std::isfinite(options.x_scale)) {
    throw Error(ErrorCode::BadParam, "x_scale must be positive");
  }
  if (options.mode == ScalarMode::rational && options.x_scale != 1.0) {
    throw Error(ErrorCode::BadParam, "x_scale is only supported in float mode");
  }
  s.x_scale_ = options.x_scale;
  int bound = law.support_bound() ? *law.support_bound() : -1;
  s.exact_in_y_ = bound >= 0 && static_cast<long>(k_max) >= static_cast<long>(n_max) * (bound - 1);
  int g_len = bound >= 0 ? bound + 1 : n_max + k_max + 2;

  if (options.mode == ScalarMode::rational) {
    if (!law.is_exact()) throw Error(ErrorCode::BadParam, "rational mode needs a law with rational coefficients");
    auto sol = solve<Rational>(law.exact_coeffs(g_len), n_max, k_max, bound, options.max_bits, Rational(1));
    s.exact_rows_ = std::move(sol.rows);
    s.max_residual_ = sol.residual;
    s.rows_.resize(s.exact_rows_.size());
    for (std::size_t n = 0; n < s.exact_rows_.size(); ++n) {
      for (const auto& e : s.exact_rows_[n]) s.rows_[n].push_back(e.get_d());
    }
  } else {
    auto sol = solve<double>(law.coeffs(g_len), n_max, k_max, bound, 0, options.x_scale);
    s.rows_ = std::move(sol.rows);
    s.max_residual_ = sol.residual;
  }
  return s;
}

namespace {

// Geometric growth rate of the last nonzero entries of a, extrapolated to
// n -> infinity from the last two ratios. Zero when fewer than two nonzero
// entries exist.
double growth_rate(const std::vector<double>& a, int* last_index) {
  std::vector<int> idx;
  for (int n = static_cast<int>(a.size()) - 1; n >= 1 && idx.size() < 3; --n) {
    if (a[static_cast<std::size_t>(n)] > 0.0) idx.push_back(n);
  }
  *last_index = idx.empty() ? 0 : idx[0];
  if (idx.size() < 2) return 0.0;
  auto rate = [&](int hi, int lo) {
    return std::pow(a[static_cast<std::size_t>(hi)] / a[static_cast<std::size_t>(lo)], 1.0 / (hi - lo));
  };
  double r1 = rate(idx[0], idx[1]);
  if (idx.size() < 3) return r1;
  double r2 = rate(idx[1], idx[2]);
  double gap = static_cast<double>(idx[0] - idx[1]);
  return std::max(r1, r1 + (r1 - r2) * idx[1] / gap);
}

}  // namespace

SeriesValue series_eval(const BivariateSeries& F, double x, double y, double radius_hint, bool allow_near_radius) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::BadParam, "x must be finite and >= 0");
  if (!(y >= 0.0 && y <= 1.0)) throw Error(ErrorCode::BadParam, "y must lie in [0, 1]");
  SeriesValue out;
  if (x == 0.0) return out;

  x /= F.x_scale();
  if (radius_hint > 0.0) radius_hint /= F.x_scale();
  auto a = F.x_coefficients(y);
  CompensatedSum sum;
  double xn = 1.0;
  std::vector<double> powers(a.size(), 0.0);
  for (std::size_t n = 1; n < a.size(); ++n) {
    xn *= x;
    powers[n] = xn;
    sum += a[n] * xn;
  }
  out.value = sum.value();

  int last = 0;
  double r = growth_rate(a, &last);
  if (radius_hint > 0.0) r = std::max(r, 1.0 / radius_hint);
  double rx = r * x;
  double x_tail = 0.0;
  bool near = rx >= 0.99;
  if (near) {
    if (!allow_near_radius) {
      throw Error(ErrorCode::NearRadius, "x is within 1% of the estimated radius " + format_double(F.x_scale() / r));
    }
    x_tail = kInf;
  } else if (last > 0) {
    x_tail = 2.0 * a[static_cast<std::size_t>(last)] * powers[static_cast<std::size_t>(last)] * rx / (1.0 - rx);
  }

  // Mass beyond k_max in each row, from the decay of its last two entries.
  double y_tail = 0.0;
  if (!F.exact_in_y() && y > 0.0) {
    int K = F.k_max();
    for (int n = 1; n <= F.n_max() && std::isfinite(y_tail); ++n) {
      double cK = F.coeff(n, K);
      if (cK == 0.0) continue;
      double cK1 = K > 0 ? F.coeff(n, K - 1) : 0.0;
      double s = cK1 > 0.0 ? cK / cK1 : kInf;
      if (s * y >= 1.0) {
        y_tail = kInf;
        break;
      }
      y_tail += 2.0 * cK * std::pow(y, K) * (s * y / (1.0 - s * y)) * powers[static_cast<std::size_t>(n)];
    }
    // Rows past n_max carry their own y tails; scale by the x tail ratio.
    if (std::isfinite(y_tail) && out.value > 0.0 && std::isfinite(x_tail)) {
      y_tail *= 1.0 + x_tail / out.value;
    }
  }
  double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(out.value);
  out.tail_bound = x_tail + y_tail + roundoff;
  return out;
}

FluxDistribution flux_distribution_exact(const ArrivalLaw& law, double q, double p_circ, const BivariateSeries& F) {
  auto report = classify(law, q);
  if (report.phase != Phase::subcritical) throw Error(ErrorCode::NotSubcritical, "flux law needs a subcritical pair");
  if (!(p_circ > 0.0 && p_circ <= 1.0)) throw Error(ErrorCode::BadParam, "p_circ must lie in (0, 1]");
  FluxDistribution out;
  out.p_zero = p_circ;
  double scale = (1.0 - q * p_circ) / q;
  out.x_circ = q * (1.0 - q) / ((1.0 - q * p_circ) * (1.0 - q * p_circ));

  out.p.assign(static_cast<std::size_t>(F.k_max()) + 1, 0.0);
  std::vector<double> xn(static_cast<std::size_t>(F.n_max()) + 1, 0.0);
  double v = 1.0;
  for (int n = 1; n <= F.n_max(); ++n) {
    v *= out.x_circ / F.x_scale();
    xn[static_cast<std::size_t>(n)] = v;
  }
  for (int k = 0; k <= F.k_max(); ++k) {
    CompensatedSum s;
    for (int n = 1; n <= F.n_max(); ++n) s += F.coeff(n, k) * xn[static_cast<std::size_t>(n)];
    out.p[static_cast<std::size_t>(k)] = scale * s.value();
  }
  CompensatedSum total;
  total += out.p_zero;
  for (double p : out.p) total += p;
  out.deficit = 1.0 - total.value();

  double radius = radius_of_F(law);
  auto tail = series_eval(F, out.x_circ, 1.0, radius, true);
  out.truncation_bound = scale * tail.tail_bound;
  return out;
}

}  // namespace geoparc
