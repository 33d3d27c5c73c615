#include "geoparc/arrival_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geoparc/error.hpp"

namespace geoparc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSumTolerance = 1e-12;

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::BadParam, std::string(what) + " must be finite");
}

double poly_eval(const std::vector<double>& c, double t, int order) {
  double acc = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= order; --k) {
    double factor = 1.0;
    for (int j = 0; j < order; ++j) factor *= static_cast<double>(k - j);
    acc = acc * t + factor * c[static_cast<std::size_t>(k)];
  }
  return acc;
}

// b_k = binom(a, k) (-1/rho)^k for k < count.
std::vector<double> singular_coeffs(double a, double rho, int count) {
  std::vector<double> b(static_cast<std::size_t>(std::max(count, 0)));
  double value = 1.0;
  for (int k = 0; k < count; ++k) {
    if (k > 0) value *= (a - (k - 1)) / k * (-1.0 / rho);
    b[static_cast<std::size_t>(k)] = value;
  }
  return b;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::binary: return "binary";
    case Family::geometric: return "geometric";
    case Family::poisson: return "poisson";
    case Family::custom: return "custom";
    case Family::stable: return "stable";
  }
  return "custom";
}

Family family_from_string(std::string_view name) {
  if (name == "binary") return Family::binary;
  if (name == "geometric") return Family::geometric;
  if (name == "poisson") return Family::poisson;
  if (name == "custom") return Family::custom;
  if (name == "stable") return Family::stable;
  throw Error(ErrorCode::BadParam, "unknown family '" + std::string(name) + "'");
}

ArrivalLaw ArrivalLaw::binary(double alpha) {
  check_finite(alpha, "alpha");
  if (alpha < 0.0 || alpha > 1.0) throw Error(ErrorCode::BadParam, "binary alpha must lie in [0, 1]");
  if (alpha == 0.0) throw Error(ErrorCode::TrivialLaw, "binary alpha = 0 puts all mass on 0");
  ArrivalLaw law;
  law.family_ = Family::binary;
  law.alpha_ = alpha;
  law.radius_ = kInf;
  law.finite_ = {1.0 - alpha / 2.0, 0.0, alpha / 2.0};
  law.support_bound_ = 2;
  law.validate_probability(kSumTolerance);
  return law;
}

ArrivalLaw ArrivalLaw::binary(const Rational& alpha) {
  if (alpha < 0 || alpha > 1) throw Error(ErrorCode::BadParam, "binary alpha must lie in [0, 1]");
  if (alpha == 0) throw Error(ErrorCode::TrivialLaw, "binary alpha = 0 puts all mass on 0");
  ArrivalLaw law = binary(alpha.get_d());
  Rational half = alpha / 2;
  law.exact_ = {Rational(1) - half, Rational(0), half};
  law.exact_alpha_ = alpha;
  law.finite_ = {law.exact_[0].get_d(), 0.0, law.exact_[2].get_d()};
  return law;
}

ArrivalLaw ArrivalLaw::geometric(double alpha) {
  check_finite(alpha, "alpha");
  if (alpha <= 0.0) throw Error(ErrorCode::BadParam, "geometric alpha must be > 0");
  ArrivalLaw law;
  law.family_ = Family::geometric;
  law.alpha_ = alpha;
  law.p_ = alpha / (1.0 + alpha);
  law.radius_ = (1.0 + alpha) / alpha;
  return law;
}

ArrivalLaw ArrivalLaw::geometric(const Rational& alpha) {
  if (alpha <= 0) throw Error(ErrorCode::BadParam, "geometric alpha must be > 0");
  ArrivalLaw law = geometric(alpha.get_d());
  Rational p = alpha / (Rational(1) + alpha);
  p.canonicalize();
  law.exact_geometric_p_ = p;
  law.exact_alpha_ = alpha;
  law.p_ = p.get_d();
  return law;
}

ArrivalLaw ArrivalLaw::poisson(double alpha) {
  check_finite(alpha, "alpha");
  if (alpha <= 0.0) throw Error(ErrorCode::BadParam, "poisson alpha must be > 0");
  ArrivalLaw law;
  law.family_ = Family::poisson;
  law.alpha_ = alpha;
  law.radius_ = kInf;
  return law;
}

ArrivalLaw ArrivalLaw::custom(std::vector<double> coeffs) {
  if (coeffs.empty()) throw Error(ErrorCode::NonProbability, "empty coefficient list");
  for (double c : coeffs) {
    check_finite(c, "coefficient");
    if (c < 0.0) throw Error(ErrorCode::NonProbability, "negative coefficient");
  }
  while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
  ArrivalLaw law;
  law.family_ = Family::custom;
  law.radius_ = kInf;
  law.finite_ = std::move(coeffs);
  law.support_bound_ = static_cast<int>(law.finite_.size()) - 1;
  law.validate_probability(kSumTolerance);
  return law;
}

ArrivalLaw ArrivalLaw::custom(std::vector<Rational> coeffs) {
  if (coeffs.empty()) throw Error(ErrorCode::NonProbability, "empty coefficient list");
  Rational total = 0;
  for (const auto& c : coeffs) {
    if (c < 0) throw Error(ErrorCode::NonProbability, "negative coefficient");
    total += c;
  }
  if (total != 1) throw Error(ErrorCode::NonProbability, "coefficients sum to " + to_string(total) + ", not 1");
  while (coeffs.size() > 1 && coeffs.back() == 0) coeffs.pop_back();
  std::vector<double> approx;
  approx.reserve(coeffs.size());
  for (const auto& c : coeffs) approx.push_back(c.get_d());
  if (coeffs.size() == 1 || coeffs[0] + coeffs[1] == 1) {
    throw Error(ErrorCode::TrivialLaw, "mu_0 + mu_1 = 1: every car parks where it arrives");
  }
  ArrivalLaw law = custom(std::move(approx));
  law.exact_ = std::move(coeffs);
  return law;
}

ArrivalLaw ArrivalLaw::stable(std::vector<double> P, double C, double rho, double alpha_s) {
  check_finite(C, "C");
  check_finite(rho, "rho");
  check_finite(alpha_s, "alpha");
  for (double c : P) check_finite(c, "P coefficient");
  if (!(C < 0.0)) throw Error(ErrorCode::BadParam, "stable family needs C < 0");
  if (!(alpha_s > 2.0 && alpha_s < 3.0)) throw Error(ErrorCode::BadParam, "stable exponent must lie in (2, 3)");
  if (!(rho > 1.0)) throw Error(ErrorCode::BadParam, "stable radius must be > 1");
  ArrivalLaw law;
  law.family_ = Family::stable;
  law.alpha_ = alpha_s;
  law.radius_ = rho;
  law.poly_ = std::move(P);
  law.C_ = C;
  // Coefficients past deg P are C binom(a,k)(-1/rho)^k, nonnegative for k >= 3;
  // check the low ones (where P contributes) and a stretch beyond.
  int check = std::max<int>(51, static_cast<int>(law.poly_.size()) + 1);
  auto mu = law.coeffs(check);
  for (int k = 0; k < check; ++k) {
    if (mu[static_cast<std::size_t>(k)] < -1e-15) {
      throw Error(ErrorCode::NonProbability, "stable law has negative coefficient mu_" + std::to_string(k));
    }
  }
  law.validate_probability(kSumTolerance);
  return law;
}

ArrivalLaw ArrivalLaw::from_spec(const LawSpec& spec) {
  switch (spec.family) {
    case Family::binary:
      if (spec.alpha_text) return binary(parse_rational(*spec.alpha_text));
      return binary(spec.alpha);
    case Family::geometric:
      if (spec.alpha_text) return geometric(parse_rational(*spec.alpha_text));
      return geometric(spec.alpha);
    case Family::poisson:
      return poisson(spec.alpha);
    case Family::custom:
      if (!spec.coeff_texts.empty() && spec.coeff_texts.size() == spec.coeffs.size()) {
        std::vector<Rational> exact;
        exact.reserve(spec.coeff_texts.size());
        for (const auto& t : spec.coeff_texts) exact.push_back(parse_rational(t));
        Rational total = 0;
        for (const auto& e : exact) total += e;
        // Decimal literals that only sum to 1 in floating point fall back to float mode.
        if (total == 1) return custom(std::move(exact));
      }
      return custom(spec.coeffs);
    case Family::stable:
      return stable(spec.P, spec.C, spec.rho, spec.alpha);
  }
  throw Error(ErrorCode::BadParam, "unknown family");
}

void ArrivalLaw::validate_probability(double tolerance) const {
  double g1 = G(1.0, 0);
  if (std::fabs(g1 - 1.0) > tolerance) {
    std::ostringstream os;
    os << "coefficients sum to " << g1 << ", not 1";
    throw Error(ErrorCode::NonProbability, os.str());
  }
  if (coeff(0) + coeff(1) >= 1.0 - 1e-15) {
    throw Error(ErrorCode::TrivialLaw, "mu_0 + mu_1 = 1: every car parks where it arrives");
  }
}

double ArrivalLaw::coeff(int k) const {
  if (k < 0) return 0.0;
  switch (family_) {
    case Family::binary:
    case Family::custom:
      return k < static_cast<int>(finite_.size()) ? finite_[static_cast<std::size_t>(k)] : 0.0;
    case Family::geometric:
      return (1.0 - p_) * std::pow(p_, k);
    case Family::poisson:
      return std::exp(-alpha_ + k * std::log(alpha_) - std::lgamma(k + 1.0));
    case Family::stable: {
      auto b = singular_coeffs(alpha_, radius_, k + 1);
      double p = k < static_cast<int>(poly_.size()) ? poly_[static_cast<std::size_t>(k)] : 0.0;
      return p + C_ * b.back();
    }
  }
  return 0.0;
}

std::vector<double> ArrivalLaw::coeffs(int count) const {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)), 0.0);
  switch (family_) {
    case Family::geometric: {
      double v = 1.0 - p_;
      for (auto& c : out) {
        c = v;
        v *= p_;
      }
      break;
    }
    case Family::poisson: {
      double v = std::exp(-alpha_);
      for (int k = 0; k < count; ++k) {
        out[static_cast<std::size_t>(k)] = v;
        v *= alpha_ / (k + 1);
      }
      break;
    }
    case Family::stable: {
      auto b = singular_coeffs(alpha_, radius_, count);
      for (int k = 0; k < count; ++k) {
        double p = k < static_cast<int>(poly_.size()) ? poly_[static_cast<std::size_t>(k)] : 0.0;
        out[static_cast<std::size_t>(k)] = p + C_ * b[static_cast<std::size_t>(k)];
      }
      break;
    }
    default:
      for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = coeff(k);
  }
  return out;
}

Rational ArrivalLaw::exact_coeff(int k) const {
  if (!is_exact()) throw Error(ErrorCode::BadParam, "law has no exact rational coefficients");
  if (k < 0) return 0;
  if (exact_geometric_p_) {
    Rational v = Rational(1) - *exact_geometric_p_;
    for (int j = 0; j < k; ++j) v *= *exact_geometric_p_;
    return v;
  }
  return k < static_cast<int>(exact_.size()) ? exact_[static_cast<std::size_t>(k)] : Rational(0);
}

std::vector<Rational> ArrivalLaw::exact_coeffs(int count) const {
  if (!is_exact()) throw Error(ErrorCode::BadParam, "law has no exact rational coefficients");
  std::vector<Rational> out(static_cast<std::size_t>(std::max(count, 0)));
  if (exact_geometric_p_) {
    Rational v = Rational(1) - *exact_geometric_p_;
    for (auto& c : out) {
      c = v;
      v *= *exact_geometric_p_;
    }
    return out;
  }
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = exact_coeff(k);
  return out;
}

double ArrivalLaw::tail_mass(int k) const {
  if (k <= 0) return 1.0;
  switch (family_) {
    case Family::binary:
    case Family::custom: {
      CompensatedSum s;
      for (std::size_t j = static_cast<std::size_t>(k); j < finite_.size(); ++j) s += finite_[j];
      return s.value();
    }
    case Family::geometric:
      return std::pow(p_, k);
    case Family::poisson: {
      double term = coeff(k);
      CompensatedSum s;
      for (int j = k; j < k + 100000; ++j) {
        s += term;
        if (term < 1e-18 * s.value() && j > alpha_) break;
        term *= alpha_ / (j + 1);
      }
      return s.value();
    }
    case Family::stable: {
      int count = k + 64;
      for (;;) {
        auto mu = coeffs(count);
        if (mu.back() < 1e-19 * mu[static_cast<std::size_t>(k)] || count > k + 200000) {
          CompensatedSum s;
          for (int j = count - 1; j >= k; --j) s += mu[static_cast<std::size_t>(j)];
          return s.value();
        }
        count *= 2;
      }
    }
  }
  return 0.0;
}

double ArrivalLaw::G(double t, int order) const {
  if (order < 0 || order > 2) throw Error(ErrorCode::BadParam, "derivative order must be 0, 1 or 2");
  if (std::isnan(t)) throw Error(ErrorCode::BadParam, "t is NaN");
  if (t > radius_) throw Error(ErrorCode::BeyondRadius, "t beyond the radius of convergence");
  switch (family_) {
    case Family::binary:
    case Family::custom:
      return poly_eval(finite_, t, order);
    case Family::geometric: {
      if (t == radius_) throw Error(ErrorCode::DivergentAtRadius, "geometric G diverges at its radius");
      double d = 1.0 + alpha_ - alpha_ * t;
      if (order == 0) return 1.0 / d;
      if (order == 1) return alpha_ / (d * d);
      return 2.0 * alpha_ * alpha_ / (d * d * d);
    }
    case Family::poisson: {
      double e = std::exp(alpha_ * (t - 1.0));
      if (order == 0) return e;
      if (order == 1) return alpha_ * e;
      return alpha_ * alpha_ * e;
    }
    case Family::stable: {
      double u = 1.0 - t / radius_;
      double a = alpha_;
      double p = poly_eval(poly_, t, order);
      if (order == 0) return p + C_ * std::pow(u, a);
      if (order == 1) return p - C_ * a / radius_ * std::pow(u, a - 1.0);
      return p + C_ * a * (a - 1.0) / (radius_ * radius_) * std::pow(u, a - 2.0);
    }
  }
  return 0.0;
}

double ArrivalLaw::mean() const {
  switch (family_) {
    case Family::geometric:
    case Family::poisson:
      return alpha_;
    default:
      return G(1.0, 1);
  }
}

double ArrivalLaw::variance() const {
  switch (family_) {
    case Family::geometric:
      return alpha_ * (1.0 + alpha_);
    case Family::poisson:
      return alpha_;
    default: {
      double m = G(1.0, 1);
      return G(1.0, 2) + m - m * m;
    }
  }
}

LawSpec ArrivalLaw::spec() const {
  LawSpec s;
  s.family = family_;
  s.alpha = alpha_;
  if (exact_alpha_) s.alpha_text = to_string(*exact_alpha_);
  if (family_ == Family::custom) {
    s.coeffs = finite_;
    for (const auto& e : exact_) s.coeff_texts.push_back(to_string(e));
  }
  if (family_ == Family::stable) {
    s.rho = radius_;
    s.C = C_;
    s.P = poly_;
  }
  return s;
}

std::string ArrivalLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(family_);
  switch (family_) {
    case Family::custom:
      os << "[";
      for (std::size_t i = 0; i < finite_.size(); ++i) os << (i ? "," : "") << finite_[i];
      os << "]";
      break;
    case Family::stable:
      os << "(alpha_s=" << alpha_ << ",rho=" << radius_ << ",C=" << C_ << ")";
      break;
    default:
      os << "(alpha=" << alpha_ << ")";
  }
  return os.str();
}

ArrivalSampler::ArrivalSampler(const ArrivalLaw& law) {
  std::vector<double> mass;
  if (auto bound = law.support_bound()) {
    mass = law.coeffs(*bound + 1);
  } else {
    int count = 16;
    for (;;) {
      if (law.tail_mass(count) < kSamplerTailMass || count > (1 << 20)) break;
      count *= 2;
    }
    // Shrink to the first index whose remaining tail is below the threshold.
    int lo = count / 2;
    int hi = count;
    while (lo + 1 < hi) {
      int mid = (lo + hi) / 2;
      if (law.tail_mass(mid) < kSamplerTailMass) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    mass = law.coeffs(hi);
  }
  build(mass);
}

ArrivalSampler ArrivalSampler::from_coefficients(std::vector<double> coeffs) {
  if (coeffs.empty()) throw Error(ErrorCode::NonProbability, "empty coefficient table");
  for (double c : coeffs) {
    if (!(c >= 0.0)) throw Error(ErrorCode::NonProbability, "negative coefficient");
  }
  ArrivalSampler s;
  s.build(coeffs);
  return s;
}

void ArrivalSampler::build(const std::vector<double>& coeffs) {
  mass_ = coeffs;
  cdf_.resize(coeffs.size());
  CompensatedSum acc;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    acc += coeffs[k];
    cdf_[k] = acc.value();
  }
  cdf_.back() = 1.0;
}

int ArrivalSampler::from_uniform(double u) const {
  // Linear scan: the tables are short and most of the mass sits at small k.
  std::size_t k = 0;
  const std::size_t last = cdf_.size() - 1;
  while (k < last && (u > cdf_[k] || mass_[k] == 0.0)) ++k;
  return static_cast<int>(k);
}

}  // namespace geoparc
