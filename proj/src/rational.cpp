#include "geoparc/rational.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "geoparc/error.hpp"

namespace geoparc {

namespace {

Rational pow10(long exponent) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  if (exponent >= 0) return Rational(p);
  Rational r(1, 1);
  r /= Rational(p);
  return r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::BadParam, "empty rational literal");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational r(std::string(text.substr(0, slash)) + "/" + std::string(text.substr(slash + 1)));
    r.canonicalize();
    return r;
  }
  bool negative = false;
  std::size_t pos = 0;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  long exponent = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      any_digit = true;
      if (seen_point) --exponent;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c == 'e' || c == 'E') {
      long e = 0;
      auto tail = text.substr(pos + 1);
      if (!tail.empty() && tail.front() == '+') tail.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), e);
      if (ec != std::errc() || ptr != tail.data() + tail.size()) {
        throw Error(ErrorCode::BadParam, "bad exponent in '" + std::string(text) + "'");
      }
      exponent += e;
      pos = text.size();
      break;
    } else {
      throw Error(ErrorCode::BadParam, "bad rational literal '" + std::string(text) + "'");
    }
  }
  if (!any_digit) throw Error(ErrorCode::BadParam, "bad rational literal '" + std::string(text) + "'");
  Rational r{mpz_class(digits)};
  r *= pow10(exponent);
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::BadParam, "non-finite value has no rational form");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error(ErrorCode::BadParam, "cannot format value");
  return parse_rational(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

std::string to_string(const Rational& value) { return value.get_str(); }

std::size_t bit_size(const Rational& value) {
  return std::max(mpz_sizeinbase(value.get_num_mpz_t(), 2), mpz_sizeinbase(value.get_den_mpz_t(), 2));
}

}  // namespace geoparc
