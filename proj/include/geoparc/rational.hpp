#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <string>
#include <string_view>

namespace geoparc {

using Rational = mpq_class;

// Parses "0.2", "-1.5e-3", "3/7" or an integer into an exact rational.
Rational parse_rational(std::string_view text);

// Exact rational whose decimal expansion is the shortest round-trip form of
// `value`, so 0.2 becomes 1/5 rather than the binary double nearest to it.
Rational rational_from_double(double value);

std::string to_string(const Rational& value);

// Largest bit length among numerator and denominator.
std::size_t bit_size(const Rational& value);

}  // namespace geoparc
