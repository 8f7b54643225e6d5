#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace fairsplit {

using Rational = mpq_class;

// Parses "0.25", "-3", "1e-3" or "3/4" into an exact rational.
Rational parse_rational(std::string_view text);

// Exact value of a finite double (every double is a dyadic rational).
Rational exact_rational(double value);

inline double to_double(const Rational& q) { return q.get_d(); }

inline Rational abs_value(const Rational& q) { return q < 0 ? Rational(-q) : q; }

std::string to_string(const Rational& q);

}  // namespace fairsplit
