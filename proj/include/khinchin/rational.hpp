#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace khinchin {

/// Arbitrary-precision rational, always kept in canonical (reduced) form.
using Rational = mpq_class;
using Integer = mpz_class;

/// Parses "p", "-p" or "p/q". Decimal points are not accepted here.
/// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

/// Exact binary value of a finite double as a rational (every double is
/// p/2^k). Throws std::invalid_argument for inf/nan.
Rational rational_from_double(double x);

/// Always "num/den", including "n/1" for integers.
std::string to_fraction_string(const Rational& r);

double to_double(const Rational& r);

/// gcd of two nonnegative rationals: gcd(numerators)/lcm(denominators).
Rational rational_gcd(const Rational& a, const Rational& b);

inline Rational abs(const Rational& r) { return ::abs(r); }

}  // namespace khinchin
