#pragma once

#include "khinchin/rational.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace khinchin {

/// A real number that is either known exactly (rational) or only as a double.
/// Arithmetic between two exact scalars stays exact; anything touching a
/// float scalar falls back to double arithmetic.
class Scalar {
public:
    Scalar() : Scalar(Rational(0)) {}
    Scalar(const Rational& r) : exact_(r), approx_(to_double(r)) {}  // NOLINT
    static Scalar integer(long v) { return Scalar(Rational(v)); }
    static Scalar real(double v);

    bool is_exact() const { return exact_.has_value(); }
    const Rational& exact() const;
    double value() const { return approx_; }

    bool is_zero() const { return exact_ ? *exact_ == 0 : approx_ == 0.0; }
    int sign() const;

    Scalar operator-() const;
    friend Scalar operator+(const Scalar& a, const Scalar& b);
    friend Scalar operator*(const Scalar& a, const Scalar& b);
    friend bool operator==(const Scalar& a, const Scalar& b);

    /// Integer strings or "num/den" for exact values; floats always carry a
    /// '.', 'e', "inf" or "nan" so that parse() restores the float mode.
    std::string to_string() const;

    /// Integers and "p/q" parse exact; decimal and exponent forms parse as
    /// floats. Throws std::invalid_argument on malformed text.
    static Scalar parse(std::string_view text);

private:
    std::optional<Rational> exact_;
    double approx_ = 0.0;
};

Scalar abs(const Scalar& s);

}  // namespace khinchin
