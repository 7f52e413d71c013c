#include "khinchin/scalar.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace khinchin {

Scalar Scalar::real(double v) {
    Scalar s;
    s.exact_.reset();
    s.approx_ = v;
    return s;
}

const Rational& Scalar::exact() const {
    if (!exact_) throw std::logic_error("scalar has no exact value");
    return *exact_;
}

int Scalar::sign() const {
    if (exact_) return sgn(*exact_);
    return (approx_ > 0) - (approx_ < 0);
}

Scalar Scalar::operator-() const {
    if (exact_) return Scalar(Rational(-*exact_));
    return real(-approx_);
}

Scalar operator+(const Scalar& a, const Scalar& b) {
    if (a.exact_ && b.exact_) return Scalar(Rational(*a.exact_ + *b.exact_));
    return Scalar::real(a.approx_ + b.approx_);
}

Scalar operator*(const Scalar& a, const Scalar& b) {
    if (a.exact_ && b.exact_) return Scalar(Rational(*a.exact_ * *b.exact_));
    return Scalar::real(a.approx_ * b.approx_);
}

bool operator==(const Scalar& a, const Scalar& b) {
    if (a.exact_ && b.exact_) return *a.exact_ == *b.exact_;
    if (a.exact_ || b.exact_) return false;
    return a.approx_ == b.approx_;
}

Scalar abs(const Scalar& s) { return s.sign() < 0 ? -s : s; }

std::string Scalar::to_string() const {
    if (exact_) {
        if (exact_->get_den() == 1) return exact_->get_num().get_str();
        return to_fraction_string(*exact_);
    }
    if (std::isnan(approx_)) return "nan";
    if (std::isinf(approx_)) return approx_ > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, approx_);
    std::string out(buf, end);
    if (out.find_first_of(".e") == std::string::npos) out += ".0";
    return out;
}

Scalar Scalar::parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty number");
    if (text.find_first_of(".eEin") == std::string_view::npos) {
        return Scalar(parse_rational(text));
    }
    double v = 0.0;
    std::string_view body = text;
    if (!body.empty() && body[0] == '+') body.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size()) {
        throw std::invalid_argument("malformed number '" + std::string(text) + "'");
    }
    return real(v);
}

}  // namespace khinchin
