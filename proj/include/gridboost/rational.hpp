#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gridboost {

// Exact rational arithmetic on int64.  The order bookkeeping below needs exact
// ceilings of expressions like nu / ((1+alpha)l + alpha); doing this in doubles
// misfires exactly at the integer boundaries we care about, so everything stays
// in p/q form until the final ceil.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;  // > 0 after normalization

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::domain_error("rational: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num * b.num, a.den * b.den);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num == 0) throw std::domain_error("rational: division by zero");
        return Rational(a.num * b.den, a.den * b.num);
    }
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num * b.den < b.num * a.den;
    }
    friend bool operator<=(const Rational& a, const Rational& b) {
        return a.num * b.den <= b.num * a.den;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

    bool is_integer() const { return den == 1; }
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// ceil(num/den), exact.
inline std::int64_t ceil_of(const Rational& r) {
    const std::int64_t q = r.num / r.den;
    return (r.num % r.den != 0 && r.num > 0) ? q + 1 : q;
}

// Accepts "3", "-3", "3/2", and plain decimals like "1.5" (converted exactly
// via powers of ten).  Anything else is rejected.
Rational parse_rational(const std::string& text);

// Canonical form: "3" or "3/2".
std::string to_string(const Rational& r);

}  // namespace gridboost
