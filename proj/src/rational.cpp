#include "gridboost/rational.hpp"

#include <cctype>
#include <cstdlib>

namespace gridboost {

namespace {

std::int64_t parse_int(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("rational: empty integer field");
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("rational: cannot parse '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("rational: trailing junk in '" + s + "'");
    return v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
    }
    const auto dot = text.find('.');
    if (dot != std::string::npos) {
        const std::string head = text.substr(0, dot), tail = text.substr(dot + 1);
        if (tail.empty() || tail.size() > 9)
            throw std::invalid_argument("rational: bad decimal '" + text + "'");
        for (char c : tail)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw std::invalid_argument("rational: bad decimal '" + text + "'");
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < tail.size(); ++i) scale *= 10;
        const std::int64_t whole = parse_int(head.empty() || head == "-" ? head + "0" : head);
        const std::int64_t frac = parse_int(tail);
        const bool neg = !head.empty() && head[0] == '-';
        return Rational(whole * scale + (neg ? -frac : frac), scale);
    }
    return Rational(parse_int(text));
}

std::string to_string(const Rational& r) {
    if (r.den == 1) return std::to_string(r.num);
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

}  // namespace gridboost
