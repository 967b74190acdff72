#include "gridboost/orders.hpp"

#include <algorithm>
#include <stdexcept>

namespace gridboost {

namespace {

void check_positive(const Rational& r, const char* what) {
    if (r.num <= 0) throw std::domain_error(std::string("orders: ") + what + " must be > 0");
}

}  // namespace

int m_order(int level, const Rational& nu, const Rational& alpha) {
    check_positive(nu, "nu");
    check_positive(alpha, "alpha");
    if (level < 0) throw std::domain_error("orders: level must be >= 0");
    const Rational denom = (Rational(1) + alpha) * Rational(level) + alpha;
    const std::int64_t m = ceil_of(nu / denom);
    return static_cast<int>(std::max<std::int64_t>(m, 1));
}

Rational q_order(int i, int level, const Rational& nu, const Rational& alpha) {
    const int m = m_order(level, nu, alpha);
    if (i < 1 || i > m - 1)
        throw std::domain_error("orders: q_order index out of range 1..m-1");
    const Rational inner =
        Rational(i) - (Rational(1) + alpha) * Rational(level + 1) * Rational(i - 1);
    return nu + Rational(ceil_of(inner));
}

std::int64_t kappa_smoothness(int level, const Rational& nu, const Rational& alpha,
                              std::int64_t beta) {
    if (beta < 1) throw std::domain_error("orders: beta must be >= 1");
    const int m = m_order(level, nu, alpha);
    std::int64_t best = beta * m;
    for (int i = 1; i <= m - 1; ++i) {
        const Rational qi = q_order(i, level, nu, alpha);
        best = std::max(best, i * kappa_smoothness(level + 1, qi, alpha, beta));
    }
    return best;
}

int level_depth(const Rational& nu, const Rational& alpha) {
    check_positive(nu, "nu");
    check_positive(alpha, "alpha");
    return static_cast<int>(ceil_of(nu / alpha));
}

std::int64_t q_star(const Rational& nu, const Rational& alpha, std::int64_t beta) {
    const int m = m_order(0, nu, alpha);
    std::int64_t best = 0;
    for (int i = 1; i <= m; ++i) {
        // Same formula as q_order but evaluated up to i = m inclusive, which is
        // how the regularization exponent is assembled.
        const Rational inner = Rational(i) - (Rational(1) + alpha) * Rational(i - 1);
        const Rational qi = nu + Rational(ceil_of(inner));
        best = std::max(best, i * std::max(beta, kappa_smoothness(1, qi, alpha, beta)));
    }
    return best;
}

double regularization_time(const Rational& nu, const Rational& alpha, int n, double T) {
    if (n < 2) throw std::domain_error("orders: n must be >= 2");
    const std::int64_t m = m_order(0, nu, alpha);
    // smallest k with k/n >= (n-m)/(n(m+1)), i.e. k = ceil((n-m)/(m+1)), clamped to >= 0
    const std::int64_t k = std::max<std::int64_t>(0, ceil_of(Rational(n - m, m + 1)));
    return T * static_cast<double>(k) / static_cast<double>(n);
}

std::int64_t default_beta(const Rational& alpha) {
    return ceil_of(Rational(2) * alpha + Rational(2));
}

}  // namespace gridboost
