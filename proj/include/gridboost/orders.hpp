#pragma once

#include "gridboost/rational.hpp"

#include <cstdint>

namespace gridboost {

// Order bookkeeping for the boosted operator.  Conventions:
//   * nu    : target weak order of the combined operator (rational, > 0)
//   * alpha : weak order of the one-step scheme on smooth test functions
//             (1 for Euler), rational > 0
//   * l     : refinement level, 0 = the whole horizon
//   * beta  : derivative-count exponent used for smoothness accounting,
//             integer >= 1 (default ceil(2*alpha + 2) for Euler-type schemes)
//
// m_order(l, nu) is the length of the correction ladder opened at level l:
//   m = ceil( nu / ((1+alpha) l + alpha) ).
// The recursion terminates because m reaches 1 once the level is deep enough,
// and the compiler below leans on that.

int m_order(int level, const Rational& nu, const Rational& alpha);

// Sub-order requested from the refinement placed in slot i of the ladder:
//   q_i = nu + ceil( i - (1+alpha) (l+1) (i-1) ),  valid for 1 <= i <= m-1.
Rational q_order(int i, int level, const Rational& nu, const Rational& alpha);

// Total derivative budget consumed by the operator opened at (level, nu):
//   kappa = max( beta * m,  max_{1<=i<=m-1} i * kappa(level+1, q_i) ).
std::int64_t kappa_smoothness(int level, const Rational& nu, const Rational& alpha,
                              std::int64_t beta);

// Deepest refinement level the compiled operator can touch: ceil(nu/alpha).
int level_depth(const Rational& nu, const Rational& alpha);

// Derivative order entering the regularization requirement,
//   q_nu = max_{1<=i<=m(0,nu)} i * max(beta, kappa(1, q_i(0, nu))).
std::int64_t q_star(const Rational& nu, const Rational& alpha, std::int64_t beta);

// Smallest coarse-grid time at least T (n - m)/(n (m + 1)) with m = m(0, nu);
// reported as a diagnostic alongside convergence tables.
double regularization_time(const Rational& nu, const Rational& alpha, int n, double T);

// Default beta for a scheme of smooth weak order alpha.
std::int64_t default_beta(const Rational& alpha);

}  // namespace gridboost
