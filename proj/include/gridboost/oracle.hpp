#pragma once

#include "gridboost/compiler.hpp"
#include "gridboost/model.hpp"

#include <optional>

namespace gridboost {

// Exact law propagation for the Euler chain on models with affine drift and
// state-independent diffusion: one step of length delta at time t maps
//   mean |-> (I + delta A(t)) mean + delta c(t)
//   cov  |-> (I + delta A(t)) cov (I + delta A(t))^T + delta B(t) B(t)^T
void propagate_affine_step(const AffineView& av, double t, double delta, Vector& mean,
                           Matrix& cov);

// Push (mean, cov) through every step of a grid program.
void propagate_program(const AffineView& av, const GridProgram& prog, const GridSpec& grid,
                       Vector& mean, Matrix& cov);

// Discrete moments E[X_k^j], j = 0..degree, of the Euler chain for the
// geometric model, propagated multiplicatively (valid because each factor
// 1 + a delta + sigma sqrt(delta) Z is independent of the running state).
std::vector<double> propagate_geometric_moments(const GeometricView& gv, const GridProgram& prog,
                                                const GridSpec& grid, double x0, int degree,
                                                const std::optional<SmoothingSpec>& smoothing);

// Exact expectation of the compiled operator applied to f at x0.  Works for
// models carrying an AffineView (indicator or polynomial f) or a
// GeometricView (polynomial f only).  Smoothing adds delta^theta G to the
// terminal state, i.e. delta^{2 theta} I to every terminal covariance.
//
// The term loop is OpenMP-parallel when `parallel` is set; either way the
// reduction runs in term order through a compensated sum, so the serial and
// parallel paths return bit-identical values.
double evaluate_exact(const CompiledOperator& op, const SdeModel& model, const TestFunction& f,
                      const Vector& x0, const std::optional<SmoothingSpec>& smoothing = {},
                      bool parallel = true);

// True when evaluate_exact can handle this (model, f) pair.
bool oracle_supports(const SdeModel& model, const TestFunction& f);

}  // namespace gridboost
