#pragma once

#include "gridboost/compiler.hpp"
#include "gridboost/model.hpp"
#include "gridboost/scheme.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace gridboost {

// How replicates cover the signed terms.
//   kEnumerate : every replicate runs every term and returns the full signed
//                combination; lowest variance per replicate, cost ~ terms.
//   kSample    : every replicate picks one term h with probability
//                |c_h| / sum|c| and returns sign(c_h) * sum|c| * f; unbiased.
//   kStratified: like kSample but replicates are allocated per refinement
//                depth (largest-remainder on the |c| mass of each depth).
enum class Strategy { kEnumerate, kSample, kStratified };

enum class CouplingMode { kAuto, kOn, kOff };

struct EstimatorConfig {
    std::uint64_t replicates = 100000;
    Strategy strategy = Strategy::kEnumerate;
    // Coupling runs all terms of a replicate off one shared Brownian tableau
    // at the operator's finest level, so coarse innovations are aggregates of
    // fine ones.  Marginals are unchanged only for Gaussian innovations;
    // kAuto enables it exactly in that case (enumerate strategy only).
    CouplingMode coupling = CouplingMode::kAuto;
    std::uint64_t seed = 0;
    int threads = 0;  // OpenMP width; 0 = runtime default
    std::optional<SmoothingSpec> smoothing;
};

struct EstimatorResult {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t replicates = 0;
    std::vector<std::uint64_t> per_term_samples;
    bool coupled = false;
    double wall_seconds = 0.0;
};

// Monte Carlo value of the compiled operator applied to f at x0.
//
// Replicates are processed in fixed-size chunks; each chunk accumulates
// serially into its own compensated slot and chunks are merged in index
// order, so the result is bit-identical for every thread count (and equal to
// estimate_serial).  All draws are counter-addressed by
// (seed, purpose, term/stratum, replicate), never by execution order.
EstimatorResult estimate(const CompiledOperator& op, const SdeModel& model,
                         const SchemeTransition& scheme, const TestFunction& f, const Vector& x0,
                         const InnovationSpec& innovations, const EstimatorConfig& cfg);

// Plain-loop reference implementation (no OpenMP region); kept for tests and
// the kernel benchmark.  Must agree with estimate() bit-for-bit.
EstimatorResult estimate_serial(const CompiledOperator& op, const SdeModel& model,
                                const SchemeTransition& scheme, const TestFunction& f,
                                const Vector& x0, const InnovationSpec& innovations,
                                const EstimatorConfig& cfg);

// Checks that `refined` equals `coarse` except for exactly one step of
// `coarse` (at some level k) replaced by n steps at level k+1.  Throws
// std::invalid_argument otherwise.
void validate_refinement_pair(const GridProgram& refined, const GridProgram& coarse, int n);

// One replicate of the coupled difference: both programs simulate off the
// same Brownian tableau; returns the two terminal states.
std::pair<Vector, Vector> coupled_pair_sample(const SchemeTransition& scheme, const GridSpec& grid,
                                              const GridProgram& refined,
                                              const GridProgram& coarse, const Vector& x0,
                                              std::uint64_t seed, std::uint64_t replicate);

}  // namespace gridboost
