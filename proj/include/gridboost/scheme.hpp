#pragma once

#include "gridboost/model.hpp"
#include "gridboost/rational.hpp"
#include "gridboost/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gridboost {

// One-step transition x' = psi(x, t, z, y): z is the innovation already scaled
// by sqrt(step), y is the step length.  psi(x, t, 0, 0) = x is part of the
// contract and is property-tested.
struct SchemeTransition {
    std::function<void(const Vector& x, double t, const Vector& z, double y, Vector& out)> psi;
    int noise_dim = 1;       // dimension of z
    Rational weak_order{1};  // alpha: weak order on smooth test functions
    // Declared regularity constants (D_r, p_r), r = 0, 1, ...  Stored for
    // reporting only; nothing here tries to verify them numerically.
    std::vector<std::pair<double, int>> declared_bounds;
};

// psi(x, t, z, y) = x + V0(x, t) y + sum_i Vi(x, t) z_i
SchemeTransition euler_transition(const SdeModel& model);

// Innovation law for the scaled z.  All kinds are centered with identity
// covariance (the truncated and mixture kinds are standardized so the moment
// contract survives the reshaping).
struct InnovationSpec {
    enum class Kind { kGaussian, kTruncatedGaussian, kMixture };
    Kind kind = Kind::kGaussian;
    int dim = 1;          // N, the number of driving components
    double radius = 3.0;  // kTruncatedGaussian: raw truncation at |z_i| <= radius
    // kMixture: the density dominates eps * Lebesgue on the ball
    // |z - center| <= ball_radius; the complementary Gaussian branch is solved
    // for so the total law stays centered with identity covariance.
    double eps = 0.1;
    double ball_radius = 1.0;
    Vector center;  // empty means the origin
};

class InnovationSampler {
  public:
    explicit InnovationSampler(InnovationSpec spec);

    const InnovationSpec& spec() const { return spec_; }
    // Uniforms consumed per draw; draw j reads stream indices
    // [j * stride, (j+1) * stride) and nothing else.
    int stride() const { return stride_; }
    bool gaussian() const { return spec_.kind == InnovationSpec::Kind::kGaussian; }

    void draw(const Stream& stream, std::uint64_t draw_index, Vector& z) const;

  private:
    InnovationSpec spec_;
    int stride_ = 1;
    double trunc_scale_ = 1.0;  // divides the raw truncated draw to restore unit variance
    double p_ball_ = 0.0;       // mixture weight of the uniform-ball branch
    Vector comp_mean_;          // Gaussian compensator branch N(mu_c, Sigma_c)
    Matrix comp_chol_;
};

// A time grid on [0, T] as a sequence of uniform blocks; a segment at `level`
// takes `steps` steps of length T / n^level.  Everything downstream works with
// these integer pairs, so grids merge and compare exactly.
struct GridSegment {
    int level = 0;
    std::int64_t steps = 0;
    friend bool operator==(const GridSegment&, const GridSegment&) = default;
    friend auto operator<=>(const GridSegment&, const GridSegment&) = default;
};

struct GridProgram {
    std::vector<GridSegment> segments;
    friend bool operator==(const GridProgram&, const GridProgram&) = default;
    friend auto operator<=>(const GridProgram&, const GridProgram&) = default;
};

struct GridSpec {
    int n = 2;       // refinement base (>= 2)
    double T = 1.0;  // horizon (> 0)
};

// Drop empty segments and merge adjacent runs at the same level.
GridProgram canonical_program(const GridProgram& prog);

// Deepest level appearing in the program (0 for an empty program).
int program_depth(const GridProgram& prog);

std::int64_t program_total_steps(const GridProgram& prog);

// Exact check that the segments tile [0, T]: sum steps * n^{-level} == 1.
bool program_spans_horizon(const GridProgram& prog, int n);

// Convenience: `count` steps at `level`.
GridProgram uniform_program(int level, std::int64_t count);

// Terminal-law smoothing: adds delta^theta * G, G ~ N(0, I_d), after the last
// step.  The Gaussian comes from its own stream so switching smoothing on or
// off never shifts the innovation draws.
struct SmoothingSpec {
    double theta = 1.0;
    double delta = 0.0;  // the base step the exponent refers to, usually T/n
};

// Uncoupled simulation: innovations for step s are draw s of `innovations`.
Vector simulate_terminal(const SchemeTransition& scheme, const GridProgram& prog,
                         const GridSpec& grid, const Vector& x0, const InnovationSampler& innov,
                         const Stream& innovations,
                         const std::optional<SmoothingSpec>& smoothing = std::nullopt,
                         const Stream* smooth_stream = nullptr);

// Coupled simulation.  `prefix` holds Brownian prefix sums on the fine grid of
// `fine_level`: row j is W_{j * T / n^fine_level}; a step at level k spanning w
// fine slots uses the increment (prefix row pos+w) - (prefix row pos) as its
// scaled innovation.  Gaussian innovations only; the aggregation would change
// the marginal law of anything else.
Matrix brownian_prefix(const Stream& tableau, int noise_dim, std::int64_t fine_steps,
                       double delta_fine);

Vector simulate_terminal_coupled(const SchemeTransition& scheme, const GridProgram& prog,
                                 const GridSpec& grid, const Vector& x0, const Matrix& prefix,
                                 int fine_level,
                                 const std::optional<SmoothingSpec>& smoothing = std::nullopt,
                                 const Stream* smooth_stream = nullptr);

}  // namespace gridboost
