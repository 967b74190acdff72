#include "gridboost/scheme.hpp"

#include "gridboost/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace gridboost {

namespace {

constexpr double kPi = 3.14159265358979323846;

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// Volume of the N-ball of radius r: pi^{N/2} r^N / Gamma(N/2 + 1).
double ball_volume(int n, double r) {
    return std::pow(kPi, 0.5 * n) * std::pow(r, n) / std::tgamma(0.5 * n + 1.0);
}

}  // namespace

SchemeTransition euler_transition(const SdeModel& model) {
    SchemeTransition s;
    s.weak_order = Rational(1);
    s.noise_dim = model.noise_dim;
    const int d = model.dim;
    const int nw = model.noise_dim;
    if (static_cast<int>(model.diffusion.size()) != nw)
        throw std::invalid_argument("euler_transition: diffusion count != noise_dim");
    s.psi = [model, d, nw](const Vector& x, double t, const Vector& z, double y, Vector& out) {
        Vector buf(d);
        model.drift.value(x, t, buf);
        out = x + y * buf;
        for (int i = 0; i < nw; ++i) {
            model.diffusion[static_cast<std::size_t>(i)].value(x, t, buf);
            out += z[i] * buf;
        }
    };
    return s;
}

InnovationSampler::InnovationSampler(InnovationSpec spec) : spec_(std::move(spec)) {
    const int n = spec_.dim;
    if (n < 1) throw std::invalid_argument("innovation: dim must be >= 1");
    switch (spec_.kind) {
        case InnovationSpec::Kind::kGaussian:
            stride_ = n;
            break;
        case InnovationSpec::Kind::kTruncatedGaussian: {
            stride_ = n;
            const double R = spec_.radius;
            if (!(R > 0.0)) throw std::invalid_argument("innovation: radius must be > 0");
            // var of N(0,1) conditioned to [-R, R]: 1 - 2 R phi(R) / (2 Phi(R) - 1)
            const double mass = 2.0 * normal_cdf(R) - 1.0;
            const double var = 1.0 - 2.0 * R * std_normal_pdf(R) / mass;
            if (!(var > 0.0))
                throw std::invalid_argument("innovation: truncation radius too small");
            trunc_scale_ = 1.0 / std::sqrt(var);
            break;
        }
        case InnovationSpec::Kind::kMixture: {
            stride_ = n + 2;  // branch pick + N gaussians + radial uniform
            if (spec_.center.size() == 0) spec_.center = Vector::Zero(n);
            if (spec_.center.size() != n)
                throw std::invalid_argument("innovation: center dimension mismatch");
            if (!(spec_.eps > 0.0) || !(spec_.ball_radius > 0.0))
                throw std::invalid_argument("innovation: eps and ball_radius must be > 0");
            p_ball_ = spec_.eps * ball_volume(n, spec_.ball_radius);
            if (!(p_ball_ < 1.0))
                throw std::invalid_argument("innovation: eps * ball volume must be < 1");
            // Match mean 0 and second moment I overall.  With U uniform on the
            // ball around z*: E U = z*, E UU^T = r^2/(N+2) I + z* z*^T.
            const double p = p_ball_;
            const Vector& zc = spec_.center;
            comp_mean_ = -(p / (1.0 - p)) * zc;
            const double r2 = spec_.ball_radius * spec_.ball_radius;
            Matrix second = Matrix::Identity(n, n);
            second -= p * (r2 / (n + 2)) * Matrix::Identity(n, n);
            second -= p * (zc * zc.transpose());
            Matrix cov = second / (1.0 - p) - comp_mean_ * comp_mean_.transpose();
            Eigen::LLT<Matrix> llt(cov);
            if (llt.info() != Eigen::Success)
                throw std::invalid_argument(
                    "innovation: mixture cannot be moment-matched (compensator covariance "
                    "not positive definite); reduce eps or ball_radius");
            comp_chol_ = llt.matrixL();
            break;
        }
    }
}

void InnovationSampler::draw(const Stream& stream, std::uint64_t draw_index, Vector& z) const {
    const int n = spec_.dim;
    z.resize(n);
    const std::uint64_t base = draw_index * static_cast<std::uint64_t>(stride_);
    switch (spec_.kind) {
        case InnovationSpec::Kind::kGaussian:
            for (int i = 0; i < n; ++i) z[i] = stream.normal_at(base + i);
            return;
        case InnovationSpec::Kind::kTruncatedGaussian: {
            const double R = spec_.radius;
            const double lo = normal_cdf(-R), hi = normal_cdf(R);
            for (int i = 0; i < n; ++i) {
                const double u = stream.uniform_at(base + i);
                z[i] = normal_quantile(lo + u * (hi - lo)) * trunc_scale_;
            }
            return;
        }
        case InnovationSpec::Kind::kMixture: {
            const double pick = stream.uniform_at(base);
            Vector g(n);
            for (int i = 0; i < n; ++i) g[i] = stream.normal_at(base + 1 + i);
            if (pick < p_ball_) {
                // uniform on the ball: gaussian direction, radius r * u^{1/N}
                double norm = g.norm();
                if (norm == 0.0) {
                    g.setZero();
                    g[0] = 1.0;
                    norm = 1.0;
                }
                const double u = stream.uniform_at(base + n + 1);
                const double rad =
                    spec_.ball_radius * std::pow(u, 1.0 / static_cast<double>(n));
                z = spec_.center + (rad / norm) * g;
            } else {
                z = comp_mean_ + comp_chol_ * g;
            }
            return;
        }
    }
}

GridProgram canonical_program(const GridProgram& prog) {
    GridProgram out;
    for (const auto& seg : prog.segments) {
        if (seg.steps == 0) continue;
        if (seg.steps < 0) throw std::invalid_argument("grid program: negative step count");
        if (!out.segments.empty() && out.segments.back().level == seg.level)
            out.segments.back().steps += seg.steps;
        else
            out.segments.push_back(seg);
    }
    return out;
}

int program_depth(const GridProgram& prog) {
    int depth = 0;
    for (const auto& seg : prog.segments) depth = std::max(depth, seg.level);
    return depth;
}

std::int64_t program_total_steps(const GridProgram& prog) {
    std::int64_t total = 0;
    for (const auto& seg : prog.segments) total += seg.steps;
    return total;
}

bool program_spans_horizon(const GridProgram& prog, int n) {
    const int depth = program_depth(prog);
    std::int64_t scale = 1;  // n^depth
    for (int k = 0; k < depth; ++k) scale *= n;
    std::int64_t acc = 0;
    for (const auto& seg : prog.segments) {
        std::int64_t unit = scale;
        for (int k = 0; k < seg.level; ++k) unit /= n;
        acc += seg.steps * unit;
    }
    return acc == scale;
}

GridProgram uniform_program(int level, std::int64_t count) {
    GridProgram p;
    p.segments.push_back({level, count});
    return p;
}

namespace {

// Shared walk over the program; `provide` fills the scaled innovation for the
// step with index `step_idx` starting at fine position `pos` spanning `span`
// fine slots.
template <typename Provide>
Vector run_path(const SchemeTransition& scheme, const GridProgram& prog, const GridSpec& grid,
                const Vector& x0, int walk_level, Provide&& provide,
                const std::optional<SmoothingSpec>& smoothing, const Stream* smooth_stream) {
    if (grid.n < 2) throw std::invalid_argument("grid: n must be >= 2");
    if (!(grid.T > 0.0)) throw std::invalid_argument("grid: T must be > 0");
    std::int64_t fine_total = 1;  // n^walk_level
    for (int k = 0; k < walk_level; ++k) fine_total *= grid.n;

    Vector x = x0;
    Vector z;
    Vector next(x0.size());
    std::int64_t pos = 0;
    std::uint64_t step_idx = 0;
    for (const auto& seg : prog.segments) {
        if (seg.level > walk_level)
            throw std::invalid_argument("grid program deeper than the walk resolution");
        std::int64_t span = fine_total;
        for (int k = 0; k < seg.level; ++k) span /= grid.n;
        double delta = grid.T;
        for (int k = 0; k < seg.level; ++k) delta /= grid.n;
        for (std::int64_t s = 0; s < seg.steps; ++s) {
            const double t =
                grid.T * (static_cast<double>(pos) / static_cast<double>(fine_total));
            provide(step_idx, pos, span, delta, z);
            scheme.psi(x, t, z, delta, next);
            if (!next.allFinite())
                throw NumericalError("simulate_terminal: non-finite state after step " +
                                     std::to_string(step_idx));
            x.swap(next);
            pos += span;
            ++step_idx;
        }
    }
    if (smoothing) {
        if (smooth_stream == nullptr)
            throw std::invalid_argument("smoothing requested without a smoothing stream");
        if (!(smoothing->theta > 0.0) || !(smoothing->delta > 0.0))
            throw std::invalid_argument("smoothing: theta and delta must be > 0");
        const double scale = std::pow(smoothing->delta, smoothing->theta);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x[i] += scale * smooth_stream->normal_at(static_cast<std::uint64_t>(i));
    }
    return x;
}

}  // namespace

Vector simulate_terminal(const SchemeTransition& scheme, const GridProgram& prog,
                         const GridSpec& grid, const Vector& x0, const InnovationSampler& innov,
                         const Stream& innovations, const std::optional<SmoothingSpec>& smoothing,
                         const Stream* smooth_stream) {
    Vector raw;
    return run_path(
        scheme, prog, grid, x0, program_depth(prog),
        [&](std::uint64_t step_idx, std::int64_t, std::int64_t, double delta, Vector& z) {
            innov.draw(innovations, step_idx, raw);
            z = std::sqrt(delta) * raw;
        },
        smoothing, smooth_stream);
}

Matrix brownian_prefix(const Stream& tableau, int noise_dim, std::int64_t fine_steps,
                       double delta_fine) {
    Matrix prefix(fine_steps + 1, noise_dim);
    prefix.row(0).setZero();
    const double sd = std::sqrt(delta_fine);
    for (std::int64_t j = 0; j < fine_steps; ++j) {
        for (int i = 0; i < noise_dim; ++i) {
            const std::uint64_t idx =
                static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(noise_dim) +
                static_cast<std::uint64_t>(i);
            prefix(j + 1, i) = prefix(j, i) + sd * tableau.normal_at(idx);
        }
    }
    return prefix;
}

Vector simulate_terminal_coupled(const SchemeTransition& scheme, const GridProgram& prog,
                                 const GridSpec& grid, const Vector& x0, const Matrix& prefix,
                                 int fine_level, const std::optional<SmoothingSpec>& smoothing,
                                 const Stream* smooth_stream) {
    if (program_depth(prog) > fine_level)
        throw std::invalid_argument("coupled simulation: program deeper than tableau");
    std::int64_t fine_total = 1;
    for (int k = 0; k < fine_level; ++k) fine_total *= grid.n;
    if (prefix.rows() != fine_total + 1)
        throw std::invalid_argument("coupled simulation: tableau size does not match fine level");
    return run_path(
        scheme, prog, grid, x0, fine_level,
        [&](std::uint64_t, std::int64_t pos, std::int64_t span, double, Vector& z) {
            z = (prefix.row(pos + span) - prefix.row(pos)).transpose();
        },
        smoothing, smooth_stream);
}

}  // namespace gridboost
