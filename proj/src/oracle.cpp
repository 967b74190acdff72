#include "gridboost/oracle.hpp"

#include "gridboost/errors.hpp"
#include "gridboost/summation.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gridboost {

void propagate_affine_step(const AffineView& av, double t, double delta, Vector& mean,
                           Matrix& cov) {
    const Matrix A = av.A(t);
    const Vector c = av.c(t);
    const Matrix B = av.B(t);
    const Matrix M = Matrix::Identity(A.rows(), A.cols()) + delta * A;
    mean = M * mean + delta * c;
    cov = M * cov * M.transpose() + delta * B * B.transpose();
}

void propagate_program(const AffineView& av, const GridProgram& prog, const GridSpec& grid,
                       Vector& mean, Matrix& cov) {
    const int depth = program_depth(prog);
    std::int64_t fine_total = 1;
    for (int k = 0; k < depth; ++k) fine_total *= grid.n;
    std::int64_t pos = 0;
    for (const auto& seg : prog.segments) {
        std::int64_t span = fine_total;
        for (int k = 0; k < seg.level; ++k) span /= grid.n;
        double delta = grid.T;
        for (int k = 0; k < seg.level; ++k) delta /= grid.n;
        for (std::int64_t s = 0; s < seg.steps; ++s) {
            const double t = grid.T * (static_cast<double>(pos) / static_cast<double>(fine_total));
            propagate_affine_step(av, t, delta, mean, cov);
            pos += span;
        }
    }
}

std::vector<double> propagate_geometric_moments(const GeometricView& gv, const GridProgram& prog,
                                                const GridSpec& grid, double x0, int degree,
                                                const std::optional<SmoothingSpec>& smoothing) {
    if (degree < 0 || degree > 4)
        throw std::invalid_argument("geometric moments: degree must be in 0..4");
    static const double znorm[] = {1.0, 0.0, 1.0, 0.0, 3.0};  // E Z^j, standard normal
    std::vector<double> mom(static_cast<std::size_t>(degree) + 1);
    for (int k = 0; k <= degree; ++k) mom[static_cast<std::size_t>(k)] = std::pow(x0, k);

    auto binom = [](int k, int j) {
        double v = 1.0;
        for (int i = 0; i < j; ++i) v = v * static_cast<double>(k - i) / static_cast<double>(i + 1);
        return v;
    };

    for (const auto& seg : prog.segments) {
        double delta = grid.T;
        for (int k = 0; k < seg.level; ++k) delta /= grid.n;
        // per-step factor moments g_k = E (1 + a d + s sqrt(d) Z)^k
        double g[5] = {1.0, 0.0, 0.0, 0.0, 0.0};
        const double u = 1.0 + gv.a * delta;
        const double w = gv.sigma * std::sqrt(delta);
        for (int k = 1; k <= degree; ++k) {
            double acc = 0.0;
            for (int j = 0; j <= k; ++j)
                acc += binom(k, j) * std::pow(u, k - j) * std::pow(w, j) * znorm[j];
            g[k] = acc;
        }
        // every step of the segment multiplies E X^k by the same factor
        for (int k = 1; k <= degree; ++k)
            mom[static_cast<std::size_t>(k)] *= std::pow(g[k], static_cast<double>(seg.steps));
    }

    if (smoothing) {
        // X + W with W ~ N(0, v), v = delta^{2 theta}: binomial mixing of moments.
        const double v = std::pow(smoothing->delta, 2.0 * smoothing->theta);
        std::vector<double> out = mom;
        for (int k = 2; k <= degree; ++k) {
            double acc = 0.0;
            for (int j = 0; j <= k; ++j) {
                const double wmom = gaussian_raw_moment(k - j, 0.0, v);
                acc += binom(k, j) * mom[static_cast<std::size_t>(j)] * wmom;
            }
            out[static_cast<std::size_t>(k)] = acc;
        }
        mom = out;
    }
    return mom;
}

bool oracle_supports(const SdeModel& model, const TestFunction& f) {
    if (f.kind == TestFunction::Kind::kSmooth) return false;
    if (model.affine) return true;
    if (model.geometric && f.kind == TestFunction::Kind::kPolynomial) return true;
    return false;
}

namespace {

double term_value(const CompiledOperator& op, const SdeModel& model, const TestFunction& f,
                  const Vector& x0, const std::optional<SmoothingSpec>& smoothing,
                  const GridProgram& prog) {
    const GridSpec grid{op.n, op.T};
    if (model.affine) {
        Vector mean = x0;
        Matrix cov = Matrix::Zero(x0.size(), x0.size());
        propagate_program(*model.affine, prog, grid, mean, cov);
        if (smoothing) {
            const double v = std::pow(smoothing->delta, 2.0 * smoothing->theta);
            cov += v * Matrix::Identity(cov.rows(), cov.cols());
        }
        return gaussian_expectation(f, mean, cov);
    }
    if (model.geometric) {
        if (f.kind != TestFunction::Kind::kPolynomial)
            throw std::invalid_argument("oracle: geometric model supports polynomial f only");
        if (x0.size() != 1) throw std::invalid_argument("oracle: geometric model is 1-d");
        const int degree = static_cast<int>(f.coeffs.size()) - 1;
        const auto mom =
            propagate_geometric_moments(*model.geometric, prog, grid, x0[0], degree, smoothing);
        const double c = f.direction.size() == 0 ? 0.0 : f.direction[0];
        double acc = 0.0, cpow = 1.0;
        for (std::size_t k = 0; k < f.coeffs.size(); ++k) {
            acc += f.coeffs[k] * cpow * mom[k];
            cpow *= c;
        }
        return acc;
    }
    throw std::invalid_argument("oracle: model is neither affine nor geometric");
}

}  // namespace

double evaluate_exact(const CompiledOperator& op, const SdeModel& model, const TestFunction& f,
                      const Vector& x0, const std::optional<SmoothingSpec>& smoothing,
                      bool parallel) {
    if (!oracle_supports(model, f))
        throw std::invalid_argument("oracle: unsupported (model, test function) pair");
    const std::size_t nterms = op.terms.size();
    std::vector<double> values(nterms);

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::size_t h = 0; h < nterms; ++h)
            values[h] = term_value(op, model, f, x0, smoothing, op.terms[h].program);
    } else {
        for (std::size_t h = 0; h < nterms; ++h)
            values[h] = term_value(op, model, f, x0, smoothing, op.terms[h].program);
    }

    // Fixed-order weighted reduction; identical for both branches above.
    NeumaierSum acc;
    for (std::size_t h = 0; h < nterms; ++h)
        acc.add(static_cast<double>(op.terms[h].coeff) * values[h]);
    const double out = acc.value();
    if (!std::isfinite(out)) throw NumericalError("oracle: non-finite operator value");
    return out;
}

}  // namespace gridboost
