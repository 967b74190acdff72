#include "gridboost/estimator.hpp"

#include "gridboost/errors.hpp"
#include "gridboost/summation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gridboost {

namespace {

constexpr std::uint64_t kChunk = 4096;  // replicates per reduction slot

struct Stratum {
    std::vector<std::size_t> terms;  // indices into op.terms
    double weight = 0.0;             // sum of |coeff| over the stratum
    std::uint64_t replicates = 0;
    std::uint64_t offset = 0;  // global replicate id of this stratum's first replicate
    std::vector<double> cum;   // cumulative |coeff| for selection
};

struct ChunkJob {
    int stratum = -1;  // -1: unstratified
    std::uint64_t begin = 0, end = 0;
};

struct ChunkAccum {
    double sum = 0.0, sumsq = 0.0;
    bool failed = false;
    std::string error;
};

// Largest-remainder allocation of M replicates proportional to weights,
// with every positive-weight cell getting at least one.
std::vector<std::uint64_t> allocate_largest_remainder(const std::vector<double>& w,
                                                      std::uint64_t M) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<std::uint64_t> out(w.size(), 0);
    std::vector<std::pair<double, std::size_t>> rem;
    std::uint64_t used = 0;
    for (std::size_t g = 0; g < w.size(); ++g) {
        const double share = static_cast<double>(M) * w[g] / total;
        out[g] = static_cast<std::uint64_t>(std::floor(share));
        used += out[g];
        rem.emplace_back(share - std::floor(share), g);
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // deterministic tie-break
    });
    for (std::size_t k = 0; used < M; ++k, ++used) out[rem[k % rem.size()].second] += 1;
    // floor can leave empty cells; steal from the largest allocation
    for (std::size_t g = 0; g < w.size(); ++g) {
        if (out[g] > 0) continue;
        const auto big = std::max_element(out.begin(), out.end());
        if (*big < 2) throw ConfigError("estimator: too few replicates to cover all strata");
        (*big)--;
        out[g]++;
    }
    return out;
}

std::size_t pick_index(const std::vector<double>& cum, double u) {
    const double target = u * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

class Runner {
  public:
    Runner(const CompiledOperator& op, const SdeModel& model, const SchemeTransition& scheme,
           const TestFunction& f, const Vector& x0, const InnovationSpec& innovations,
           const EstimatorConfig& cfg)
        : op_(op),
          model_(model),
          scheme_(scheme),
          f_(f),
          x0_(x0),
          sampler_(innovations),
          cfg_(cfg),
          grid_{op.n, op.T} {
        if (op_.terms.empty()) throw std::invalid_argument("estimator: empty operator");
        if (innovations.dim != model.noise_dim)
            throw ConfigError("estimator: innovation dim != model noise dim");
        if (cfg_.replicates == 0) throw ConfigError("estimator: replicates must be > 0");

        abs_total_ = 0.0;
        cum_.reserve(op_.terms.size());
        for (const auto& t : op_.terms) {
            abs_total_ += std::fabs(static_cast<double>(t.coeff));
            cum_.push_back(abs_total_);
        }

        switch (cfg_.coupling) {
            case CouplingMode::kOn:
                if (!sampler_.gaussian())
                    throw ConfigError(
                        "estimator: coupling requires gaussian innovations (aggregating any "
                        "other law changes the step marginals)");
                coupled_ = true;
                break;
            case CouplingMode::kOff:
                coupled_ = false;
                break;
            case CouplingMode::kAuto:
                coupled_ = sampler_.gaussian() && cfg_.strategy == Strategy::kEnumerate;
                break;
        }
        if (cfg_.strategy != Strategy::kEnumerate) coupled_ = false;

        fine_total_ = 1;
        for (int k = 0; k < op_.depth; ++k) fine_total_ *= grid_.n;
        delta_fine_ = grid_.T;
        for (int k = 0; k < op_.depth; ++k) delta_fine_ /= grid_.n;
    }

    EstimatorResult run(bool use_omp) {
        const auto t0 = std::chrono::steady_clock::now();
        build_strata();
        build_jobs();

        counts_.assign(op_.terms.size(), 0);
        std::vector<ChunkAccum> accum(jobs_.size());
        std::vector<std::vector<std::uint64_t>> chunk_counts(jobs_.size());

#ifdef _OPENMP
        if (use_omp) {
            const int width = cfg_.threads > 0 ? cfg_.threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(width)
            for (std::size_t j = 0; j < jobs_.size(); ++j)
                run_chunk(jobs_[j], accum[j], chunk_counts[j]);
        } else
#else
        (void)use_omp;
#endif
        {
            for (std::size_t j = 0; j < jobs_.size(); ++j)
                run_chunk(jobs_[j], accum[j], chunk_counts[j]);
        }

        for (const auto& a : accum)
            if (a.failed) throw NumericalError(a.error);
        for (const auto& cc : chunk_counts)
            for (std::size_t h = 0; h < cc.size(); ++h) counts_[h] += cc[h];

        EstimatorResult res;
        res.replicates = cfg_.replicates;
        res.per_term_samples = counts_;
        res.coupled = coupled_;

        if (cfg_.strategy == Strategy::kStratified) {
            // value = sum_g W_g mean_g, se^2 = sum_g W_g^2 var_g / M_g
            NeumaierSum value, varsum;
            for (std::size_t g = 0; g < strata_.size(); ++g) {
                NeumaierSum s, s2;
                for (std::size_t j = 0; j < jobs_.size(); ++j) {
                    if (jobs_[j].stratum != static_cast<int>(g)) continue;
                    s.add(accum[j].sum);
                    s2.add(accum[j].sumsq);
                }
                const double Mg = static_cast<double>(strata_[g].replicates);
                const double mean = s.value() / Mg;
                const double var =
                    Mg > 1 ? std::max(0.0, (s2.value() - s.value() * s.value() / Mg) / (Mg - 1))
                           : 0.0;
                value.add(strata_[g].weight * mean);
                varsum.add(strata_[g].weight * strata_[g].weight * var / Mg);
            }
            res.value = value.value();
            res.std_error = std::sqrt(varsum.value());
        } else {
            NeumaierSum s, s2;
            for (std::size_t j = 0; j < jobs_.size(); ++j) {
                s.add(accum[j].sum);
                s2.add(accum[j].sumsq);
            }
            const double M = static_cast<double>(cfg_.replicates);
            res.value = s.value() / M;
            const double var =
                M > 1 ? std::max(0.0, (s2.value() - s.value() * s.value() / M) / (M - 1)) : 0.0;
            res.std_error = std::sqrt(var / M);
        }
        if (!std::isfinite(res.value))
            throw NumericalError("estimator: non-finite estimate");
        res.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    }

  private:
    void build_strata() {
        if (cfg_.strategy != Strategy::kStratified) return;
        const int depth = op_.depth;
        std::vector<Stratum> strata(static_cast<std::size_t>(depth) + 1);
        for (std::size_t h = 0; h < op_.terms.size(); ++h) {
            const int g = program_depth(op_.terms[h].program);
            strata[static_cast<std::size_t>(g)].terms.push_back(h);
            strata[static_cast<std::size_t>(g)].weight +=
                std::fabs(static_cast<double>(op_.terms[h].coeff));
        }
        std::erase_if(strata, [](const Stratum& s) { return s.terms.empty(); });
        std::vector<double> w;
        for (const auto& s : strata) w.push_back(s.weight);
        const auto alloc = allocate_largest_remainder(w, cfg_.replicates);
        std::uint64_t offset = 0;
        for (std::size_t g = 0; g < strata.size(); ++g) {
            strata[g].replicates = alloc[g];
            strata[g].offset = offset;
            offset += alloc[g];
            double acc = 0.0;
            for (std::size_t h : strata[g].terms) {
                acc += std::fabs(static_cast<double>(op_.terms[h].coeff));
                strata[g].cum.push_back(acc);
            }
        }
        strata_ = std::move(strata);
    }

    void build_jobs() {
        jobs_.clear();
        if (cfg_.strategy == Strategy::kStratified) {
            for (std::size_t g = 0; g < strata_.size(); ++g)
                for (std::uint64_t b = 0; b < strata_[g].replicates; b += kChunk)
                    jobs_.push_back({static_cast<int>(g), b,
                                     std::min(b + kChunk, strata_[g].replicates)});
        } else {
            for (std::uint64_t b = 0; b < cfg_.replicates; b += kChunk)
                jobs_.push_back({-1, b, std::min(b + kChunk, cfg_.replicates)});
        }
    }

    void run_chunk(const ChunkJob& job, ChunkAccum& acc, std::vector<std::uint64_t>& counts) {
        counts.assign(op_.terms.size(), 0);
        NeumaierSum s, s2;
        try {
            for (std::uint64_t r = job.begin; r < job.end; ++r) {
                double v = 0.0;
                switch (cfg_.strategy) {
                    case Strategy::kEnumerate:
                        v = replicate_enumerate(r, counts);
                        break;
                    case Strategy::kSample:
                        v = replicate_sampled(r, counts);
                        break;
                    case Strategy::kStratified:
                        v = replicate_stratified(static_cast<std::size_t>(job.stratum), r, counts);
                        break;
                }
                s.add(v);
                s2.add(v * v);
            }
        } catch (const std::exception& e) {
            acc.failed = true;
            acc.error = e.what();
            return;
        }
        acc.sum = s.value();
        acc.sumsq = s2.value();
    }

    double replicate_enumerate(std::uint64_t r, std::vector<std::uint64_t>& counts) {
        NeumaierSum combo;
        if (coupled_) {
            const Stream tableau = derive_stream(cfg_.seed, StreamPurpose::kPathTableau, r);
            const Matrix prefix =
                brownian_prefix(tableau, model_.noise_dim, fine_total_, delta_fine_);
            for (std::size_t h = 0; h < op_.terms.size(); ++h) {
                const Stream gs = derive_stream(cfg_.seed, StreamPurpose::kSmooth, h, r);
                const Vector x =
                    simulate_terminal_coupled(scheme_, op_.terms[h].program, grid_, x0_, prefix,
                                              op_.depth, cfg_.smoothing,
                                              cfg_.smoothing ? &gs : nullptr);
                combo.add(static_cast<double>(op_.terms[h].coeff) * f_(x));
                counts[h] += 1;
            }
        } else {
            for (std::size_t h = 0; h < op_.terms.size(); ++h) {
                const Stream zs = derive_stream(cfg_.seed, StreamPurpose::kTermPath, h, r);
                const Stream gs = derive_stream(cfg_.seed, StreamPurpose::kSmooth, h, r);
                const Vector x =
                    simulate_terminal(scheme_, op_.terms[h].program, grid_, x0_, sampler_, zs,
                                      cfg_.smoothing, cfg_.smoothing ? &gs : nullptr);
                combo.add(static_cast<double>(op_.terms[h].coeff) * f_(x));
                counts[h] += 1;
            }
        }
        return combo.value();
    }

    double replicate_sampled(std::uint64_t r, std::vector<std::uint64_t>& counts) {
        const Stream sel = derive_stream(cfg_.seed, StreamPurpose::kSelect, 0, r);
        const std::size_t h = pick_index(cum_, sel.uniform_at(0));
        const Stream zs = derive_stream(cfg_.seed, StreamPurpose::kTermPath, h, r);
        const Stream gs = derive_stream(cfg_.seed, StreamPurpose::kSmooth, h, r);
        const Vector x = simulate_terminal(scheme_, op_.terms[h].program, grid_, x0_, sampler_, zs,
                                           cfg_.smoothing, cfg_.smoothing ? &gs : nullptr);
        counts[h] += 1;
        const double sign = op_.terms[h].coeff < 0 ? -1.0 : 1.0;
        return sign * abs_total_ * f_(x);
    }

    double replicate_stratified(std::size_t g, std::uint64_t r,
                                std::vector<std::uint64_t>& counts) {
        const Stratum& st = strata_[g];
        const Stream sel = derive_stream(cfg_.seed, StreamPurpose::kSelect, g + 1, r);
        const std::size_t local = pick_index(st.cum, sel.uniform_at(0));
        const std::size_t h = st.terms[local];
        const std::uint64_t rg = st.offset + r;
        const Stream zs = derive_stream(cfg_.seed, StreamPurpose::kTermPath, h, rg);
        const Stream gs = derive_stream(cfg_.seed, StreamPurpose::kSmooth, h, rg);
        const Vector x = simulate_terminal(scheme_, op_.terms[h].program, grid_, x0_, sampler_, zs,
                                           cfg_.smoothing, cfg_.smoothing ? &gs : nullptr);
        counts[h] += 1;
        // mean of sign * f over the stratum's selection law, scaled by W_g later
        const double sign = op_.terms[h].coeff < 0 ? -1.0 : 1.0;
        return sign * f_(x);
    }

    const CompiledOperator& op_;
    const SdeModel& model_;
    const SchemeTransition& scheme_;
    const TestFunction& f_;
    const Vector& x0_;
    InnovationSampler sampler_;
    EstimatorConfig cfg_;
    GridSpec grid_;
    bool coupled_ = false;
    double abs_total_ = 0.0;
    std::vector<double> cum_;
    std::int64_t fine_total_ = 1;
    double delta_fine_ = 0.0;
    std::vector<Stratum> strata_;
    std::vector<ChunkJob> jobs_;
    std::vector<std::uint64_t> counts_;
};

}  // namespace

EstimatorResult estimate(const CompiledOperator& op, const SdeModel& model,
                         const SchemeTransition& scheme, const TestFunction& f, const Vector& x0,
                         const InnovationSpec& innovations, const EstimatorConfig& cfg) {
    Runner runner(op, model, scheme, f, x0, innovations, cfg);
    return runner.run(true);
}

EstimatorResult estimate_serial(const CompiledOperator& op, const SdeModel& model,
                                const SchemeTransition& scheme, const TestFunction& f,
                                const Vector& x0, const InnovationSpec& innovations,
                                const EstimatorConfig& cfg) {
    Runner runner(op, model, scheme, f, x0, innovations, cfg);
    return runner.run(false);
}

void validate_refinement_pair(const GridProgram& refined, const GridProgram& coarse, int n) {
    if (n < 2) throw std::invalid_argument("refinement pair: n must be >= 2");
    const int depth = std::max(program_depth(refined), program_depth(coarse));
    std::int64_t fine_total = 1;
    for (int k = 0; k < depth; ++k) fine_total *= n;

    // Unroll both programs into (position, span) step lists at the common
    // resolution and find the mismatched window.
    auto unroll = [&](const GridProgram& p) {
        std::vector<std::pair<std::int64_t, std::int64_t>> steps;  // (pos, span)
        std::int64_t pos = 0;
        for (const auto& seg : p.segments) {
            std::int64_t span = fine_total;
            for (int k = 0; k < seg.level; ++k) span /= n;
            for (std::int64_t s = 0; s < seg.steps; ++s) {
                steps.emplace_back(pos, span);
                pos += span;
            }
        }
        if (pos != fine_total)
            throw std::invalid_argument("refinement pair: program does not tile the horizon");
        return steps;
    };
    const auto a = unroll(refined), b = unroll(coarse);
    if (a.size() != b.size() + static_cast<std::size_t>(n) - 1)
        throw std::invalid_argument("refinement pair: step counts do not differ by n-1");

    std::size_t i = 0, j = 0;
    int mismatches = 0;
    while (j < b.size()) {
        if (i < a.size() && a[i] == b[j]) {
            ++i;
            ++j;
            continue;
        }
        // the coarse step b[j] must be covered by exactly n refined steps
        ++mismatches;
        const std::int64_t want_span = b[j].second / n;
        if (want_span * n != b[j].second)
            throw std::invalid_argument("refinement pair: span not divisible by n");
        std::int64_t pos = b[j].first;
        for (int k = 0; k < n; ++k, ++i) {
            if (i >= a.size() || a[i].first != pos || a[i].second != want_span)
                throw std::invalid_argument(
                    "refinement pair: refined side does not split the coarse step into n");
            pos += want_span;
        }
        ++j;
    }
    if (mismatches != 1)
        throw std::invalid_argument("refinement pair: expected exactly one refined step, found " +
                                    std::to_string(mismatches));
}

std::pair<Vector, Vector> coupled_pair_sample(const SchemeTransition& scheme, const GridSpec& grid,
                                              const GridProgram& refined,
                                              const GridProgram& coarse, const Vector& x0,
                                              std::uint64_t seed, std::uint64_t replicate) {
    validate_refinement_pair(refined, coarse, grid.n);
    const int depth = std::max(program_depth(refined), program_depth(coarse));
    std::int64_t fine_total = 1;
    double delta_fine = grid.T;
    for (int k = 0; k < depth; ++k) {
        fine_total *= grid.n;
        delta_fine /= grid.n;
    }
    const Stream tableau = derive_stream(seed, StreamPurpose::kPathTableau, replicate);
    const Matrix prefix = brownian_prefix(tableau, scheme.noise_dim, fine_total, delta_fine);
    Vector xr = simulate_terminal_coupled(scheme, refined, grid, x0, prefix, depth);
    Vector xc = simulate_terminal_coupled(scheme, coarse, grid, x0, prefix, depth);
    return {std::move(xr), std::move(xc)};
}

}  // namespace gridboost
