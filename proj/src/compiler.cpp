#include "gridboost/compiler.hpp"

#include "gridboost/errors.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <sstream>

namespace gridboost {

namespace {

struct RawTerm {
    int sign = 1;
    std::vector<GridSegment> segs;
};

class Expander {
  public:
    Expander(const OrderParams& p) : p_(p) {}

    // Signed terms for the operator opened on one interval of level `level`
    // (length T / n^level), expressed with absolute levels.
    const std::vector<RawTerm>& expand(int level, const Rational& nu) {
        const auto key = std::make_tuple(level, nu.num, nu.den);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        const int n = p_.n;
        const int m = m_order(level, nu, p_.alpha);
        std::vector<RawTerm> out;

        // Base: the plain one-level refinement across the whole interval.
        out.push_back({1, {{level + 1, n}}});

        for (int i = 1; i <= m - 1; ++i) {
            if (i > n) continue;  // no ordered i-tuple fits on an n-point grid
            const Rational qi = q_order(i, level, nu, p_.alpha);
            // Options for one difference slot: every sub-term of the deeper
            // operator, plus the coarse step with flipped sign.
            const std::vector<RawTerm>& sub = expand(level + 1, qi);
            std::vector<RawTerm> options = sub;
            options.push_back({-1, {{level + 1, 1}}});

            // Ordered slot positions 1 <= p_1 < ... < p_i <= n on the fine grid.
            std::vector<int> pos(i);
            for (int j = 0; j < i; ++j) pos[j] = j + 1;
            for (;;) {
                // All option assignments for the i slots (mixed-radix odometer).
                std::vector<std::size_t> choice(i, 0);
                for (;;) {
                    RawTerm term;
                    term.sign = 1;
                    int cursor = 0;  // fine steps consumed so far
                    for (int j = 0; j < i; ++j) {
                        append_run(term.segs, level + 1, pos[j] - 1 - cursor);
                        const RawTerm& c = options[choice[j]];
                        term.sign *= c.sign;
                        for (const auto& seg : c.segs) append_run(term.segs, seg.level, seg.steps);
                        cursor = pos[j];
                    }
                    append_run(term.segs, level + 1, n - cursor);
                    out.push_back(std::move(term));
                    if (++produced_ > p_.term_cap)
                        throw NumericalError("operator compiler: term cap " +
                                             std::to_string(p_.term_cap) + " exceeded");
                    int j = i - 1;
                    while (j >= 0 && ++choice[j] == options.size()) choice[j--] = 0;
                    if (j < 0) break;
                }
                int j = i - 1;
                while (j >= 0 && pos[j] == n - (i - 1 - j)) --j;
                if (j < 0) break;
                ++pos[j];
                for (int k = j + 1; k < i; ++k) pos[k] = pos[k - 1] + 1;
            }
        }
        return memo_.emplace(key, std::move(out)).first->second;
    }

    std::uint64_t produced() const { return produced_; }

  private:
    static void append_run(std::vector<GridSegment>& segs, int level, std::int64_t steps) {
        if (steps == 0) return;
        if (!segs.empty() && segs.back().level == level)
            segs.back().steps += steps;
        else
            segs.push_back({level, steps});
    }

    OrderParams p_;
    std::map<std::tuple<int, std::int64_t, std::int64_t>, std::vector<RawTerm>> memo_;
    std::uint64_t produced_ = 1;  // counts the top-level base term up front
};

}  // namespace

CompiledOperator compile_operator(const OrderParams& params) {
    if (params.n < 2) throw std::invalid_argument("compile_operator: n must be >= 2");
    if (!(params.T > 0.0)) throw std::invalid_argument("compile_operator: T must be > 0");

    Expander ex(params);
    const std::vector<RawTerm>& raw = ex.expand(0, params.nu);

    CompiledOperator op;
    op.nu = params.nu;
    op.alpha = params.alpha;
    op.n = params.n;
    op.T = params.T;
    op.pre_merge_terms = raw.size();

    // Cross-term merge: sort canonical programs, sum signs.
    std::vector<std::pair<GridProgram, std::int64_t>> acc;
    acc.reserve(raw.size());
    for (const auto& t : raw) acc.emplace_back(GridProgram{t.segs}, t.sign);
    std::sort(acc.begin(), acc.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [prog, c] : acc) {
        if (!op.terms.empty() && op.terms.back().program == prog)
            op.terms.back().coeff += c;
        else
            op.terms.push_back({c, std::move(prog)});
    }
    std::erase_if(op.terms, [](const SignedTerm& t) { return t.coeff == 0; });

    // Post-conditions: unit mass, full span, depth within the ladder bound.
    std::int64_t mass = 0;
    for (const auto& t : op.terms) {
        mass += t.coeff;
        op.depth = std::max(op.depth, program_depth(t.program));
        if (!program_spans_horizon(t.program, op.n))
            throw NumericalError("compile_operator: term does not tile the horizon");
    }
    if (mass != 1) throw NumericalError("compile_operator: coefficients sum to " +
                                        std::to_string(mass) + ", expected 1");
    if (op.depth > level_depth(params.nu, params.alpha))
        throw NumericalError("compile_operator: refinement depth exceeded its bound");
    return op;
}

std::string serialize_operator(const CompiledOperator& op) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s %s %d %.17g %zu\n", to_string(op.nu).c_str(),
                  to_string(op.alpha).c_str(), op.n, op.T, op.terms.size());
    out += buf;
    for (const auto& t : op.terms) {
        std::snprintf(buf, sizeof(buf), "%" PRId64, t.coeff);
        out += buf;
        for (const auto& seg : t.program.segments) {
            std::snprintf(buf, sizeof(buf), " %d:%" PRId64, seg.level, seg.steps);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

CompiledOperator parse_operator(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("operator parse: empty input");
    std::istringstream head(line);
    std::string nu_s, alpha_s;
    int n = 0;
    double T = 0.0;
    std::size_t nterms = 0;
    if (!(head >> nu_s >> alpha_s >> n >> T >> nterms))
        throw ConfigError("operator parse: bad header '" + line + "'");
    std::string extra;
    if (head >> extra) throw ConfigError("operator parse: trailing data in header");

    CompiledOperator op;
    op.nu = parse_rational(nu_s);
    op.alpha = parse_rational(alpha_s);
    op.n = n;
    op.T = T;
    if (op.n < 2) throw ConfigError("operator parse: n must be >= 2");

    for (std::size_t k = 0; k < nterms; ++k) {
        if (!std::getline(in, line))
            throw ConfigError("operator parse: expected " + std::to_string(nterms) +
                              " term lines, got " + std::to_string(k));
        std::istringstream ls(line);
        SignedTerm t;
        if (!(ls >> t.coeff)) throw ConfigError("operator parse: bad coefficient in '" + line + "'");
        if (t.coeff == 0) throw ConfigError("operator parse: zero coefficient");
        std::string tok;
        while (ls >> tok) {
            GridSegment seg;
            if (std::sscanf(tok.c_str(), "%d:%" SCNd64, &seg.level, &seg.steps) != 2)
                throw ConfigError("operator parse: bad segment '" + tok + "'");
            if (seg.level < 0 || seg.steps <= 0)
                throw ConfigError("operator parse: invalid segment '" + tok + "'");
            if (!t.program.segments.empty() && t.program.segments.back().level == seg.level)
                throw ConfigError("operator parse: adjacent segments share a level");
            t.program.segments.push_back(seg);
        }
        if (t.program.segments.empty())
            throw ConfigError("operator parse: term without segments");
        if (!program_spans_horizon(t.program, op.n))
            throw ConfigError("operator parse: term does not tile the horizon");
        if (!op.terms.empty() && !(op.terms.back().program < t.program))
            throw ConfigError("operator parse: terms out of canonical order");
        op.depth = std::max(op.depth, program_depth(t.program));
        op.terms.push_back(std::move(t));
    }
    if (std::getline(in, line) && !line.empty())
        throw ConfigError("operator parse: trailing data after terms");
    op.pre_merge_terms = op.terms.size();  // unknown after the fact; lower bound
    return op;
}

}  // namespace gridboost
