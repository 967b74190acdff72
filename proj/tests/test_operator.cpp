#include "gridboost/compiler.hpp"
#include "gridboost/errors.hpp"
#include "gridboost/model.hpp"
#include "gridboost/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

using namespace gridboost;

namespace {

// ---------------------------------------------------------------------------
// Independent re-implementation of the correction ladder, used only here.
// Programs are flat per-step level lists and the expansion is plain recursive
// backtracking: no memoization, no run-length encoding, no odometers.  If the
// library's compiler and this agree term-for-term, a shared structural bug is
// about the only thing left uncovered.
// ---------------------------------------------------------------------------

using Steps = std::vector<int>;  // one entry per step, the step's level

struct DirectTerm {
    int sign = 1;
    Steps steps;
};

std::vector<DirectTerm> direct_expand(int level, const Rational& nu, const Rational& alpha,
                                      int n) {
    std::vector<DirectTerm> out;
    out.push_back({1, Steps(static_cast<std::size_t>(n), level + 1)});
    const int m = m_order(level, nu, alpha);
    for (int i = 1; i <= m - 1 && i <= n; ++i) {
        const Rational qi = q_order(i, level, nu, alpha);
        std::vector<DirectTerm> options = direct_expand(level + 1, qi, alpha, n);
        options.push_back({-1, Steps{level + 1}});

        std::vector<int> pos;
        std::vector<const DirectTerm*> pick(static_cast<std::size_t>(i), nullptr);
        std::function<void(int)> assign = [&](int slot) {
            if (slot == i) {
                DirectTerm t;
                int cursor = 0;
                for (int j = 0; j < i; ++j) {
                    for (int k = cursor; k < pos[static_cast<std::size_t>(j)] - 1; ++k)
                        t.steps.push_back(level + 1);
                    const DirectTerm& c = *pick[static_cast<std::size_t>(j)];
                    t.sign *= c.sign;
                    t.steps.insert(t.steps.end(), c.steps.begin(), c.steps.end());
                    cursor = pos[static_cast<std::size_t>(j)];
                }
                for (int k = cursor; k < n; ++k) t.steps.push_back(level + 1);
                out.push_back(std::move(t));
                return;
            }
            for (const auto& o : options) {
                pick[static_cast<std::size_t>(slot)] = &o;
                assign(slot + 1);
            }
        };
        std::function<void(int)> choose = [&](int next) {
            if (static_cast<int>(pos.size()) == i) {
                assign(0);
                return;
            }
            for (int p = next; p <= n; ++p) {
                pos.push_back(p);
                choose(p + 1);
                pos.pop_back();
            }
        };
        choose(1);
    }
    return out;
}

Steps flatten(const GridProgram& prog) {
    Steps s;
    for (const auto& seg : prog.segments)
        for (std::int64_t k = 0; k < seg.steps; ++k) s.push_back(seg.level);
    return s;
}

// Exact E f(X_T) for the linear-ou Euler chain run over a flat step list.
double direct_value(const Steps& steps, int n, double T, double a, double sigma, double x0,
                    const TestFunction& f) {
    double mean = x0, var = 0.0;
    for (const int level : steps) {
        const double delta = T / std::pow(static_cast<double>(n), level);
        const double g = 1.0 + a * delta;
        mean *= g;
        var = g * g * var + sigma * sigma * delta;
    }
    Vector mu(1);
    mu << mean;
    Matrix C(1, 1);
    C << var;
    return gaussian_expectation(f, mu, C);
}

}  // namespace

TEST_CASE("order-1 operator is the plain grid") {
    const CompiledOperator op = compile_operator({Rational(1), Rational(1), 7, 2.0, 1000000});
    REQUIRE(op.terms.size() == 1);
    CHECK(op.terms[0].coeff == 1);
    CHECK(op.terms[0].program == uniform_program(1, 7));
    CHECK(op.pre_merge_terms == 1);
    CHECK(op.depth == 1);
}

TEST_CASE("order-2 operator at n = 4, fully pinned down") {
    const CompiledOperator op = compile_operator({Rational(2), Rational(1), 4, 1.0, 1000000});
    CHECK(op.pre_merge_terms == 9);  // 1 + 2n
    REQUIRE(op.terms.size() == 5);
    CHECK(op.depth == 2);

    // the all-coarse program absorbed the four -1 copies
    int coarse_hits = 0;
    for (const auto& t : op.terms)
        if (t.program == uniform_program(1, 4)) {
            ++coarse_hits;
            CHECK(t.coeff == 1 - 4);
        }
    CHECK(coarse_hits == 1);

    // the other four: slot p refined to level 2, coefficient +1
    for (int p = 1; p <= 4; ++p) {
        GridProgram g;
        if (p > 1) g.segments.push_back({1, p - 1});
        g.segments.push_back({2, 4});
        if (p < 4) g.segments.push_back({1, 4 - p});
        int hits = 0;
        for (const auto& t : op.terms)
            if (t.program == g) {
                ++hits;
                CHECK(t.coeff == 1);
            }
        CHECK(hits == 1);
    }
}

TEST_CASE("pre-merge counts follow the closed formulas") {
    for (int n = 2; n <= 16; ++n) {
        const CompiledOperator o2 = compile_operator({Rational(2), Rational(1), n, 1.0, 1000000});
        CHECK(o2.pre_merge_terms == static_cast<std::uint64_t>(1 + 2 * n));
        const CompiledOperator o3 = compile_operator({Rational(3), Rational(1), n, 1.0, 1000000});
        CHECK(o3.pre_merge_terms == static_cast<std::uint64_t>(1 + 4 * n * n));
    }
}

TEST_CASE("mass, span, and depth invariants across the sweep") {
    for (int nu = 1; nu <= 3; ++nu)
        for (int n = 2; n <= 16; ++n) {
            const CompiledOperator op =
                compile_operator({Rational(nu), Rational(1), n, 1.0, 1000000});
            std::int64_t mass = 0;
            for (const auto& t : op.terms) {
                mass += t.coeff;
                CHECK(t.coeff != 0);
                CHECK(program_spans_horizon(t.program, n));
                CHECK(program_depth(t.program) <= nu);  // l(nu, 1) = nu
                for (std::size_t s = 0; s < t.program.segments.size(); ++s) {
                    CHECK(t.program.segments[s].steps > 0);
                    if (s > 0)  // canonical: adjacent runs never share a level
                        CHECK(t.program.segments[s].level != t.program.segments[s - 1].level);
                }
            }
            CHECK(mass == 1);
        }
}

TEST_CASE("compilation is deterministic and canonical") {
    const OrderParams p{Rational(3), Rational(1), 5, 0.7, 1000000};
    const CompiledOperator a = compile_operator(p);
    const CompiledOperator b = compile_operator(p);
    CHECK(a == b);
    for (std::size_t i = 1; i < a.terms.size(); ++i)
        CHECK(a.terms[i - 1].program < a.terms[i].program);  // strictly sorted, so no duplicates
}

TEST_CASE("compiler rejects bad parameters") {
    CHECK_THROWS_AS(compile_operator({Rational(2), Rational(1), 1, 1.0, 1000000}),
                    std::invalid_argument);
    CHECK_THROWS_AS(compile_operator({Rational(2), Rational(1), 4, 0.0, 1000000}),
                    std::invalid_argument);
    CHECK_THROWS_AS(compile_operator({Rational(0), Rational(1), 4, 1.0, 1000000}),
                    std::domain_error);
    CHECK_THROWS_AS(compile_operator({Rational(3), Rational(1), 16, 1.0, 100}), NumericalError);
}

TEST_CASE("expansion agrees with the direct recursion, term by term") {
    for (const int nu : {2, 3})
        for (const int n : {2, 4}) {
            const CompiledOperator op =
                compile_operator({Rational(nu), Rational(1), n, 1.0, 1000000});
            const std::vector<DirectTerm> direct = direct_expand(0, Rational(nu), Rational(1), n);
            CHECK(op.pre_merge_terms == direct.size());

            std::map<Steps, std::int64_t> merged;
            for (const auto& t : direct) merged[t.steps] += t.sign;
            std::erase_if(merged, [](const auto& kv) { return kv.second == 0; });

            REQUIRE(op.terms.size() == merged.size());
            for (const auto& t : op.terms) {
                const auto it = merged.find(flatten(t.program));
                REQUIRE(it != merged.end());
                CHECK(it->second == t.coeff);
            }
        }
}

TEST_CASE("compiled evaluation equals the unmerged direct evaluation") {
    const double a = -1.0, sigma = 1.0, T = 0.7, x0 = 0.9;
    const BuiltinModel bm = builtin_model("linear-ou", {a, sigma});
    const TestFunction fs[] = {TestFunction::indicator((Vector(1) << 1.0).finished(), 0.2),
                               TestFunction::polynomial((Vector(1) << 1.0).finished(), {0.0, 1.0})};
    for (const int nu : {2, 3})
        for (const int n : {2, 4}) {
            const CompiledOperator op =
                compile_operator({Rational(nu), Rational(1), n, T, 1000000});
            const std::vector<DirectTerm> direct = direct_expand(0, Rational(nu), Rational(1), n);
            for (const auto& f : fs) {
                double want = 0.0;
                for (const auto& t : direct)
                    want += t.sign * direct_value(t.steps, n, T, a, sigma, x0, f);
                const double got =
                    evaluate_exact(op, bm.model, f, (Vector(1) << x0).finished());
                CHECK(got == doctest::Approx(want).epsilon(1e-12));
            }
        }
}

TEST_CASE("serialization round-trips exactly") {
    for (const char* nu : {"2", "3", "3/2"}) {
        const CompiledOperator op =
            compile_operator({parse_rational(nu), Rational(1), 4, 0.3, 1000000});
        const CompiledOperator back = parse_operator(serialize_operator(op));
        CHECK(back == op);
        // a second round trip is byte-identical
        CHECK(serialize_operator(back) == serialize_operator(op));
    }
}

TEST_CASE("operator parser rejects malformed input") {
    const CompiledOperator op = compile_operator({Rational(2), Rational(1), 2, 1.0, 1000000});
    const std::string good = serialize_operator(op);
    CHECK(parse_operator(good) == op);

    CHECK_THROWS_AS(parse_operator(""), ConfigError);
    CHECK_THROWS_AS(parse_operator("2 1 2\n"), ConfigError);  // short header
    // zero coefficient
    CHECK_THROWS_AS(parse_operator("2 1 2 1 1\n0 1:2\n"), ConfigError);
    // program does not tile [0, T]
    CHECK_THROWS_AS(parse_operator("2 1 2 1 1\n1 1:1\n"), ConfigError);
    // adjacent runs at one level are not canonical
    CHECK_THROWS_AS(parse_operator("2 1 2 1 1\n1 1:1 1:1\n"), ConfigError);
    // fewer terms than the header promises
    CHECK_THROWS_AS(parse_operator("2 1 2 1 2\n1 1:2\n"), ConfigError);
    // trailing data
    CHECK_THROWS_AS(parse_operator(good + "1 1:2\n"), ConfigError);
}
