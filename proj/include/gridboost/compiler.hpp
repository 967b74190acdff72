#pragma once

#include "gridboost/orders.hpp"
#include "gridboost/scheme.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gridboost {

// One signed product term: run the scheme over `program`, weight the result by
// `coeff`.  Coefficients are exact integers; the boosted operator is a signed
// integer combination of plain grid runs, nothing more.
struct SignedTerm {
    std::int64_t coeff = 0;
    GridProgram program;
    friend bool operator==(const SignedTerm&, const SignedTerm&) = default;
};

struct OrderParams {
    Rational nu{1};
    Rational alpha{1};  // scheme's smooth weak order
    int n = 2;
    double T = 1.0;
    std::uint64_t term_cap = 1000000;
};

struct CompiledOperator {
    Rational nu{1};
    Rational alpha{1};
    int n = 2;
    double T = 1.0;
    std::vector<SignedTerm> terms;  // canonical: per-term merged runs, sorted, no zero coeffs
    std::uint64_t pre_merge_terms = 0;  // product terms before cross-term merging
    int depth = 0;                      // deepest refinement level used

    // Equality is about the operator itself; bookkeeping like pre_merge_terms
    // is not part of the identity (a parsed operator cannot know it).
    friend bool operator==(const CompiledOperator& a, const CompiledOperator& b) {
        return a.nu == b.nu && a.alpha == b.alpha && a.n == b.n && a.T == b.T &&
               a.terms == b.terms;
    }
};

// Expands the order-nu correction ladder into signed grid programs.  The
// recursion opens m(l, nu) - 1 refinement slots per level; every slot is a
// (refined - coarse) difference, so coefficients telescope and the merged
// operator always has total mass 1.  Cross-term merging happens exactly once,
// at the end; pre_merge_terms records the count before it.
CompiledOperator compile_operator(const OrderParams& params);

// Text form, round-trip exact:
//   line 1: nu alpha n T terms     (T with full precision)
//   then one line per term: coeff level:steps level:steps ...
std::string serialize_operator(const CompiledOperator& op);
CompiledOperator parse_operator(const std::string& text);

}  // namespace gridboost
