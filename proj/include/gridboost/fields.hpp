#pragma once

#include "gridboost/model.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gridboost {

// Immutable expression tree over a model's vector fields.  Values are exact
// compositions of the children's values and Jacobians; derivative data with
// no analytic source falls back to central differences with per-coordinate
// step 1e-4 * (1 + |x_i|) (and 1e-4 * (1 + |t|) in time).  One FD layer per
// bracket nesting level; fine for the shallow towers we build (L <= 2).
class FieldExpr {
  public:
    static FieldExpr drift(const SdeModel& m);             // V0, the Ito drift
    static FieldExpr strat_drift(const SdeModel& m);       // V0 - 1/2 sum_i J_{Vi} Vi
    static FieldExpr diffusion(const SdeModel& m, int i);  // Vi, i = 1..N
    static FieldExpr leaf(VectorField vf, int dim, std::string name);

    // [f, g] = (grad g) f - (grad f) g
    static FieldExpr bracket(FieldExpr f, FieldExpr g);
    static FieldExpr time_deriv(FieldExpr f);
    static FieldExpr sum(FieldExpr a, FieldExpr b);
    static FieldExpr scale(double c, FieldExpr e);

    int dim() const;
    void value(const Vector& x, double t, Vector& out) const;
    void jacobian(const Vector& x, double t, Matrix& out) const;
    void dt(const Vector& x, double t, Vector& out) const;
    std::string describe() const;

    struct Node;  // implementation detail, defined in fields.cpp

  private:
    explicit FieldExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// The iterated-field family: for every diffusion index i and every word
// alpha over {0..N} with |alpha| <= L,
//   V^[empty] = Vi,
//   V^[(alpha,0)] = [Vbar0, V^[alpha]] + dt V^[alpha]
//                   + 1/2 sum_j [Vj, [Vj, V^[alpha]]],
//   V^[(alpha,j)] = [Vj, V^[alpha]]  (j >= 1).
struct BasisEntry {
    int base = 1;           // the diffusion index the tower starts from
    std::vector<int> word;  // letters applied in order, innermost first
    FieldExpr field;
};

struct BracketBasis {
    int dim = 0;
    std::vector<BasisEntry> entries;
};

// L <= 2 enforced; the FD error in deeper towers would drown the signal.
BracketBasis bracket_basis(const SdeModel& m, int L);

// 1 ^ min eigenvalue of the Gram matrix sum_k v_k v_k^T of the basis values
// at (x, t); equals 1 ^ inf_{|b|=1} sum_k <v_k, b>^2, clamped to [0, 1].
double hormander_functional(const BracketBasis& basis, const Vector& x, double t);

struct ScanRow {
    Vector x;
    double t = 0.0;
    double value = 0.0;
};

struct ScanReport {
    std::vector<ScanRow> rows;
    double min_value = 1.0;
    Vector argmin_x;
    double argmin_t = 0.0;
};

// Deterministic pseudo-random sweep of the functional over the box
// [lo, hi] x [t0, t1]; `samples` points addressed by (seed, index).
ScanReport hormander_scan(const SdeModel& m, int L, const Vector& lo, const Vector& hi, double t0,
                          double t1, int samples, std::uint64_t seed);

}  // namespace gridboost
