#include "gridboost/fields.hpp"

#include "gridboost/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace gridboost {

namespace {

constexpr double kFdScale = 1e-4;

}  // namespace

struct FieldExpr::Node {
    enum class Kind { kLeaf, kStratDrift, kBracket, kDt, kSum, kScale };
    Kind kind = Kind::kLeaf;
    int dim = 0;
    std::string name;

    VectorField leaf;                    // kLeaf
    VectorField drift_f;                 // kStratDrift
    std::vector<VectorField> diff_f;     // kStratDrift
    std::shared_ptr<const Node> a, b;    // children
    double c = 1.0;                      // kScale

    void value(const Vector& x, double t, Vector& out) const;
    void jacobian(const Vector& x, double t, Matrix& out) const;
    void dt(const Vector& x, double t, Vector& out) const;
};

namespace {

using Node = FieldExpr::Node;

// Central differences of a node's value map.
void fd_jacobian(const Node& n, const Vector& x, double t, Matrix& out) {
    const int d = n.dim;
    out.resize(d, d);
    Vector xp, vp(d), vm(d);
    for (int j = 0; j < d; ++j) {
        const double h = kFdScale * (1.0 + std::fabs(x[j]));
        xp = x;
        xp[j] = x[j] + h;
        n.value(xp, t, vp);
        xp[j] = x[j] - h;
        n.value(xp, t, vm);
        out.col(j) = (vp - vm) / (2.0 * h);
    }
}

void fd_dt(const Node& n, const Vector& x, double t, Vector& out) {
    const double h = kFdScale * (1.0 + std::fabs(t));
    Vector vp(n.dim), vm(n.dim);
    n.value(x, t + h, vp);
    n.value(x, t - h, vm);
    out = (vp - vm) / (2.0 * h);
}

void field_jacobian(const VectorField& f, int dim, const Vector& x, double t, Matrix& out) {
    if (f.jacobian) {
        f.jacobian(x, t, out);
        return;
    }
    out.resize(dim, dim);
    Vector xp, vp(dim), vm(dim);
    for (int j = 0; j < dim; ++j) {
        const double h = kFdScale * (1.0 + std::fabs(x[j]));
        xp = x;
        xp[j] = x[j] + h;
        f.value(xp, t, vp);
        xp[j] = x[j] - h;
        f.value(xp, t, vm);
        out.col(j) = (vp - vm) / (2.0 * h);
    }
}

}  // namespace

void FieldExpr::Node::value(const Vector& x, double t, Vector& out) const {
    switch (kind) {
        case Kind::kLeaf:
            leaf.value(x, t, out);
            return;
        case Kind::kStratDrift: {
            drift_f.value(x, t, out);
            Vector vi(dim);
            Matrix ji(dim, dim);
            for (const auto& f : diff_f) {
                f.value(x, t, vi);
                field_jacobian(f, dim, x, t, ji);
                out.noalias() -= 0.5 * (ji * vi);
            }
            return;
        }
        case Kind::kBracket: {
            Vector va(dim), vb(dim);
            Matrix ja(dim, dim), jb(dim, dim);
            a->value(x, t, va);
            b->value(x, t, vb);
            a->jacobian(x, t, ja);
            b->jacobian(x, t, jb);
            out.noalias() = jb * va;
            out.noalias() -= ja * vb;
            return;
        }
        case Kind::kDt:
            a->dt(x, t, out);
            return;
        case Kind::kSum: {
            Vector vb(dim);
            a->value(x, t, out);
            b->value(x, t, vb);
            out += vb;
            return;
        }
        case Kind::kScale:
            a->value(x, t, out);
            out *= c;
            return;
    }
}

void FieldExpr::Node::jacobian(const Vector& x, double t, Matrix& out) const {
    switch (kind) {
        case Kind::kLeaf:
            field_jacobian(leaf, dim, x, t, out);
            return;
        case Kind::kSum: {
            Matrix jb(dim, dim);
            a->jacobian(x, t, out);
            b->jacobian(x, t, jb);
            out += jb;
            return;
        }
        case Kind::kScale:
            a->jacobian(x, t, out);
            out *= c;
            return;
        default:
            fd_jacobian(*this, x, t, out);
            return;
    }
}

void FieldExpr::Node::dt(const Vector& x, double t, Vector& out) const {
    switch (kind) {
        case Kind::kLeaf:
            if (leaf.time_deriv) {
                leaf.time_deriv(x, t, out);
                return;
            }
            fd_dt(*this, x, t, out);
            return;
        case Kind::kSum: {
            Vector vb(dim);
            a->dt(x, t, out);
            b->dt(x, t, vb);
            out += vb;
            return;
        }
        case Kind::kScale:
            a->dt(x, t, out);
            out *= c;
            return;
        default:
            fd_dt(*this, x, t, out);
            return;
    }
}

FieldExpr FieldExpr::drift(const SdeModel& m) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kLeaf;
    n->dim = m.dim;
    n->leaf = m.drift;
    n->name = "V0";
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::strat_drift(const SdeModel& m) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kStratDrift;
    n->dim = m.dim;
    n->drift_f = m.drift;
    n->diff_f = m.diffusion;
    n->name = "Vbar0";
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::diffusion(const SdeModel& m, int i) {
    if (i < 1 || i > m.noise_dim)
        throw std::invalid_argument("FieldExpr::diffusion: index out of range");
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kLeaf;
    n->dim = m.dim;
    n->leaf = m.diffusion[static_cast<std::size_t>(i - 1)];
    n->name = "V" + std::to_string(i);
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::leaf(VectorField vf, int dim, std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kLeaf;
    n->dim = dim;
    n->leaf = std::move(vf);
    n->name = std::move(name);
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::bracket(FieldExpr f, FieldExpr g) {
    if (f.dim() != g.dim()) throw std::invalid_argument("bracket: dimension mismatch");
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kBracket;
    n->dim = f.dim();
    n->a = f.node_;
    n->b = g.node_;
    n->name = "[" + f.node_->name + "," + g.node_->name + "]";
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::time_deriv(FieldExpr f) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kDt;
    n->dim = f.dim();
    n->a = f.node_;
    n->name = "dt(" + f.node_->name + ")";
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::sum(FieldExpr a, FieldExpr b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("sum: dimension mismatch");
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kSum;
    n->dim = a.dim();
    n->a = a.node_;
    n->b = b.node_;
    n->name = "(" + a.node_->name + "+" + b.node_->name + ")";
    return FieldExpr(std::move(n));
}

FieldExpr FieldExpr::scale(double c, FieldExpr e) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kScale;
    n->dim = e.dim();
    n->a = e.node_;
    n->c = c;
    n->name = std::to_string(c) + "*" + e.node_->name;
    return FieldExpr(std::move(n));
}

int FieldExpr::dim() const { return node_->dim; }
void FieldExpr::value(const Vector& x, double t, Vector& out) const { node_->value(x, t, out); }
void FieldExpr::jacobian(const Vector& x, double t, Matrix& out) const {
    node_->jacobian(x, t, out);
}
void FieldExpr::dt(const Vector& x, double t, Vector& out) const { node_->dt(x, t, out); }
std::string FieldExpr::describe() const { return node_->name; }

namespace {

// One letter of the recursion applied to e.
FieldExpr apply_letter(const SdeModel& m, const FieldExpr& e, int letter) {
    if (letter >= 1) return FieldExpr::bracket(FieldExpr::diffusion(m, letter), e);
    // letter 0: [Vbar0, e] + dt e + 1/2 sum_j [Vj, [Vj, e]]
    FieldExpr acc = FieldExpr::sum(FieldExpr::bracket(FieldExpr::strat_drift(m), e),
                                   FieldExpr::time_deriv(e));
    for (int j = 1; j <= m.noise_dim; ++j) {
        const FieldExpr vj = FieldExpr::diffusion(m, j);
        acc = FieldExpr::sum(acc,
                             FieldExpr::scale(0.5, FieldExpr::bracket(vj, FieldExpr::bracket(vj, e))));
    }
    return acc;
}

}  // namespace

BracketBasis bracket_basis(const SdeModel& m, int L) {
    if (L < 0 || L > 2)
        throw std::invalid_argument("bracket_basis: L must be in 0..2 (FD noise grows fast)");
    BracketBasis basis;
    basis.dim = m.dim;

    // words over {0..N} of length 0..L, shortest first, lexicographic within
    std::vector<std::vector<int>> words = {{}};
    std::size_t level_begin = 0;
    for (int len = 1; len <= L; ++len) {
        const std::size_t level_end = words.size();
        for (std::size_t w = level_begin; w < level_end; ++w)
            for (int letter = 0; letter <= m.noise_dim; ++letter) {
                auto word = words[w];
                word.push_back(letter);
                words.push_back(std::move(word));
            }
        level_begin = level_end;
    }

    for (int i = 1; i <= m.noise_dim; ++i)
        for (const auto& word : words) {
            FieldExpr e = FieldExpr::diffusion(m, i);
            for (int letter : word) e = apply_letter(m, e, letter);
            basis.entries.push_back({i, word, std::move(e)});
        }
    return basis;
}

double hormander_functional(const BracketBasis& basis, const Vector& x, double t) {
    const int d = basis.dim;
    Matrix gram = Matrix::Zero(d, d);
    Vector v(d);
    for (const auto& entry : basis.entries) {
        entry.field.value(x, t, v);
        gram.noalias() += v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    return std::min(1.0, std::max(0.0, lmin));
}

ScanReport hormander_scan(const SdeModel& m, int L, const Vector& lo, const Vector& hi, double t0,
                          double t1, int samples, std::uint64_t seed) {
    if (lo.size() != m.dim || hi.size() != m.dim)
        throw std::invalid_argument("hormander_scan: box dimension mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (!(lo[i] <= hi[i])) throw std::invalid_argument("hormander_scan: empty box");
    if (samples < 1) throw std::invalid_argument("hormander_scan: samples must be >= 1");

    const BracketBasis basis = bracket_basis(m, L);
    const Stream probe = derive_stream(seed, StreamPurpose::kProbe);
    const int d = m.dim;

    ScanReport rep;
    rep.rows.reserve(static_cast<std::size_t>(samples));
    Vector x(d);
    for (int s = 0; s < samples; ++s) {
        const std::uint64_t base = static_cast<std::uint64_t>(s) * (d + 1);
        for (int i = 0; i < d; ++i)
            x[i] = lo[i] + probe.uniform_at(base + i) * (hi[i] - lo[i]);
        const double t = t0 + probe.uniform_at(base + d) * (t1 - t0);
        const double val = hormander_functional(basis, x, t);
        rep.rows.push_back({x, t, val});
        if (rep.rows.size() == 1 || val < rep.min_value) {
            rep.min_value = val;
            rep.argmin_x = x;
            rep.argmin_t = t;
        }
    }
    return rep;
}

}  // namespace gridboost
