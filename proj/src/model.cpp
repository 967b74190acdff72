#include "gridboost/model.hpp"

#include "gridboost/rng.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

namespace gridboost {

namespace {

std::string fmt_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fmt_dir(const Vector& a) {
    if (a.size() == 0) return "0";
    std::string s = fmt_num(a[0]);
    for (Eigen::Index i = 1; i < a.size(); ++i) s += ";" + fmt_num(a[i]);
    return s;
}

// Projection of N(mu, cov) through direction a: scalar mean and variance.
std::pair<double, double> project(const TestFunction& f, const Vector& mu, const Matrix& cov) {
    if (f.direction.size() == 0) return {0.0, 0.0};
    if (f.direction.size() != mu.size())
        throw std::invalid_argument("test function direction does not match state dimension");
    const double m = f.direction.dot(mu);
    double v = f.direction.dot(cov * f.direction);
    if (v < 0.0) v = 0.0;  // symmetric-roundoff guard
    return {m, v};
}

}  // namespace

TestFunction TestFunction::indicator(const Vector& direction, double threshold) {
    TestFunction f;
    f.kind = Kind::kIndicator;
    f.direction = direction;
    f.threshold = threshold;
    f.sup_bound = 1.0;
    f.label = "ind(" + fmt_dir(direction) + "<=" + fmt_num(threshold) + ")";
    return f;
}

TestFunction TestFunction::polynomial(const Vector& direction, std::vector<double> coeffs) {
    if (coeffs.empty()) coeffs.push_back(0.0);
    TestFunction f;
    f.kind = Kind::kPolynomial;
    f.direction = direction;
    f.coeffs = std::move(coeffs);
    f.sup_bound = std::numeric_limits<double>::quiet_NaN();  // unbounded in general
    std::string cs = fmt_num(f.coeffs[0]);
    for (std::size_t k = 1; k < f.coeffs.size(); ++k) cs += ";" + fmt_num(f.coeffs[k]);
    f.label = "poly(" + cs + ")";
    return f;
}

TestFunction TestFunction::constant_one() {
    TestFunction f;
    f.kind = Kind::kPolynomial;
    f.direction = Vector();
    f.coeffs = {1.0};
    f.sup_bound = 1.0;
    f.label = "one";
    return f;
}

TestFunction TestFunction::smooth(std::function<double(const Vector&)> fn, std::string label) {
    TestFunction f;
    f.kind = Kind::kSmooth;
    f.smooth_fn = std::move(fn);
    f.sup_bound = std::numeric_limits<double>::quiet_NaN();
    f.label = std::move(label);
    return f;
}

double TestFunction::operator()(const Vector& x) const {
    switch (kind) {
        case Kind::kIndicator:
            return direction.dot(x) <= threshold ? 1.0 : 0.0;
        case Kind::kPolynomial: {
            const double s = direction.size() == 0 ? 0.0 : direction.dot(x);
            double acc = 0.0;
            for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * s + coeffs[k];
            return acc;
        }
        case Kind::kSmooth:
            return smooth_fn(x);
    }
    throw std::logic_error("unreachable");
}

bool TestFunction::is_constant_one() const {
    return kind == Kind::kPolynomial && coeffs.size() == 1 && coeffs[0] == 1.0;
}

double gaussian_raw_moment(int k, double m, double v) {
    if (k < 0) throw std::invalid_argument("gaussian_raw_moment: negative order");
    double prev2 = 1.0, prev1 = m;  // M_0, M_1
    if (k == 0) return prev2;
    if (k == 1) return prev1;
    for (int j = 2; j <= k; ++j) {
        const double cur = m * prev1 + (j - 1) * v * prev2;
        prev2 = prev1;
        prev1 = cur;
    }
    return prev1;
}

double gaussian_expectation(const TestFunction& f, const Vector& mu, const Matrix& cov) {
    switch (f.kind) {
        case TestFunction::Kind::kIndicator: {
            const auto [m, v] = project(f, mu, cov);
            if (v <= 1e-300) return m <= f.threshold ? 1.0 : 0.0;
            return normal_cdf((f.threshold - m) / std::sqrt(v));
        }
        case TestFunction::Kind::kPolynomial: {
            if (f.coeffs.size() > 5)
                throw std::invalid_argument("gaussian_expectation: polynomial degree > 4");
            const auto [m, v] = project(f, mu, cov);
            double acc = 0.0;
            for (std::size_t k = 0; k < f.coeffs.size(); ++k)
                acc += f.coeffs[k] * gaussian_raw_moment(static_cast<int>(k), m, v);
            return acc;
        }
        case TestFunction::Kind::kSmooth:
            throw std::invalid_argument(
                "gaussian_expectation: no closed form for generic smooth f");
    }
    throw std::logic_error("unreachable");
}

double ReferenceLaw::expectation(const TestFunction& f, const Vector& x0, double T) const {
    if (f.is_constant_one()) return 1.0;
    if (kind == Kind::kGaussian) return gaussian_expectation(f, mean(x0, T), cov(x0, T));

    // Lognormal branch (1-d geometric model).
    if (x0.size() != 1 || x0[0] <= 0.0)
        throw std::invalid_argument("lognormal reference needs scalar x0 > 0");
    if (f.direction.size() != 1)
        throw std::invalid_argument("lognormal reference needs a scalar direction");
    const double c = f.direction[0];
    const double drift_log = (a - 0.5 * sigma * sigma) * T;
    const double sd_log = std::fabs(sigma) * std::sqrt(T);
    if (f.kind == TestFunction::Kind::kPolynomial) {
        if (f.coeffs.size() > 5)
            throw std::invalid_argument("lognormal reference: polynomial degree > 4");
        double acc = 0.0, cpow = 1.0;
        for (std::size_t k = 0; k < f.coeffs.size(); ++k) {
            const double kk = static_cast<double>(k);
            // E[X^k] = x0^k exp(k a T + k(k-1) sigma^2 T / 2)
            const double mom =
                std::pow(x0[0], kk) * std::exp(kk * a * T + 0.5 * kk * (kk - 1) * sigma * sigma * T);
            acc += f.coeffs[k] * cpow * mom;
            cpow *= c;
        }
        return acc;
    }
    if (f.kind == TestFunction::Kind::kIndicator) {
        const double K = f.threshold;
        if (c == 0.0) return 0.0 <= K ? 1.0 : 0.0;
        const double bound = K / c;  // P(X <= bound) if c > 0, P(X >= bound) if c < 0
        double p_le;
        if (bound <= 0.0) {
            p_le = 0.0;
        } else if (sd_log <= 1e-300) {
            p_le = x0[0] * std::exp(a * T) <= bound ? 1.0 : 0.0;
        } else {
            p_le = normal_cdf((std::log(bound / x0[0]) - drift_log) / sd_log);
        }
        return c > 0.0 ? p_le : 1.0 - p_le;
    }
    throw std::invalid_argument("lognormal reference: unsupported test function kind");
}

namespace {

VectorField constant_field(Vector v) {
    VectorField f;
    const Eigen::Index d = v.size();
    f.value = [v = std::move(v)](const Vector&, double, Vector& out) { out = v; };
    f.jacobian = [d](const Vector&, double, Matrix& out) { out = Matrix::Zero(d, d); };
    f.time_deriv = [d](const Vector&, double, Vector& out) { out = Vector::Zero(d); };
    return f;
}

VectorField linear_field(Matrix A) {
    VectorField f;
    f.value = [A](const Vector& x, double, Vector& out) { out = A * x; };
    f.jacobian = [A](const Vector&, double, Matrix& out) { out = A; };
    f.time_deriv = [d = A.rows()](const Vector&, double, Vector& out) { out = Vector::Zero(d); };
    return f;
}

void expect_params(const std::string& name, const std::vector<double>& p, std::size_t want) {
    if (p.size() != want)
        throw std::invalid_argument("model '" + name + "' expects " + std::to_string(want) +
                                    " parameter(s), got " + std::to_string(p.size()));
}

}  // namespace

SdeModel make_kinetic_model(std::vector<double> b_poly, double b_tslope,
                            std::vector<double> s_poly, double s_tslope) {
    if (b_poly.empty()) b_poly.push_back(0.0);
    if (s_poly.empty()) s_poly.push_back(0.0);
    auto peval = [](const std::vector<double>& c, double s) {
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * s + c[k];
        return acc;
    };
    auto pderiv = [](const std::vector<double>& c, double s) {
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) acc = acc * s + c[k] * static_cast<double>(k);
        return acc;
    };

    SdeModel m;
    m.name = "kinetic-example";
    m.dim = 2;
    m.noise_dim = 1;

    VectorField v0;
    v0.value = [=](const Vector& x, double t, Vector& out) {
        out.resize(2);
        out[0] = peval(b_poly, x[0]) + b_tslope * t;
        out[1] = x[0];
    };
    v0.jacobian = [=](const Vector& x, double, Matrix& out) {
        out.setZero(2, 2);
        out(0, 0) = pderiv(b_poly, x[0]);
        out(1, 0) = 1.0;
    };
    v0.time_deriv = [=](const Vector&, double, Vector& out) {
        out.resize(2);
        out[0] = b_tslope;
        out[1] = 0.0;
    };
    m.drift = v0;

    VectorField v1;
    v1.value = [=](const Vector& x, double t, Vector& out) {
        out.resize(2);
        out[0] = peval(s_poly, x[0]) + s_tslope * t;
        out[1] = 0.0;
    };
    v1.jacobian = [=](const Vector& x, double, Matrix& out) {
        out.setZero(2, 2);
        out(0, 0) = pderiv(s_poly, x[0]);
    };
    v1.time_deriv = [=](const Vector&, double, Vector& out) {
        out.resize(2);
        out[0] = s_tslope;
        out[1] = 0.0;
    };
    m.diffusion = {v1};
    return m;
}

BuiltinModel builtin_model(const std::string& name, const std::vector<double>& params) {
    BuiltinModel out;
    if (name == "brownian") {
        int d = 1;
        if (params.size() == 1) {
            d = static_cast<int>(params[0]);
            if (d < 1 || params[0] != d)
                throw std::invalid_argument("brownian: dimension must be a positive integer");
        } else if (!params.empty()) {
            expect_params(name, params, 1);
        }
        SdeModel m;
        m.name = name;
        m.dim = m.noise_dim = d;
        m.drift = constant_field(Vector::Zero(d));
        for (int i = 0; i < d; ++i) {
            Vector e = Vector::Zero(d);
            e[i] = 1.0;
            m.diffusion.push_back(constant_field(e));
        }
        AffineView av;
        av.A = [d](double) { return Matrix::Zero(d, d); };
        av.c = [d](double) { return Vector::Zero(d); };
        av.B = [d](double) { return Matrix::Identity(d, d); };
        m.affine = av;
        out.model = std::move(m);
        ReferenceLaw law;
        law.kind = ReferenceLaw::Kind::kGaussian;
        law.mean = [](const Vector& x0, double) { return x0; };
        law.cov = [d](const Vector&, double T) { return T * Matrix::Identity(d, d); };
        out.law = law;
        return out;
    }
    if (name == "linear-ou") {
        expect_params(name, params, 2);
        const double a = params[0], sigma = params[1];
        SdeModel m;
        m.name = name;
        m.dim = m.noise_dim = 1;
        m.drift = linear_field(Matrix::Constant(1, 1, a));
        m.diffusion = {constant_field(Vector::Constant(1, sigma))};
        AffineView av;
        av.A = [a](double) { return Matrix::Constant(1, 1, a); };
        av.c = [](double) { return Vector::Zero(1); };
        av.B = [sigma](double) { return Matrix::Constant(1, 1, sigma); };
        m.affine = av;
        out.model = std::move(m);
        ReferenceLaw law;
        law.kind = ReferenceLaw::Kind::kGaussian;
        law.mean = [a](const Vector& x0, double T) { return Vector::Constant(1, x0[0] * std::exp(a * T)); };
        law.cov = [a, sigma](const Vector&, double T) {
            const double v = (a == 0.0) ? sigma * sigma * T
                                        : sigma * sigma * (std::exp(2.0 * a * T) - 1.0) / (2.0 * a);
            return Matrix::Constant(1, 1, v);
        };
        out.law = law;
        return out;
    }
    if (name == "geometric") {
        expect_params(name, params, 2);
        const double a = params[0], sigma = params[1];
        SdeModel m;
        m.name = name;
        m.dim = m.noise_dim = 1;
        m.drift = linear_field(Matrix::Constant(1, 1, a));
        m.diffusion = {linear_field(Matrix::Constant(1, 1, sigma))};
        m.geometric = GeometricView{a, sigma};
        out.model = std::move(m);
        ReferenceLaw law;
        law.kind = ReferenceLaw::Kind::kLognormal;
        law.a = a;
        law.sigma = sigma;
        out.law = law;
        return out;
    }
    if (name == "kinetic-example") {
        expect_params(name, params, 4);
        out.model = make_kinetic_model({params[0], params[1]}, 0.0, {params[2], params[3]}, 0.0);
        return out;
    }
    if (name == "rank-deficient") {
        if (!params.empty()) expect_params(name, params, 0);
        SdeModel m;
        m.name = name;
        m.dim = 2;
        m.noise_dim = 1;
        m.drift = constant_field(Vector::Zero(2));
        Vector e1 = Vector::Zero(2);
        e1[0] = 1.0;
        m.diffusion = {constant_field(e1)};
        AffineView av;
        av.A = [](double) { return Matrix::Zero(2, 2); };
        av.c = [](double) { return Vector::Zero(2); };
        av.B = [e1](double) { return Matrix(e1); };
        m.affine = av;
        out.model = std::move(m);
        ReferenceLaw law;
        law.kind = ReferenceLaw::Kind::kGaussian;
        law.mean = [](const Vector& x0, double) { return x0; };
        law.cov = [](const Vector&, double T) {
            Matrix c = Matrix::Zero(2, 2);
            c(0, 0) = T;
            return c;
        };
        out.law = law;
        return out;
    }
    throw std::invalid_argument("unknown model '" + name +
                                "' (expected brownian, linear-ou, geometric, kinetic-example, "
                                "rank-deficient)");
}

}  // namespace gridboost
