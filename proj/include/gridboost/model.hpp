#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridboost {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A time-dependent vector field on R^d.  value is mandatory; jacobian and
// time_deriv may be left empty, in which case consumers fall back to central
// differences.
struct VectorField {
    std::function<void(const Vector&, double, Vector&)> value;
    std::function<void(const Vector&, double, Matrix&)> jacobian;
    std::function<void(const Vector&, double, Vector&)> time_deriv;
};

// Exact-law view for models whose drift is affine in x and whose diffusion is
// constant in x:  drift(x,t) = A(t) x + c(t), diffusion matrix B(t) (d x N).
// Lets the oracle propagate Gaussian laws without sampling.
struct AffineView {
    std::function<Matrix(double)> A;
    std::function<Vector(double)> c;
    std::function<Matrix(double)> B;
};

// dX = a X dt + sigma X dW (1-d); closed moment recursions exist for the
// discretized chain, which is all the oracle needs for polynomial f.
struct GeometricView {
    double a = 0.0;
    double sigma = 0.0;
};

struct SdeModel {
    std::string name;
    int dim = 1;        // d
    int noise_dim = 1;  // N
    VectorField drift;                   // the Ito drift
    std::vector<VectorField> diffusion;  // one field per driving component
    // Declared, not verified: coefficients are smooth with bounded derivatives.
    bool coefficients_smooth_bounded = true;
    std::optional<AffineView> affine;
    std::optional<GeometricView> geometric;
};

// Test functions the pipeline understands.  Indicators are the point of the
// whole exercise (bounded measurable, nothing smooth about them); polynomials
// exist for oracle cross-checks and moment diagnostics.
struct TestFunction {
    enum class Kind { kIndicator, kPolynomial, kSmooth };

    Kind kind = Kind::kIndicator;
    Vector direction;            // projection a; scalar argument is s = a.x
    double threshold = 0.0;      // indicator: 1{s <= K}
    std::vector<double> coeffs;  // polynomial: sum_k coeffs[k] s^k, degree <= 4
    std::function<double(const Vector&)> smooth_fn;
    double sup_bound = 1.0;  // declared |f|_inf where meaningful
    std::string label;       // stable id used in CSV output

    static TestFunction indicator(const Vector& direction, double threshold);
    static TestFunction polynomial(const Vector& direction, std::vector<double> coeffs);
    static TestFunction constant_one();
    static TestFunction smooth(std::function<double(const Vector&)> fn, std::string label);

    double operator()(const Vector& x) const;
    bool is_constant_one() const;
};

// E f(X) for X ~ N(mu, cov), for the indicator / polynomial kinds (projected
// through f.direction these reduce to scalar Gaussian functionals).
double gaussian_expectation(const TestFunction& f, const Vector& mu, const Matrix& cov);

// Raw moment E[S^k] for scalar S ~ N(m, v), k >= 0, via the usual recursion
// M_k = m M_{k-1} + (k-1) v M_{k-2}.
double gaussian_raw_moment(int k, double m, double v);

// Closed-form law of the exact solution, where one exists, used as the
// reference in error columns and convergence fits.
struct ReferenceLaw {
    enum class Kind { kGaussian, kLognormal };
    Kind kind = Kind::kGaussian;
    // kGaussian
    std::function<Vector(const Vector&, double)> mean;
    std::function<Matrix(const Vector&, double)> cov;
    // kLognormal: X_T = x0 exp((a - sigma^2/2) T + sigma W_T)
    double a = 0.0;
    double sigma = 0.0;

    double expectation(const TestFunction& f, const Vector& x0, double T) const;
};

struct BuiltinModel {
    SdeModel model;
    std::optional<ReferenceLaw> law;
};

// name in {brownian, linear-ou, geometric, kinetic-example, rank-deficient};
// params: brownian [d=1], linear-ou [a, sigma], geometric [a, sigma],
// kinetic-example [b0, b1, s0, s1], rank-deficient [].
BuiltinModel builtin_model(const std::string& name, const std::vector<double>& params);

// General kinetic family used in tests: b(x1, t) = poly_b(x1) + bt * t,
// sigma(x1, t) = poly_s(x1) + st * t; V0 = (b, x1), V1 = (sigma, 0).
SdeModel make_kinetic_model(std::vector<double> b_poly, double b_tslope,
                            std::vector<double> s_poly, double s_tslope);

}  // namespace gridboost
