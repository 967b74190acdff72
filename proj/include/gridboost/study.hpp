#pragma once

#include "gridboost/compiler.hpp"
#include "gridboost/config.hpp"
#include "gridboost/estimator.hpp"
#include "gridboost/model.hpp"
#include "gridboost/oracle.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace gridboost {

// A convergence study: for each (nu, n) pair build the boosted operator and
// evaluate it for every test function, in one of four modes:
//   oracle      exact Gaussian/moment evaluation (affine or geometric models)
//   enumerate   Monte Carlo, every replicate covers all terms
//   sample      Monte Carlo, replicates importance-sample single terms
//   stratified  Monte Carlo, replicates allocated per refinement depth
struct StudyConfig {
    SdeModel model;
    std::optional<ReferenceLaw> law;
    SchemeTransition scheme;  // defaults to euler_transition(model) in from_config
    double T = 1.0;
    Vector x0;
    std::vector<Rational> nus;
    Rational alpha{1};
    std::int64_t beta = 4;
    std::vector<int> ns;
    std::string mode = "oracle";
    std::vector<TestFunction> fs;
    std::uint64_t replicates = 100000;
    std::uint64_t seed = 0;
    int threads = 0;
    CouplingMode coupling = CouplingMode::kAuto;
    std::optional<double> theta;  // smoothing exponent; base step is T/n
    InnovationSpec innovations;
    std::uint64_t term_cap = 1000000;

    static StudyConfig from_config(const Config& cfg);
};

struct StudyRow {
    Rational nu{1};
    int n = 0;
    std::string mode;
    Vector x0;
    std::string f_id;
    double estimate = 0.0;
    double reference = std::numeric_limits<double>::quiet_NaN();
    double abs_error = std::numeric_limits<double>::quiet_NaN();
    double std_error = 0.0;
    std::uint64_t terms = 0;
    double runtime_ms = 0.0;
};

struct SlopeFit {
    Rational nu{1};
    double slope = std::numeric_limits<double>::quiet_NaN();
    int points = 0;  // rows that passed the error > 4 * stderr filter
};

struct OrderInfo {
    Rational nu{1};
    std::int64_t kappa = 0;
    std::int64_t q_star = 0;
    std::vector<std::pair<int, double>> t_reg;  // (n, regularization time)
};

struct ConvergenceReport {
    std::string model_name;
    std::string mode;
    std::vector<StudyRow> rows;
    std::vector<SlopeFit> slopes;
    std::vector<OrderInfo> orders;
};

// Least-squares slope of log|err| against log n, sign-flipped so the value is
// the measured order.  Points with err <= 4 * se (noise floor) are dropped;
// fewer than 2 surviving points yields NaN.
SlopeFit fit_order(const Rational& nu, const std::vector<std::tuple<int, double, double>>& n_err_se);

ConvergenceReport run_study(const StudyConfig& cfg);

// The 21-threshold indicator family spanning mean +- 3 sd of the reference
// law projected on `direction`; the max error over the family is the
// total-variation proxy tracked by studies.
std::vector<TestFunction> tv_indicator_family(const ReferenceLaw& law, const Vector& x0, double T,
                                              const Vector& direction);

// CSV with '#' metadata lines; parse_report round-trips what write_report
// emits (rows, slopes, orders).
std::string write_report(const ConvergenceReport& rep);
ConvergenceReport parse_report(const std::string& text);

}  // namespace gridboost
