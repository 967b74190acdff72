#include "gridboost/study.hpp"

#include <doctest.h>

#include <cmath>
#include <string>
#include <tuple>
#include <vector>

using namespace gridboost;

TEST_CASE("slope fit recovers synthetic rates exactly") {
    std::vector<std::tuple<int, double, double>> rows;
    for (const int n : {2, 4, 8, 16, 32}) rows.emplace_back(n, 3.7 * std::pow(n, -2.0), 0.0);
    const SlopeFit fit = fit_order(Rational(2), rows);
    CHECK(fit.points == 5);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-6));

    // fractional rate, nonzero but small noise
    rows.clear();
    for (const int n : {2, 4, 8, 16}) rows.emplace_back(n, 0.9 * std::pow(n, -1.5), 1e-9);
    CHECK(fit_order(Rational(1), rows).slope == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("slope fit drops noise-dominated rows") {
    std::vector<std::tuple<int, double, double>> rows;
    rows.emplace_back(2, 1e-1, 0.0);
    rows.emplace_back(4, 2.5e-2, 0.0);
    rows.emplace_back(8, 1e-3, 3e-4);   // err <= 4 se: dropped
    rows.emplace_back(16, 5e-4, 2e-4);  // dropped too
    const SlopeFit fit = fit_order(Rational(2), rows);
    CHECK(fit.points == 2);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-9));

    rows.resize(1);
    const SlopeFit too_few = fit_order(Rational(2), rows);
    CHECK(too_few.points == 1);
    CHECK(std::isnan(too_few.slope));

    // zero and negative errors never reach the log
    rows.clear();
    rows.emplace_back(2, 0.0, 0.0);
    rows.emplace_back(4, 1e-3, 0.0);
    CHECK(std::isnan(fit_order(Rational(1), rows).slope));
}

TEST_CASE("tv indicator family spans three reference deviations") {
    const BuiltinModel bm = builtin_model("linear-ou", {-1.0, 1.0});
    const Vector x0 = (Vector(1) << 1.0).finished();
    const Vector dir = (Vector(1) << 1.0).finished();
    const auto fs = tv_indicator_family(*bm.law, x0, 1.0, dir);
    REQUIRE(fs.size() == 21);

    const double mean = std::exp(-1.0);
    const double sd = std::sqrt((1.0 - std::exp(-2.0)) / 2.0);
    CHECK(fs.front().threshold == doctest::Approx(mean - 3.0 * sd).epsilon(1e-12));
    CHECK(fs.back().threshold == doctest::Approx(mean + 3.0 * sd).epsilon(1e-12));
    for (std::size_t i = 1; i < fs.size(); ++i) {
        CHECK(fs[i].threshold > fs[i - 1].threshold);
        CHECK(fs[i].label != fs[i - 1].label);
    }
}

TEST_CASE("study config parsing, defaults and validation") {
    const StudyConfig sc = StudyConfig::from_config(
        Config::parse_text("model = linear-ou\nparams = -1, 1\n", "t"));
    CHECK(sc.T == 1.0);
    CHECK(sc.x0.size() == 1);
    CHECK(sc.x0[0] == 1.0);
    CHECK(sc.nus.size() == 1);
    CHECK(sc.nus[0] == Rational(1));
    CHECK(sc.alpha == Rational(1));
    CHECK(sc.beta == 4);  // 2 alpha + 2
    CHECK(sc.ns == std::vector<int>{2, 4, 8, 16});
    CHECK(sc.mode == "oracle");
    CHECK(sc.fs.size() == 1);
    CHECK(sc.fs[0].kind == TestFunction::Kind::kIndicator);
    CHECK_FALSE(sc.theta.has_value());

    const StudyConfig tv = StudyConfig::from_config(Config::parse_text(
        "model = linear-ou\nparams = -1, 1\nf = tv-grid\nnu = 2\nn = 2, 4\n", "t"));
    CHECK(tv.fs.size() == 21);

    const StudyConfig th = StudyConfig::from_config(Config::parse_text(
        "model = linear-ou\nparams = -1, 1\ntheta = auto\n", "t"));
    REQUIRE(th.theta.has_value());
    CHECK(*th.theta == -1.0);  // sentinel: resolve to nu + m(0, nu) per nu

    CHECK_THROWS_AS(StudyConfig::from_config(Config::parse_text("model = nope\n", "t")),
                    ConfigError);
    CHECK_THROWS_AS(StudyConfig::from_config(Config::parse_text(
                        "model = linear-ou\nparams = -1, 1\nmode = magic\n", "t")),
                    ConfigError);
    CHECK_THROWS_AS(StudyConfig::from_config(Config::parse_text(
                        "model = linear-ou\nparams = -1, 1\nn = 4, 4\n", "t")),
                    ConfigError);
    CHECK_THROWS_AS(StudyConfig::from_config(Config::parse_text(
                        "model = linear-ou\nparams = -1, 1\nx0 = 1, 2\n", "t")),
                    ConfigError);
    CHECK_THROWS_AS(StudyConfig::from_config(Config::parse_text(
                        "model = kinetic-example\nparams = 1, -1, 2, 0\nf = tv-grid\n", "t")),
                    ConfigError);
}

TEST_CASE("config rejects unknown and duplicate keys with locations") {
    try {
        Config::parse_text("modle = brownian\n", "cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg:1") != std::string::npos);
        CHECK(std::string(e.what()).find("modle") != std::string::npos);
    }
    CHECK_THROWS_AS(Config::parse_text("model = a\nmodel = b\n", "cfg"), ConfigError);
    CHECK_THROWS_AS(Config::parse_text("model = \n", "cfg"), ConfigError);
    CHECK_THROWS_AS(Config::parse_text("model brownian\n", "cfg"), ConfigError);
    const Config ok = Config::parse_text("# comment\nmodel = brownian  # trailing\n\n", "cfg");
    CHECK(ok.get_string("model") == "brownian");
}

TEST_CASE("oracle study produces references, zero stderr and slopes") {
    StudyConfig sc = StudyConfig::from_config(Config::parse_text(
        "model = linear-ou\nparams = -1, 1\nnu = 1, 2\nn = 2, 4, 8\nf = indicator\n"
        "f_threshold = 0\n",
        "t"));
    const ConvergenceReport rep = run_study(sc);
    REQUIRE(rep.rows.size() == 6);
    for (const auto& row : rep.rows) {
        CHECK(row.std_error == 0.0);
        CHECK(std::isfinite(row.reference));
        CHECK(std::isfinite(row.abs_error));
        CHECK(row.f_id == "ind(1<=0)");
        CHECK(row.runtime_ms >= 0.0);
    }
    // errors shrink monotonically in n here
    CHECK(rep.rows[1].abs_error < rep.rows[0].abs_error);
    CHECK(rep.rows[2].abs_error < rep.rows[1].abs_error);

    REQUIRE(rep.slopes.size() == 2);
    CHECK(rep.slopes[0].slope > 0.5);
    CHECK(rep.slopes[1].slope > 1.3);  // three points only; the full gate runs elsewhere

    REQUIRE(rep.orders.size() == 2);
    CHECK(rep.orders[0].kappa == 4);
    CHECK(rep.orders[0].q_star == 4);
    CHECK(rep.orders[1].kappa == 8);
    CHECK(rep.orders[1].q_star == 8);
    REQUIRE(rep.orders[1].t_reg.size() == 3);
    CHECK(rep.orders[1].t_reg[1].second == doctest::Approx(0.25));

    // terms column mirrors the compiled operator
    CHECK(rep.rows[0].terms == 1);   // nu = 1
    CHECK(rep.rows[4].terms == 5);   // nu = 2, n = 4
}

TEST_CASE("constant-one study rows have exactly zero error") {
    StudyConfig sc = StudyConfig::from_config(Config::parse_text(
        "model = linear-ou\nparams = -1, 1\nnu = 2\nn = 2, 4\nf = one\n", "t"));
    const ConvergenceReport rep = run_study(sc);
    for (const auto& row : rep.rows) {
        CHECK(row.reference == 1.0);
        CHECK(row.abs_error <= 1e-12);
    }
}

TEST_CASE("monte carlo study tracks the oracle within its own error bars") {
    StudyConfig sc = StudyConfig::from_config(Config::parse_text(
        "model = linear-ou\nparams = -1, 1\nnu = 2\nn = 4\nf = indicator\nf_threshold = 0\n"
        "mode = enumerate\nM = 30000\nseed = 3\n",
        "t"));
    const ConvergenceReport mc = run_study(sc);
    sc.mode = "oracle";
    const ConvergenceReport ora = run_study(sc);
    REQUIRE(mc.rows.size() == 1);
    CHECK(mc.rows[0].std_error > 0.0);
    CHECK(std::abs(mc.rows[0].estimate - ora.rows[0].estimate) < 5.0 * mc.rows[0].std_error);
}

TEST_CASE("reports round-trip through the text form") {
    StudyConfig sc = StudyConfig::from_config(Config::parse_text(
        "model = linear-ou\nparams = -1, 1\nnu = 1, 2\nn = 2, 4, 8\nf = tv-grid\n", "t"));
    const ConvergenceReport rep = run_study(sc);
    const std::string text = write_report(rep);
    const ConvergenceReport back = parse_report(text);

    CHECK(back.model_name == rep.model_name);
    CHECK(back.mode == rep.mode);
    REQUIRE(back.rows.size() == rep.rows.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(back.rows[i].nu == rep.rows[i].nu);
        CHECK(back.rows[i].n == rep.rows[i].n);
        CHECK(back.rows[i].f_id == rep.rows[i].f_id);
        CHECK(back.rows[i].estimate == rep.rows[i].estimate);      // bitwise via %.17g
        CHECK(back.rows[i].reference == rep.rows[i].reference);
        CHECK(back.rows[i].abs_error == rep.rows[i].abs_error);
        CHECK(back.rows[i].std_error == rep.rows[i].std_error);
        CHECK(back.rows[i].terms == rep.rows[i].terms);
        CHECK(back.rows[i].x0 == rep.rows[i].x0);
    }
    REQUIRE(back.slopes.size() == rep.slopes.size());
    for (std::size_t i = 0; i < rep.slopes.size(); ++i) {
        CHECK(back.slopes[i].nu == rep.slopes[i].nu);
        CHECK(back.slopes[i].slope == rep.slopes[i].slope);
        CHECK(back.slopes[i].points == rep.slopes[i].points);
    }
    REQUIRE(back.orders.size() == rep.orders.size());
    for (std::size_t i = 0; i < rep.orders.size(); ++i) {
        CHECK(back.orders[i].kappa == rep.orders[i].kappa);
        CHECK(back.orders[i].q_star == rep.orders[i].q_star);
        CHECK(back.orders[i].t_reg == rep.orders[i].t_reg);
    }

    // the header is the documented column list, in order
    CHECK(text.find("nu,n,mode,x0,f_id,estimate,reference,abs_error,stderr,terms,runtime_ms") !=
          std::string::npos);
    // and the argument-order caveat travels with every report
    CHECK(text.find("q_star_reading=") != std::string::npos);
}

TEST_CASE("smoothing below the admissible exponent is rejected at run time") {
    StudyConfig sc = StudyConfig::from_config(Config::parse_text(
        "model = linear-ou\nparams = -1, 1\nnu = 2\nn = 4\ntheta = 1\n", "t"));
    CHECK_THROWS_AS(run_study(sc), ConfigError);  // nu + m(0, nu) = 4 > 1
}
