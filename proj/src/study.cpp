#include "gridboost/study.hpp"

#include "gridboost/orders.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace gridboost {

namespace {

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_x0(const Vector& x0) {
    std::string s;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        if (i) s += ';';
        s += fmt17(x0[i]);
    }
    return s;
}

Vector parse_x0(const std::string& s) {
    std::vector<double> vals;
    std::string cur;
    for (char c : s + ";") {
        if (c == ';') {
            if (!cur.empty()) vals.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    Vector out(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

Vector to_vector(const std::vector<double>& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

}  // namespace

std::vector<TestFunction> tv_indicator_family(const ReferenceLaw& law, const Vector& x0, double T,
                                              const Vector& direction) {
    // mean and sd of the projected reference law via first two moments
    TestFunction m1 = TestFunction::polynomial(direction, {0.0, 1.0});
    TestFunction m2 = TestFunction::polynomial(direction, {0.0, 0.0, 1.0});
    const double mean = law.expectation(m1, x0, T);
    const double var = law.expectation(m2, x0, T) - mean * mean;
    const double sd = std::sqrt(std::max(var, 0.0));
    if (!(sd > 0.0))
        throw ConfigError("tv family: degenerate reference law (zero spread)");
    std::vector<TestFunction> fs;
    const int half = 10;  // 21 thresholds, mean - 3 sd .. mean + 3 sd
    for (int k = -half; k <= half; ++k) {
        const double K = mean + 3.0 * sd * static_cast<double>(k) / static_cast<double>(half);
        fs.push_back(TestFunction::indicator(direction, K));
    }
    return fs;
}

StudyConfig StudyConfig::from_config(const Config& cfg) {
    StudyConfig sc;
    const std::string model_name = cfg.get_string("model");
    std::vector<double> params;
    if (cfg.has("params")) params = cfg.get_double_list("params");
    BuiltinModel bm;
    try {
        bm = builtin_model(model_name, params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    sc.model = std::move(bm.model);
    sc.law = std::move(bm.law);
    sc.scheme = euler_transition(sc.model);

    sc.T = cfg.get_double("T", 1.0);
    if (!(sc.T > 0.0)) throw ConfigError("T must be > 0");
    if (cfg.has("x0")) {
        sc.x0 = to_vector(cfg.get_double_list("x0"));
    } else {
        sc.x0 = Vector::Ones(sc.model.dim);
    }
    if (sc.x0.size() != sc.model.dim)
        throw ConfigError("x0 dimension does not match the model");

    sc.nus = cfg.has("nu") ? cfg.get_rational_list("nu") : std::vector<Rational>{Rational(1)};
    for (const auto& nu : sc.nus)
        if (nu.num <= 0) throw ConfigError("nu must be > 0");
    sc.alpha = cfg.has("alpha") ? cfg.get_rational("alpha") : Rational(1);
    if (sc.alpha.num <= 0) throw ConfigError("alpha must be > 0");
    sc.beta = cfg.get_int("beta", default_beta(sc.alpha));
    if (sc.beta < 1) throw ConfigError("beta must be >= 1");
    sc.ns = cfg.has("n") ? cfg.get_int_list("n") : std::vector<int>{2, 4, 8, 16};
    if (sc.ns.empty()) throw ConfigError("n list must not be empty");
    for (std::size_t i = 0; i < sc.ns.size(); ++i) {
        if (sc.ns[i] < 2) throw ConfigError("every n must be >= 2");
        if (i > 0 && sc.ns[i] <= sc.ns[i - 1])
            throw ConfigError("n list must be strictly increasing");
    }

    sc.mode = cfg.get_string("mode", "oracle");
    if (sc.mode != "oracle" && sc.mode != "enumerate" && sc.mode != "sample" &&
        sc.mode != "stratified")
        throw ConfigError("mode must be oracle, enumerate, sample or stratified");

    const std::string fkind = cfg.get_string("f", "indicator");
    Vector dir;
    if (cfg.has("f_direction")) {
        dir = to_vector(cfg.get_double_list("f_direction"));
        if (dir.size() != sc.model.dim)
            throw ConfigError("f_direction dimension does not match the model");
    } else {
        dir = Vector::Zero(sc.model.dim);
        dir[0] = 1.0;
    }
    if (fkind == "indicator") {
        sc.fs = {TestFunction::indicator(dir, cfg.get_double("f_threshold", 0.0))};
    } else if (fkind == "poly") {
        if (!cfg.has("f_coeffs")) throw ConfigError("f = poly requires f_coeffs");
        const auto coeffs = cfg.get_double_list("f_coeffs");
        if (coeffs.size() > 5) throw ConfigError("f_coeffs: degree must be <= 4");
        sc.fs = {TestFunction::polynomial(dir, coeffs)};
    } else if (fkind == "one") {
        sc.fs = {TestFunction::constant_one()};
    } else if (fkind == "tv-grid") {
        if (!sc.law) throw ConfigError("f = tv-grid requires a model with a reference law");
        sc.fs = tv_indicator_family(*sc.law, sc.x0, sc.T, dir);
    } else {
        throw ConfigError("f must be indicator, poly, one or tv-grid");
    }

    sc.replicates = static_cast<std::uint64_t>(cfg.get_int("M", 100000));
    if (cfg.get_int("M", 100000) <= 0) throw ConfigError("M must be > 0");
    sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    sc.threads = static_cast<int>(cfg.get_int("threads", 0));
    const std::string coupling = cfg.get_string("coupling", "auto");
    if (coupling == "auto")
        sc.coupling = CouplingMode::kAuto;
    else if (coupling == "on")
        sc.coupling = CouplingMode::kOn;
    else if (coupling == "off")
        sc.coupling = CouplingMode::kOff;
    else
        throw ConfigError("coupling must be auto, on or off");

    if (cfg.has("theta")) {
        const std::string t = cfg.get_string("theta");
        if (t == "auto") {
            sc.theta = -1.0;  // resolved per nu in run_study
        } else {
            sc.theta = cfg.get_double("theta");
            if (!(*sc.theta > 0.0)) throw ConfigError("theta must be > 0 (or 'auto')");
        }
    }

    InnovationSpec innov;
    innov.dim = sc.model.noise_dim;
    const std::string ikind = cfg.get_string("innovation", "gaussian");
    if (ikind == "gaussian") {
        innov.kind = InnovationSpec::Kind::kGaussian;
    } else if (ikind == "truncated") {
        innov.kind = InnovationSpec::Kind::kTruncatedGaussian;
        innov.radius = cfg.get_double("innovation_radius", 3.0);
    } else if (ikind == "mixture") {
        innov.kind = InnovationSpec::Kind::kMixture;
        innov.eps = cfg.get_double("innovation_eps", 0.1);
        innov.ball_radius = cfg.get_double("innovation_ball_radius", 1.0);
        if (cfg.has("innovation_center"))
            innov.center = to_vector(cfg.get_double_list("innovation_center"));
    } else {
        throw ConfigError("innovation must be gaussian, truncated or mixture");
    }
    sc.innovations = innov;

    sc.term_cap = static_cast<std::uint64_t>(cfg.get_int("term_cap", 1000000));
    return sc;
}

SlopeFit fit_order(const Rational& nu,
                   const std::vector<std::tuple<int, double, double>>& n_err_se) {
    SlopeFit fit;
    fit.nu = nu;
    std::vector<std::pair<double, double>> pts;  // (log n, log err)
    for (const auto& [n, err, se] : n_err_se) {
        if (!std::isfinite(err) || err <= 0.0) continue;
        if (err <= 4.0 * se) continue;  // indistinguishable from Monte Carlo noise
        pts.emplace_back(std::log(static_cast<double>(n)), std::log(err));
    }
    fit.points = static_cast<int>(pts.size());
    if (pts.size() < 2) return fit;
    double sx = 0, sy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
    }
    const double mx = sx / pts.size(), my = sy / pts.size();
    double num = 0, den = 0;
    for (const auto& [x, y] : pts) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    fit.slope = -num / den;  // error ~ n^{-slope}
    return fit;
}

ConvergenceReport run_study(const StudyConfig& cfg) {
    ConvergenceReport rep;
    rep.model_name = cfg.model.name;
    rep.mode = cfg.mode;

    if (cfg.mode == "oracle")
        for (const auto& f : cfg.fs)
            if (!oracle_supports(cfg.model, f))
                throw ConfigError("oracle mode cannot evaluate model '" + cfg.model.name +
                                  "' with f '" + f.label + "'");

    for (const auto& nu : cfg.nus) {
        const int m0 = m_order(0, nu, cfg.alpha);
        OrderInfo info;
        info.nu = nu;
        info.kappa = kappa_smoothness(0, nu, cfg.alpha, cfg.beta);
        info.q_star = q_star(nu, cfg.alpha, cfg.beta);
        for (int n : cfg.ns)
            info.t_reg.emplace_back(n, regularization_time(nu, cfg.alpha, n, cfg.T));
        rep.orders.push_back(std::move(info));

        double theta = 0.0;
        bool smooth_on = false;
        if (cfg.theta) {
            smooth_on = true;
            theta = *cfg.theta < 0.0 ? nu.to_double() + static_cast<double>(m0) : *cfg.theta;
            const double floor_theta = nu.to_double() + static_cast<double>(m0);
            if (theta < floor_theta - 1e-12)
                throw ConfigError("theta must be >= nu + m(0, nu) = " +
                                  std::to_string(floor_theta));
        }

        std::vector<std::tuple<int, double, double>> slope_pts;
        for (int n : cfg.ns) {
            OrderParams op_params;
            op_params.nu = nu;
            op_params.alpha = cfg.alpha;
            op_params.n = n;
            op_params.T = cfg.T;
            op_params.term_cap = cfg.term_cap;
            const CompiledOperator op = compile_operator(op_params);

            std::optional<SmoothingSpec> smoothing;
            if (smooth_on) smoothing = SmoothingSpec{theta, cfg.T / static_cast<double>(n)};

            double worst_err = -1.0, worst_se = 0.0;
            bool have_err = false;
            for (const auto& f : cfg.fs) {
                StudyRow row;
                row.nu = nu;
                row.n = n;
                row.mode = cfg.mode;
                row.x0 = cfg.x0;
                row.f_id = f.label;
                row.terms = op.terms.size();

                const auto t0 = std::chrono::steady_clock::now();
                if (cfg.mode == "oracle") {
                    row.estimate = evaluate_exact(op, cfg.model, f, cfg.x0, smoothing);
                    row.std_error = 0.0;
                } else {
                    EstimatorConfig ec;
                    ec.replicates = cfg.replicates;
                    ec.strategy = cfg.mode == "enumerate" ? Strategy::kEnumerate
                                  : cfg.mode == "sample"  ? Strategy::kSample
                                                          : Strategy::kStratified;
                    ec.coupling = cfg.coupling;
                    ec.seed = cfg.seed;
                    ec.threads = cfg.threads;
                    ec.smoothing = smoothing;
                    const EstimatorResult er = estimate(op, cfg.model, cfg.scheme, f, cfg.x0,
                                                        cfg.innovations, ec);
                    row.estimate = er.value;
                    row.std_error = er.std_error;
                }
                row.runtime_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count();

                if (f.is_constant_one())
                    row.reference = 1.0;
                else if (cfg.law)
                    row.reference = cfg.law->expectation(f, cfg.x0, cfg.T);
                if (std::isfinite(row.reference)) {
                    row.abs_error = std::fabs(row.estimate - row.reference);
                    if (!have_err || row.abs_error > worst_err) {
                        have_err = true;
                        worst_err = row.abs_error;
                        worst_se = row.std_error;
                    }
                }
                rep.rows.push_back(std::move(row));
            }
            if (have_err) slope_pts.emplace_back(n, worst_err, worst_se);
        }
        rep.slopes.push_back(fit_order(nu, slope_pts));
    }
    return rep;
}

std::string write_report(const ConvergenceReport& rep) {
    std::string out;
    out += "# gridboost model=" + rep.model_name + " mode=" + rep.mode + "\n";
    for (const auto& o : rep.orders) {
        out += "# orders nu=" + to_string(o.nu) + " kappa=" + std::to_string(o.kappa) +
               " q_star=" + std::to_string(o.q_star) +
               " q_star_reading=kappa(1,q_i(0,nu));transposed-literal-undefined\n";
        for (const auto& [n, t] : o.t_reg)
            out += "# treg nu=" + to_string(o.nu) + " n=" + std::to_string(n) +
                   " value=" + fmt17(t) + "\n";
    }
    for (const auto& s : rep.slopes)
        out += "# slope nu=" + to_string(s.nu) + " slope=" + fmt17(s.slope) +
               " points=" + std::to_string(s.points) + "\n";
    out += "nu,n,mode,x0,f_id,estimate,reference,abs_error,stderr,terms,runtime_ms\n";
    for (const auto& r : rep.rows) {
        out += to_string(r.nu) + "," + std::to_string(r.n) + "," + r.mode + "," + join_x0(r.x0) +
               "," + r.f_id + "," + fmt17(r.estimate) + "," + fmt17(r.reference) + "," +
               fmt17(r.abs_error) + "," + fmt17(r.std_error) + "," + std::to_string(r.terms) +
               "," + fmt17(r.runtime_ms) + "\n";
    }
    return out;
}

ConvergenceReport parse_report(const std::string& text) {
    ConvergenceReport rep;
    std::istringstream in(text);
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line);
            std::string hash, tag;
            ls >> hash >> tag;
            std::map<std::string, std::string> kv;
            std::string tok;
            while (ls >> tok) {
                const auto eq = tok.find('=');
                if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
            }
            if (tag == "gridboost") {
                rep.model_name = kv["model"];
                rep.mode = kv["mode"];
            } else if (tag == "orders") {
                OrderInfo o;
                o.nu = parse_rational(kv.at("nu"));
                o.kappa = std::stoll(kv.at("kappa"));
                o.q_star = std::stoll(kv.at("q_star"));
                rep.orders.push_back(std::move(o));
            } else if (tag == "treg") {
                const Rational nu = parse_rational(kv.at("nu"));
                for (auto& o : rep.orders)
                    if (o.nu == nu)
                        o.t_reg.emplace_back(std::stoi(kv.at("n")), std::stod(kv.at("value")));
            } else if (tag == "slope") {
                SlopeFit s;
                s.nu = parse_rational(kv.at("nu"));
                s.slope = std::stod(kv.at("slope"));
                s.points = std::stoi(kv.at("points"));
                rep.slopes.push_back(s);
            }
            continue;
        }
        if (!saw_header) {
            if (line != "nu,n,mode,x0,f_id,estimate,reference,abs_error,stderr,terms,runtime_ms")
                throw ConfigError("report parse: unexpected header '" + line + "'");
            saw_header = true;
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 11) throw ConfigError("report parse: bad row '" + line + "'");
        StudyRow r;
        r.nu = parse_rational(cols[0]);
        r.n = std::stoi(cols[1]);
        r.mode = cols[2];
        r.x0 = parse_x0(cols[3]);
        r.f_id = cols[4];
        r.estimate = std::stod(cols[5]);
        r.reference = std::stod(cols[6]);
        r.abs_error = std::stod(cols[7]);
        r.std_error = std::stod(cols[8]);
        r.terms = static_cast<std::uint64_t>(std::stoll(cols[9]));
        r.runtime_ms = std::stod(cols[10]);
        rep.rows.push_back(std::move(r));
    }
    if (!saw_header) throw ConfigError("report parse: missing column header");
    return rep;
}

}  // namespace gridboost
