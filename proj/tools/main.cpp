// gridboost CLI: compile boosted operators, run single estimates, convergence
// studies and Hormander-condition scans, all driven by a key=value config.
//
// Exit codes: 0 success, 2 bad config / bad usage, 3 numerical failure.

#include "gridboost/compiler.hpp"
#include "gridboost/config.hpp"
#include "gridboost/errors.hpp"
#include "gridboost/fields.hpp"
#include "gridboost/study.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace gridboost;

struct CommonFlags {
    std::string config_path;
    std::optional<std::int64_t> seed;
    std::string out_path;
    std::string mode;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_mode) {
    cmd->add_option("--config", flags.config_path, "key = value config file")->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--out", flags.out_path, "write output here instead of stdout");
    if (with_mode)
        cmd->add_option("--mode", flags.mode, "oracle | enumerate | sample")
            ->check(CLI::IsMember({"oracle", "enumerate", "sample", "stratified"}));
}

Config load_config(const CommonFlags& flags) {
    Config cfg = Config::parse_file(flags.config_path);
    return cfg;
}

void emit(const CommonFlags& flags, const std::string& text) {
    if (!flags.out_path.empty()) {
        std::ofstream out(flags.out_path);
        if (!out) throw ConfigError("cannot open output file '" + flags.out_path + "'");
        out << text;
        return;
    }
    std::cout << text;
}

StudyConfig study_from(const CommonFlags& flags) {
    const Config cfg = load_config(flags);
    StudyConfig sc = StudyConfig::from_config(cfg);
    if (flags.seed) sc.seed = static_cast<std::uint64_t>(*flags.seed);
    if (!flags.mode.empty()) sc.mode = flags.mode;
    return sc;
}

int cmd_compile(const CommonFlags& flags) {
    const Config cfg = load_config(flags);
    StudyConfig sc = StudyConfig::from_config(cfg);
    if (sc.nus.size() != 1)
        throw ConfigError("compile needs exactly one nu (got " + std::to_string(sc.nus.size()) +
                          ")");
    if (sc.ns.size() != 1)
        throw ConfigError("compile needs exactly one n (got " + std::to_string(sc.ns.size()) +
                          ")");
    OrderParams p;
    p.nu = sc.nus[0];
    p.alpha = sc.alpha;
    p.n = sc.ns[0];
    p.T = sc.T;
    p.term_cap = sc.term_cap;
    emit(flags, serialize_operator(compile_operator(p)));
    return 0;
}

int cmd_estimate(const CommonFlags& flags) {
    StudyConfig sc = study_from(flags);
    if (sc.nus.size() != 1 || sc.ns.size() != 1)
        throw ConfigError("estimate needs exactly one nu and one n");
    emit(flags, write_report(run_study(sc)));
    return 0;
}

int cmd_converge(const CommonFlags& flags) {
    StudyConfig sc = study_from(flags);
    if (!sc.law) {
        for (const auto& f : sc.fs)
            if (!f.is_constant_one())
                throw ConfigError(
                    "converge needs a model with a reference law (or f = one) to measure "
                    "errors");
    }
    emit(flags, write_report(run_study(sc)));
    return 0;
}

int cmd_hormander(const CommonFlags& flags) {
    const Config cfg = load_config(flags);
    const std::string model_name = cfg.get_string("model");
    std::vector<double> params;
    if (cfg.has("params")) params = cfg.get_double_list("params");
    SdeModel model;
    try {
        model = builtin_model(model_name, params).model;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const int L = static_cast<int>(cfg.get_int("L", 1));
    auto box = [&](const char* key, double fallback) {
        Vector v(model.dim);
        if (cfg.has(key)) {
            const auto vals = cfg.get_double_list(key);
            if (static_cast<int>(vals.size()) != model.dim)
                throw ConfigError(std::string(key) + " dimension does not match the model");
            for (int i = 0; i < model.dim; ++i) v[i] = vals[static_cast<std::size_t>(i)];
        } else {
            v.setConstant(fallback);
        }
        return v;
    };
    const Vector lo = box("box_lo", -1.0), hi = box("box_hi", 1.0);
    const double t0 = cfg.get_double("t_min", 0.0), t1 = cfg.get_double("t_max", 1.0);
    const int samples = static_cast<int>(cfg.get_int("samples", 256));
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    if (flags.seed) seed = static_cast<std::uint64_t>(*flags.seed);

    ScanReport rep;
    try {
        rep = hormander_scan(model, L, lo, hi, t0, t1, samples, seed);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    std::string out;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "# hormander model=%s L=%d samples=%d min=%.17g\n",
                  model_name.c_str(), L, samples, rep.min_value);
    out += buf;
    out += "x,t,value\n";
    for (const auto& row : rep.rows) {
        std::string xs;
        for (Eigen::Index i = 0; i < row.x.size(); ++i) {
            if (i) xs += ';';
            std::snprintf(buf, sizeof(buf), "%.17g", row.x[i]);
            xs += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", row.t, row.value);
        out += xs + buf;
    }
    emit(flags, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boosted weak-order SDE toolkit"};
    app.require_subcommand(1);

    CommonFlags compile_flags, estimate_flags, converge_flags, hormander_flags;
    CLI::App* compile_cmd = app.add_subcommand("compile", "compile and print a boosted operator");
    add_common(compile_cmd, compile_flags, false);
    CLI::App* estimate_cmd = app.add_subcommand("estimate", "evaluate one (nu, n) cell");
    add_common(estimate_cmd, estimate_flags, true);
    CLI::App* converge_cmd = app.add_subcommand("converge", "run a convergence study");
    add_common(converge_cmd, converge_flags, true);
    CLI::App* hormander_cmd =
        app.add_subcommand("hormander", "scan the spanning functional over a box");
    add_common(hormander_cmd, hormander_flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (compile_cmd->parsed()) return cmd_compile(compile_flags);
        if (estimate_cmd->parsed()) return cmd_estimate(estimate_flags);
        if (converge_cmd->parsed()) return cmd_converge(converge_flags);
        if (hormander_cmd->parsed()) return cmd_hormander(hormander_flags);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
