// End-to-end checks through the installed binary: every run goes through
// std::system with stdout/stderr captured to files under a scratch directory.

#include "gridboost/compiler.hpp"
#include "gridboost/study.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace gridboost;

namespace {

const char* kCli = GB_CLI_PATH;

fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("gb_cli_" + std::to_string(static_cast<long>(::getpid())));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch_dir() / name;
    std::ofstream out(p);
    REQUIRE(out.good());
    out << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = scratch_dir() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err = scratch_dir() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd =
        std::string(kCli) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    REQUIRE(raw != -1);
    REQUIRE(WIFEXITED(raw));
    r.code = WEXITSTATUS(raw);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

}  // namespace

TEST_CASE("compile output round-trips and matches the library") {
    const fs::path cfg = write_file("compile.cfg",
                                    "model = linear-ou\n"
                                    "params = -1, 1\n"
                                    "nu = 2\n"
                                    "n = 4\n"
                                    "T = 1\n");
    const RunResult r = run_cli("compile --config " + cfg.string());
    REQUIRE(r.code == 0);

    OrderParams p;
    p.nu = Rational(2);
    p.n = 4;
    p.T = 1.0;
    const CompiledOperator expect = compile_operator(p);
    CHECK(r.out == serialize_operator(expect));
    CHECK(parse_operator(r.out) == expect);

    // --out writes the same bytes to a file instead
    const fs::path dest = scratch_dir() / "op.txt";
    const RunResult r2 =
        run_cli("compile --config " + cfg.string() + " --out " + dest.string());
    REQUIRE(r2.code == 0);
    CHECK(r2.out.empty());
    CHECK(slurp(dest) == r.out);
}

TEST_CASE("first-order compile is the single identity-coefficient run") {
    const fs::path cfg = write_file("compile1.cfg",
                                    "model = brownian\nnu = 1\nn = 8\n");
    const RunResult r = run_cli("compile --config " + cfg.string());
    REQUIRE(r.code == 0);
    const CompiledOperator op = parse_operator(r.out);
    REQUIRE(op.terms.size() == 1);
    CHECK(op.terms[0].coeff == 1);
    REQUIRE(op.terms[0].program.segments.size() == 1);
    CHECK(op.terms[0].program.segments[0].level == 1);
    CHECK(op.terms[0].program.segments[0].steps == 8);
}

TEST_CASE("estimate in oracle mode reproduces the library value") {
    const fs::path cfg = write_file("estimate.cfg",
                                    "model = linear-ou\n"
                                    "params = -1, 1\n"
                                    "nu = 2\n"
                                    "n = 4\n"
                                    "f = indicator\n"
                                    "f_threshold = 0\n"
                                    "mode = oracle\n");
    const RunResult r = run_cli("estimate --config " + cfg.string());
    REQUIRE(r.code == 0);
    const ConvergenceReport rep = parse_report(r.out);
    REQUIRE(rep.rows.size() == 1);

    StudyConfig sc = StudyConfig::from_config(Config::parse_file(cfg.string()));
    const ConvergenceReport lib = run_study(sc);
    CHECK(rep.rows[0].estimate == lib.rows[0].estimate);  // %.17g round-trip is exact
    CHECK(rep.rows[0].reference == lib.rows[0].reference);
    CHECK(rep.rows[0].std_error == 0.0);
    CHECK(rep.rows[0].terms == lib.rows[0].terms);

    // --mode overrides the config's mode
    const RunResult rs =
        run_cli("estimate --config " + cfg.string() + " --mode sample --seed 5");
    REQUIRE(rs.code == 0);
    const ConvergenceReport srep = parse_report(rs.out);
    REQUIRE(srep.rows.size() == 1);
    CHECK(srep.rows[0].mode == "sample");
    CHECK(srep.rows[0].std_error > 0.0);
}

TEST_CASE("converge runs are reproducible except for timing") {
    const fs::path cfg = write_file("converge.cfg",
                                    "model = linear-ou\n"
                                    "params = -1, 1\n"
                                    "nu = 1, 2\n"
                                    "n = 2, 4\n"
                                    "f = indicator\n"
                                    "f_threshold = 0\n"
                                    "mode = enumerate\n"
                                    "M = 2000\n"
                                    "seed = 42\n");
    const RunResult a = run_cli("converge --config " + cfg.string());
    const RunResult b = run_cli("converge --config " + cfg.string());
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);

    const ConvergenceReport ra = parse_report(a.out);
    const ConvergenceReport rb = parse_report(b.out);
    REQUIRE(ra.rows.size() == 4);
    REQUIRE(rb.rows.size() == ra.rows.size());
    for (std::size_t i = 0; i < ra.rows.size(); ++i) {
        CHECK(ra.rows[i].nu == rb.rows[i].nu);
        CHECK(ra.rows[i].n == rb.rows[i].n);
        CHECK(ra.rows[i].f_id == rb.rows[i].f_id);
        CHECK(ra.rows[i].estimate == rb.rows[i].estimate);  // bitwise
        CHECK(ra.rows[i].reference == rb.rows[i].reference);
        CHECK(ra.rows[i].abs_error == rb.rows[i].abs_error);
        CHECK(ra.rows[i].std_error == rb.rows[i].std_error);
        CHECK(ra.rows[i].terms == rb.rows[i].terms);
        // runtime_ms is the one column allowed to differ between runs
    }
    REQUIRE(ra.slopes.size() == rb.slopes.size());
    const auto bits = [](double v) {
        std::uint64_t b = 0;
        std::memcpy(&b, &v, sizeof b);
        return b;
    };
    // bit-level equality so a NaN slope (all points under the noise floor at
    // this small M) still counts as reproduced
    for (std::size_t i = 0; i < ra.slopes.size(); ++i)
        CHECK(bits(ra.slopes[i].slope) == bits(rb.slopes[i].slope));
    CHECK(ra.model_name == "linear-ou");
    CHECK(ra.mode == "enumerate");
}

TEST_CASE("hormander scan exits cleanly and reports the degenerate minimum") {
    const fs::path cfg = write_file("horm.cfg",
                                    "model = rank-deficient\n"
                                    "L = 0\n"
                                    "samples = 32\n");
    const RunResult r = run_cli("hormander --config " + cfg.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# hormander model=rank-deficient L=0 samples=32 min=0\n") !=
          std::string::npos);
    CHECK(r.out.find("x,t,value\n") != std::string::npos);
    // 32 sample rows after the two header lines
    int lines = 0;
    for (char c : r.out)
        if (c == '\n') ++lines;
    CHECK(lines == 2 + 32);

    const fs::path cfg2 = write_file("horm2.cfg",
                                     "model = brownian\n"
                                     "L = 0\n"
                                     "samples = 16\n");
    const RunResult r2 = run_cli("hormander --config " + cfg2.string());
    REQUIRE(r2.code == 0);
    CHECK(r2.out.find("min=1\n") != std::string::npos);
}

TEST_CASE("usage and config failures exit 2, numerical failures exit 3") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("compile --help").code == 0);
    CHECK(run_cli("").code == 2);                       // missing subcommand
    CHECK(run_cli("compile").code == 2);                // missing --config
    CHECK(run_cli("frobnicate --config x").code == 2);  // unknown subcommand

    const RunResult missing = run_cli("compile --config " +
                                      (scratch_dir() / "does_not_exist.cfg").string());
    CHECK(missing.code == 2);
    CHECK(missing.err.find("config error") != std::string::npos);

    const fs::path bad_key = write_file("bad_key.cfg", "model = brownian\nbogus = 1\n");
    const RunResult rk = run_cli("compile --config " + bad_key.string());
    CHECK(rk.code == 2);
    CHECK(rk.err.find("bogus") != std::string::npos);

    const fs::path bad_mode = write_file("bad_mode.cfg",
                                         "model = linear-ou\nparams = -1, 1\nmode = magic\n");
    CHECK(run_cli("estimate --config " + bad_mode.string()).code == 2);

    // --mode flag itself validates its argument before the config is read
    const fs::path ok_cfg = write_file("ok.cfg", "model = linear-ou\nparams = -1, 1\n");
    CHECK(run_cli("estimate --config " + ok_cfg.string() + " --mode magic").code == 2);

    const fs::path cap = write_file("cap.cfg",
                                    "model = brownian\nnu = 3\nn = 16\nterm_cap = 100\n");
    const RunResult rc = run_cli("compile --config " + cap.string());
    CHECK(rc.code == 3);
    CHECK(rc.err.find("numerical error") != std::string::npos);
}
