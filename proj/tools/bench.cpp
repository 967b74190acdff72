// Kernel benchmark: OpenMP chunked kernels against their serial references.
// The two paths are required to agree bit-for-bit; this binary reports how
// much the parallel ones actually buy on the current machine.

#include "gridboost/compiler.hpp"
#include "gridboost/estimator.hpp"
#include "gridboost/oracle.hpp"
#include "gridboost/study.hpp"

#include <chrono>
#include <cstdio>

using namespace gridboost;

namespace {

template <typename F>
double time_once(F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
    BuiltinModel bm = builtin_model("linear-ou", {-1.0, 1.0});
    const SchemeTransition scheme = euler_transition(bm.model);
    const TestFunction f = TestFunction::indicator(Vector::Ones(1), 0.0);
    const Vector x0 = Vector::Ones(1);
    InnovationSpec innov;
    innov.dim = 1;

    OrderParams p;
    p.nu = Rational(3);
    p.alpha = Rational(1);
    p.n = 4;
    p.T = 1.0;
    const CompiledOperator op = compile_operator(p);

    std::printf("operator: nu=%s n=%d terms=%zu (pre-merge %llu)\n", to_string(op.nu).c_str(),
                op.n, op.terms.size(), static_cast<unsigned long long>(op.pre_merge_terms));

    EstimatorConfig ec;
    ec.replicates = 200000;
    ec.strategy = Strategy::kEnumerate;
    ec.seed = 7;

    EstimatorResult serial, parallel;
    const double t_serial = time_once([&] {
        serial = estimate_serial(op, bm.model, scheme, f, x0, innov, ec);
    });
    const double t_parallel = time_once([&] {
        parallel = estimate(op, bm.model, scheme, f, x0, innov, ec);
    });
    std::printf("estimate   M=%llu: serial %.3fs (%.2f Mrep/s) | omp %.3fs (%.2f Mrep/s) | "
                "speedup %.2fx | bitwise %s\n",
                static_cast<unsigned long long>(ec.replicates), t_serial,
                ec.replicates / t_serial / 1e6, t_parallel, ec.replicates / t_parallel / 1e6,
                t_serial / t_parallel, serial.value == parallel.value ? "equal" : "DIFFER");

    // oracle term loop on a fatter operator
    p.nu = Rational(4);
    p.n = 8;
    const CompiledOperator big = compile_operator(p);
    double v_serial = 0.0, v_parallel = 0.0;
    const double o_serial = time_once([&] {
        for (int rep = 0; rep < 20; ++rep)
            v_serial = evaluate_exact(big, bm.model, f, x0, {}, false);
    });
    const double o_parallel = time_once([&] {
        for (int rep = 0; rep < 20; ++rep)
            v_parallel = evaluate_exact(big, bm.model, f, x0, {}, true);
    });
    std::printf("oracle terms=%zu x20: serial %.3fs | omp %.3fs | speedup %.2fx | bitwise %s\n",
                big.terms.size(), o_serial, o_parallel, o_serial / o_parallel,
                v_serial == v_parallel ? "equal" : "DIFFER");
    return 0;
}
