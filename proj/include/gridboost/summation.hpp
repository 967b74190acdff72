#pragma once

#include <cmath>

namespace gridboost {

// Neumaier's compensated accumulator.  Reductions over terms and replicates
// always run in a fixed order through one of these, which is what makes
// results independent of thread count.
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    double value() const { return sum + comp; }
};

}  // namespace gridboost
