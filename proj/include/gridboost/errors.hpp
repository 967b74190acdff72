#pragma once

#include <stdexcept>
#include <string>

namespace gridboost {

// Bad user input: unknown keys, malformed values, inconsistent run requests.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A computation produced non-finite values or hit an internal cap.
// The CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gridboost
