#pragma once

#include <stdexcept>
#include <string>

namespace halcurve {

// Bad inputs: malformed files, impossible configs, contract violations by the
// caller. The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures of the numerics themselves (non-convergence, singular systems that
// survive the ridge fallback, ...). The CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace halcurve
