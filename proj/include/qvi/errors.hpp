#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qvi {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};
struct MeshError : Error {
    using Error::Error;
};
struct GeometryError : Error {
    using Error::Error;
};
struct AssemblyError : Error {
    using Error::Error;
};
struct EvaluationError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ReferenceValidationError : Error {
    using Error::Error;
};

/// Thrown when the fixed-point loop exhausts max_iters; carries the
/// residual history so callers can inspect the stall.
struct NonConvergenceError : Error {
    NonConvergenceError(const std::string& msg, std::vector<double> res_w, std::vector<double> res_q)
        : Error(msg), residuals_w(std::move(res_w)), residuals_q(std::move(res_q)) {}
    std::vector<double> residuals_w;
    std::vector<double> residuals_q;
};

} // namespace qvi
