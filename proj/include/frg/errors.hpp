#pragma once

#include <stdexcept>
#include <string>

namespace frg {

/// Singular denominator or non-convergence while integrating the flow.
struct FlowBreakdown : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A brute-force oracle was asked for more sites / derivatives than it supports.
struct ScaleExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Quadrature or optimization failed to converge to tolerance.
struct ConvergenceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace frg
