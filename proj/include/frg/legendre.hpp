#pragma once

#include "frg/action.hpp"

#include <string>
#include <vector>

namespace frg {

/// One-variable convex function sampled on an increasing grid.
struct ConvexFunctionTable {
    Eigen::VectorXd args;
    Eigen::VectorXd values;
};

struct ConvexityReport {
    double min_second_difference = 0.0;
    bool pass = false;
};

/// Minimum second divided difference over the table; passes iff >= -tol.
ConvexityReport convexity_check(const ConvexFunctionTable& f, double tol = 1e-8);

/// Convex conjugate f*(y) = sup_x [x y - f(x)] by exhaustive grid sup with
/// local quadratic refinement; output grid spans the slope range of f.
/// Throws on non-convex input.
ConvexFunctionTable legendre_transform(const ConvexFunctionTable& f);

/// Conjugate evaluated at a single point (same grid sup + refinement).
double legendre_transform_at(const ConvexFunctionTable& f, double y);

struct ChainLink {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool asserted = false; // false: report-only
    bool pass = false;     // meaningful when asserted
};

struct BijectionReport {
    std::vector<ChainLink> links;
    bool all_asserted_pass() const;
};

/// Audit of the chain  lnZ[J] -> Pi (Legendre) -> candidate input density
/// e^(-Pi)/Z0 -> moments, against moments from source derivatives of the
/// same lnZ. Zero-dimensional (single-site) models only.
BijectionReport bijection_roundtrip(const BareActionParams& params);

} // namespace frg
