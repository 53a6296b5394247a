#pragma once

#include <Eigen/Dense>

namespace frg {

/// Finite-difference weights (Fornberg recursion): column m of the result
/// holds weights w with  f^(m)(x0) ~= sum_j w[j] f(x[j]),  for m = 0..max_m.
/// Nodes need not be uniform; exact for polynomials of degree < x.size().
Eigen::MatrixXd fd_weights(double x0, const Eigen::VectorXd& x, int max_m);

/// m-th derivative of tabulated data at x0 from a local window of
/// `window` nodes nearest to x0 (local polynomial interpolation).
double local_derivative(const Eigen::VectorXd& nodes, const Eigen::VectorXd& values,
                        double x0, int m, int window = 6);

} // namespace frg
