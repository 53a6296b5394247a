#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

namespace frg {

/// Gauss-Hermite rule for weight exp(-x^2): nodes and log-weights.
struct HermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd log_weights;
};

/// Nodes/weights by Golub-Welsch on the Jacobi matrix; cached per order.
const HermiteRule& gauss_hermite(int order);

struct TensorQuadratureOptions {
    double tol = 1e-11;   // absolute tolerance on the log-integral between doublings
    int initial_order = 16;
    int max_order = 0;    // 0: pick a cap from the variable count
};

/// log of integral over R^n of exp(log_density(phi)) d^n phi, by iterated
/// Gauss-Hermite with adaptive order doubling; quadrature nodes live on
/// phi = basis * x, so a basis shaped like the covariance square root keeps
/// coupled quadratic densities isotropic in x.
double log_integral(const Eigen::MatrixXd& basis,
                    const std::function<double(const Eigen::VectorXd&)>& log_density,
                    TensorQuadratureOptions opts = {});

/// Normalized expectation  < g > = int g exp(ld) / int exp(ld).
std::complex<double>
expectation(const Eigen::MatrixXd& basis,
            const std::function<double(const Eigen::VectorXd&)>& log_density,
            const std::function<std::complex<double>(const Eigen::VectorXd&)>& g,
            TensorQuadratureOptions opts = {});

/// Componentwise expectations of a vector-valued observable (single pass).
Eigen::VectorXcd
expectation_vector(const Eigen::MatrixXd& basis,
                   const std::function<double(const Eigen::VectorXd&)>& log_density,
                   const std::function<Eigen::VectorXcd(const Eigen::VectorXd&)>& g,
                   Eigen::Index g_size, TensorQuadratureOptions opts = {});

} // namespace frg
