#pragma once

#include "frg/lattice.hpp"
#include "frg/quadrature.hpp"

#include <Eigen/Dense>

namespace frg {

/// Quadratic + quartic scalar action
///   S = a^dim sum_x [ 1/2 (grad phi)^2 + 1/2 m^2 phi^2 + (lambda/4!) phi^4 ],
/// forward-difference gradient, periodic boundaries.
struct BareActionParams {
    double mass_sq = 1.0;
    double quartic = 0.0; // lambda, coupling of lambda phi^4 / 4!
    bool kinetic_enabled = true;
    LatticeSpec lattice;

    BareActionParams() = default;
    BareActionParams(double m2, double lam, const LatticeSpec& spec, bool kinetic = true);
};

/// External source, one real value per site; couples as a^dim sum_x J(x) phi(x).
struct SourceField {
    Eigen::VectorXd values;
};

double evaluate_action(const FieldConfig& cfg, const BareActionParams& params);

struct ActionDerivatives {
    SourceField gradient;    // dS / dphi(x), includes the a^dim measure
    Eigen::MatrixXd hessian; // d2S / dphi(x) dphi(y)
};
ActionDerivatives action_derivatives(const FieldConfig& cfg, const BareActionParams& params);

/// Quadratic (kinetic + mass) part of the Hessian; for lambda = 0 this is the
/// full precision matrix K with S = 1/2 phi^T K phi.
Eigen::MatrixXd quadratic_kernel(const BareActionParams& params);

/// ln of int Dphi exp(-S[phi] + a^dim J.phi) with Dphi = prod_x dphi_x,
/// by adaptive tensor-product Gauss-Hermite. Site count <= 6.
double log_partition_quadrature(const BareActionParams& params, const SourceField& source,
                                TensorQuadratureOptions opts = {});

/// Exact lambda = 0 evaluation through the spectral decomposition of the
/// kinetic + mass kernel. Throws on a singular kernel.
double log_partition_gaussian(const BareActionParams& params, const SourceField& source);

/// Quadrature node basis: inverse square root of the convexified curvature.
Eigen::MatrixXd quadrature_basis(const BareActionParams& params);

} // namespace frg
