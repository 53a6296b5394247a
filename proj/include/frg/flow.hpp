#pragma once

#include "frg/action.hpp"
#include "frg/regulator.hpp"

#include <variant>
#include <vector>

namespace frg {

/// Gaussian-exact representation of the scale-dependent effective functional:
/// Pi[phi] = 1/2 phi^T kernel phi + linear.phi + constant.
struct QuadraticFunctional {
    Eigen::MatrixXd kernel;
    Eigen::VectorXd linear;
    double constant = 0.0;
};

/// Local-potential representation: Pi[phi] = a^dim sum_x U(phi(x)) (plus the
/// bare kinetic term for dim >= 1). Exact in zero dimensions.
struct GridPotential {
    Eigen::VectorXd phi_nodes; // strictly increasing, symmetric about 0
    Eigen::VectorXd u_values;

    double value(double phi) const;
    double first_derivative(double phi) const;
    double second_derivative(double phi) const;
    /// U'' at every node (5-point stencils, one-sided at the edges).
    Eigen::VectorXd curvature_nodes() const;
};

using Functional = std::variant<QuadraticFunctional, GridPotential>;

struct FlowState {
    double k = 0.0;
    LatticeSpec lattice;
    Functional functional;
};

/// Pi_k evaluated on a field configuration.
double functional_value(const FlowState& state, const FieldConfig& phi_a);

/// Functional derivative dPi/dphi_a(x) as a per-site field.
Eigen::VectorXd functional_gradient(const FlowState& state, const FieldConfig& phi_a);

/// Second functional derivative as a site-space matrix. For GridPotential the
/// field must be constant (local-potential truncation) and inside the grid.
Eigen::MatrixXd functional_hessian(const FlowState& state, const FieldConfig& phi_a);

/// dPi_k/dk in the same representation as the state: for QuadraticFunctional
/// only the constant flows; for GridPotential, per node
///   dU/dk = (1 / 2 N^dim) sum_p dR_k(p)/dk / (phat^2 + U''(phi) + R_k(p)).
/// Throws FlowBreakdown when a denominator is not positive.
Functional wetterich_rhs(const FlowState& state, RegulatorFamily family);

struct FlowStepControl {
    int steps = 400;      // logarithmic k-grid points between Lambda and k_min
    double tol = 1e-10;   // per-step error target for adaptive halving
    bool store_states = true;
};

struct TrajectoryPoint {
    double k;
    double curvature_zero; // U''(0), or the zero-mode kernel eigenvalue
    double constant;       // U(0), or the quadratic constant
    double step_error;
};

struct FlowResult {
    FlowState endpoint;
    std::vector<TrajectoryPoint> trajectory;   // one row per grid point
    std::vector<FlowState> states;             // aligned with trajectory when stored
    double error_estimate = 0.0;
};

/// Integrate the flow from state.k down to k_min, explicit RK4 in
/// t = ln(k/Lambda) on a uniform grid with adaptive step halving.
FlowResult integrate_flow(const FlowState& initial, RegulatorFamily family, double k_min,
                          FlowStepControl control = {});

struct GridOptions {
    int nodes = 129;
    double halfwidth_sigmas = 6.0; // grid on [-w, w], w = sigmas * (m^2 + lambda)^(-1/2)
};

/// Pi_Lambda = S plus the one-loop constant 1/2 ln((phat^2 + S'' + R_Lambda)/2pi)
/// per mode, which matches the Gaussian effective functional exactly.
FlowState initial_flow_state_grid(const BareActionParams& params, RegulatorFamily family,
                                  double lambda_uv, GridOptions grid = {});
FlowState initial_flow_state_quadratic(const BareActionParams& params, RegulatorFamily family,
                                       double lambda_uv);

/// Lambda^2 >= 100 max(m^2, lambda^(2/3)).
bool uv_scale_validated(const BareActionParams& params, double lambda_uv);

/// Exact effective potential by quadrature + Legendre sup over the source:
/// U(phi) = sup_j [ j phi V - ln Z[j] ] / V  on the given nodes. <= 2 sites.
GridPotential effective_action_oracle(const BareActionParams& params,
                                      const Eigen::VectorXd& phi_nodes);

} // namespace frg
