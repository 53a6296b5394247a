#pragma once

#include "frg/lattice.hpp"

namespace frg {

enum class RegulatorFamily { Litim, Exponential };

/// IR regulator R_k(p) at scale k, normalized so R_k(0) = k^2.
struct RegulatorSpec {
    RegulatorFamily family = RegulatorFamily::Litim;
    double scale = 0.0; // k
    LatticeSpec lattice;

    RegulatorSpec() = default;
    RegulatorSpec(RegulatorFamily fam, double k, const LatticeSpec& spec);
};

/// R_k(p). Litim: (k^2 - phat^2) theta(k^2 - phat^2).
/// Exponential: phat^2 / (exp(phat^2/k^2) - 1).
double regulator_value(const RegulatorSpec& spec, const MomentumVector& p);
double regulator_value_psq(const RegulatorSpec& spec, double p_squared);

/// dR_k(p)/dk, analytic.
double regulator_k_derivative(const RegulatorSpec& spec, const MomentumVector& p);
double regulator_k_derivative_psq(const RegulatorSpec& spec, double p_squared);

/// Position-space kernel Rhat_k(u), one entry per displacement (site indexing).
Eigen::VectorXd regulator_position_kernel(const RegulatorSpec& spec);

/// Layer regulator term, evaluated spectrally:
///   T = sum_p R_k(p) [phi_a~(-p) - phi~(-p)/2] phi~(p) / (N^dim a^dim).
double regulator_term(const FieldConfig& phi, const FieldConfig& phi_a, const RegulatorSpec& spec);

} // namespace frg
