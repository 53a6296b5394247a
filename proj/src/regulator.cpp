#include "frg/regulator.hpp"

#include <cmath>
#include <stdexcept>

namespace frg {

RegulatorSpec::RegulatorSpec(RegulatorFamily fam, double k, const LatticeSpec& spec)
    : family(fam), scale(k), lattice(spec) {
    if (scale < 0.0)
        throw std::invalid_argument("regulator: scale must be nonnegative");
}

double regulator_value_psq(const RegulatorSpec& spec, double p_squared) {
    const double k = spec.scale;
    if (k == 0.0)
        return 0.0;
    switch (spec.family) {
    case RegulatorFamily::Litim:
        return p_squared < k * k ? k * k - p_squared : 0.0;
    case RegulatorFamily::Exponential: {
        if (p_squared == 0.0)
            return k * k; // limit of x/(e^(x/k^2)-1)
        double x = p_squared / (k * k);
        if (x > 500.0)
            return 0.0;
        return p_squared / std::expm1(x);
    }
    }
    return 0.0;
}

double regulator_value(const RegulatorSpec& spec, const MomentumVector& p) {
    return regulator_value_psq(spec, lattice_p_squared(spec.lattice, p));
}

double regulator_k_derivative_psq(const RegulatorSpec& spec, double p_squared) {
    const double k = spec.scale;
    if (k == 0.0)
        return 0.0;
    switch (spec.family) {
    case RegulatorFamily::Litim:
        return p_squared < k * k ? 2.0 * k : 0.0;
    case RegulatorFamily::Exponential: {
        if (p_squared == 0.0)
            return 2.0 * k;
        double x = p_squared / (k * k);
        if (x > 500.0)
            return 0.0;
        double em1 = std::expm1(x);
        return 2.0 * p_squared * p_squared * std::exp(x) / (k * k * k * em1 * em1);
    }
    }
    return 0.0;
}

double regulator_k_derivative(const RegulatorSpec& spec, const MomentumVector& p) {
    return regulator_k_derivative_psq(spec, lattice_p_squared(spec.lattice, p));
}

Eigen::VectorXd regulator_position_kernel(const RegulatorSpec& spec) {
    const LatticeSpec& lat = spec.lattice;
    const auto grid = momentum_grid(lat);
    Eigen::VectorXcd rk(lat.volume());
    for (Eigen::Index i = 0; i < lat.volume(); ++i)
        rk[i] = regulator_value(spec, grid[i]);
    // Rhat(u) = inverse transform of R_k without the forward a^dim measure
    Eigen::VectorXcd pos = dft_inverse(lat, rk);
    return pos.real();
}

double regulator_term(const FieldConfig& phi, const FieldConfig& phi_a, const RegulatorSpec& spec) {
    if (!(phi.lattice == phi_a.lattice) || !(phi.lattice == spec.lattice))
        throw std::invalid_argument("regulator_term: lattice mismatch");
    const LatticeSpec& lat = spec.lattice;
    const auto grid = momentum_grid(lat);
    Eigen::VectorXcd phi_t = dft_forward(phi);
    Eigen::VectorXcd g_t = dft_forward(FieldConfig(lat, phi_a.values - 0.5 * phi.values));
    const double norm = 1.0 / (static_cast<double>(lat.volume()) * lat.cell());
    Complex acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < lat.volume(); ++i) {
        Eigen::Index im = momentum_index(lat, negate(lat, grid[i]));
        acc += regulator_value(spec, grid[i]) * g_t[im] * phi_t[i];
    }
    return (acc * norm).real();
}

} // namespace frg
