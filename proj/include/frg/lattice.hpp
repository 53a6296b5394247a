#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace frg {

using Complex = std::complex<double>;

/// Finite periodic hypercubic lattice. dim == 0 designates the single-site
/// model (one site, spacing 1, only the trivial momentum).
struct LatticeSpec {
    int dim = 0;
    int sites_per_dim = 1;
    double spacing = 1.0;

    LatticeSpec() = default;
    LatticeSpec(int dim_, int n_, double a_);

    Eigen::Index volume() const { return volume_; }
    double cell() const { return cell_; } // a^dim, the per-site measure
    bool operator==(const LatticeSpec&) const = default;

    Eigen::VectorXi site_coords(Eigen::Index site) const;
    Eigen::Index site_index(const Eigen::VectorXi& coords) const;
    /// Index of the site shifted by +1 (or -1) along direction mu.
    Eigen::Index neighbor(Eigen::Index site, int mu, int step) const;

  private:
    Eigen::Index volume_ = 1;
    double cell_ = 1.0;
};

/// Real scalar field, one value per site.
struct FieldConfig {
    LatticeSpec lattice;
    Eigen::VectorXd values;

    FieldConfig() = default;
    FieldConfig(const LatticeSpec& spec, Eigen::VectorXd v);
    static FieldConfig zero(const LatticeSpec& spec);
    static FieldConfig constant(const LatticeSpec& spec, double c);
};

/// Dual-lattice momentum, one integer mode index per dimension in [0, N).
struct MomentumVector {
    Eigen::VectorXi modes; // empty for dim == 0

    bool operator==(const MomentumVector&) const = default;
};

/// Physical momentum components 2*pi*n/(N*a).
Eigen::VectorXd momentum_components(const LatticeSpec& spec, const MomentumVector& p);

/// Lattice momentum squared: sum_mu (2 - 2 cos(2 pi n_mu / N)) / a^2.
double lattice_p_squared(const LatticeSpec& spec, const MomentumVector& p);

/// Negated momentum, modes reduced mod N.
MomentumVector negate(const LatticeSpec& spec, const MomentumVector& p);

/// All N^dim dual-lattice momenta, zero mode first, deterministic order
/// (same row-major order as site indexing).
std::vector<MomentumVector> momentum_grid(const LatticeSpec& spec);

/// Flat index of a momentum in the momentum_grid ordering.
Eigen::Index momentum_index(const LatticeSpec& spec, const MomentumVector& p);

/// Forward transform: ftilde(p) = a^dim sum_x exp(-i p.x) f(x),
/// ordered as momentum_grid.
Eigen::VectorXcd dft_forward(const FieldConfig& field);
Eigen::VectorXcd dft_forward(const LatticeSpec& spec, const Eigen::VectorXcd& values);

/// Inverse transform: f(x) = (1 / (N^dim a^dim)) sum_p exp(+i p.x) ftilde(p).
Eigen::VectorXcd dft_inverse(const LatticeSpec& spec, const Eigen::VectorXcd& ftilde);

/// Phase p.x for site x, in radians: 2 pi sum_mu n_mu m_mu / N.
double momentum_dot_site(const LatticeSpec& spec, const MomentumVector& p, Eigen::Index site);

/// Periodic convolution (f*K)(x) = a^dim sum_y K(x-y) f(y); the kernel is
/// indexed by displacement using the same site indexing as the field.
FieldConfig lattice_convolve(const FieldConfig& f, const Eigen::VectorXd& kernel);

} // namespace frg
