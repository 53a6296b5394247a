#include "frg/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace frg {

LatticeSpec::LatticeSpec(int dim_, int n_, double a_)
    : dim(dim_), sites_per_dim(dim_ == 0 ? 1 : n_), spacing(dim_ == 0 ? 1.0 : a_) {
    if (dim < 0)
        throw std::invalid_argument("lattice: dim must be >= 0");
    if (dim > 0 && sites_per_dim < 1)
        throw std::invalid_argument("lattice: sites_per_dim must be >= 1");
    if (spacing <= 0.0)
        throw std::invalid_argument("lattice: spacing must be positive");
    volume_ = 1;
    cell_ = 1.0;
    for (int mu = 0; mu < dim; ++mu) {
        volume_ *= sites_per_dim;
        cell_ *= spacing;
    }
}

Eigen::VectorXi LatticeSpec::site_coords(Eigen::Index site) const {
    Eigen::VectorXi c(dim);
    for (int mu = dim - 1; mu >= 0; --mu) {
        c[mu] = static_cast<int>(site % sites_per_dim);
        site /= sites_per_dim;
    }
    return c;
}

Eigen::Index LatticeSpec::site_index(const Eigen::VectorXi& coords) const {
    Eigen::Index idx = 0;
    for (int mu = 0; mu < dim; ++mu) {
        int c = coords[mu] % sites_per_dim;
        if (c < 0)
            c += sites_per_dim;
        idx = idx * sites_per_dim + c;
    }
    return idx;
}

Eigen::Index LatticeSpec::neighbor(Eigen::Index site, int mu, int step) const {
    Eigen::VectorXi c = site_coords(site);
    c[mu] += step;
    return site_index(c);
}

FieldConfig::FieldConfig(const LatticeSpec& spec, Eigen::VectorXd v)
    : lattice(spec), values(std::move(v)) {
    if (values.size() != lattice.volume())
        throw std::invalid_argument("field: value count must equal site count");
}

FieldConfig FieldConfig::zero(const LatticeSpec& spec) {
    return FieldConfig(spec, Eigen::VectorXd::Zero(spec.volume()));
}

FieldConfig FieldConfig::constant(const LatticeSpec& spec, double c) {
    return FieldConfig(spec, Eigen::VectorXd::Constant(spec.volume(), c));
}

Eigen::VectorXd momentum_components(const LatticeSpec& spec, const MomentumVector& p) {
    Eigen::VectorXd out(spec.dim);
    for (int mu = 0; mu < spec.dim; ++mu)
        out[mu] = 2.0 * std::numbers::pi * p.modes[mu] / (spec.sites_per_dim * spec.spacing);
    return out;
}

double lattice_p_squared(const LatticeSpec& spec, const MomentumVector& p) {
    double s = 0.0;
    for (int mu = 0; mu < spec.dim; ++mu) {
        double arg = 2.0 * std::numbers::pi * p.modes[mu] / spec.sites_per_dim;
        s += (2.0 - 2.0 * std::cos(arg)) / (spec.spacing * spec.spacing);
    }
    return s;
}

MomentumVector negate(const LatticeSpec& spec, const MomentumVector& p) {
    MomentumVector q;
    q.modes = p.modes;
    for (int mu = 0; mu < spec.dim; ++mu)
        q.modes[mu] = (spec.sites_per_dim - p.modes[mu]) % spec.sites_per_dim;
    return q;
}

std::vector<MomentumVector> momentum_grid(const LatticeSpec& spec) {
    std::vector<MomentumVector> grid(spec.volume());
    for (Eigen::Index i = 0; i < spec.volume(); ++i)
        grid[i].modes = spec.site_coords(i);
    return grid;
}

Eigen::Index momentum_index(const LatticeSpec& spec, const MomentumVector& p) {
    if (p.modes.size() != spec.dim)
        throw std::invalid_argument("momentum: dimension mismatch");
    for (int mu = 0; mu < spec.dim; ++mu)
        if (p.modes[mu] < 0 || p.modes[mu] >= spec.sites_per_dim)
            throw std::invalid_argument("momentum: mode index off the dual lattice");
    return spec.site_index(p.modes);
}

double momentum_dot_site(const LatticeSpec& spec, const MomentumVector& p, Eigen::Index site) {
    Eigen::VectorXi x = spec.site_coords(site);
    double s = 0.0;
    for (int mu = 0; mu < spec.dim; ++mu)
        s += static_cast<double>(p.modes[mu]) * x[mu];
    return 2.0 * std::numbers::pi * s / spec.sites_per_dim;
}

Eigen::VectorXcd dft_forward(const LatticeSpec& spec, const Eigen::VectorXcd& values) {
    if (values.size() != spec.volume())
        throw std::invalid_argument("dft: dimension mismatch");
    const auto grid = momentum_grid(spec);
    Eigen::VectorXcd out(spec.volume());
    for (Eigen::Index ip = 0; ip < spec.volume(); ++ip) {
        Complex acc(0.0, 0.0);
        for (Eigen::Index x = 0; x < spec.volume(); ++x) {
            double phase = momentum_dot_site(spec, grid[ip], x);
            acc += values[x] * std::polar(1.0, -phase);
        }
        out[ip] = acc * spec.cell();
    }
    return out;
}

Eigen::VectorXcd dft_forward(const FieldConfig& field) {
    return dft_forward(field.lattice, field.values.cast<Complex>());
}

Eigen::VectorXcd dft_inverse(const LatticeSpec& spec, const Eigen::VectorXcd& ftilde) {
    if (ftilde.size() != spec.volume())
        throw std::invalid_argument("dft: dimension mismatch");
    const auto grid = momentum_grid(spec);
    Eigen::VectorXcd out(spec.volume());
    const double norm = 1.0 / (static_cast<double>(spec.volume()) * spec.cell());
    for (Eigen::Index x = 0; x < spec.volume(); ++x) {
        Complex acc(0.0, 0.0);
        for (Eigen::Index ip = 0; ip < spec.volume(); ++ip) {
            double phase = momentum_dot_site(spec, grid[ip], x);
            acc += ftilde[ip] * std::polar(1.0, phase);
        }
        out[x] = acc * norm;
    }
    return out;
}

FieldConfig lattice_convolve(const FieldConfig& f, const Eigen::VectorXd& kernel) {
    const LatticeSpec& spec = f.lattice;
    if (kernel.size() != spec.volume())
        throw std::invalid_argument("convolve: kernel size mismatch");
    Eigen::VectorXd out(spec.volume());
    for (Eigen::Index x = 0; x < spec.volume(); ++x) {
        Eigen::VectorXi cx = spec.site_coords(x);
        double acc = 0.0;
        for (Eigen::Index y = 0; y < spec.volume(); ++y) {
            Eigen::VectorXi d = cx - spec.site_coords(y);
            acc += kernel[spec.site_index(d)] * f.values[y];
        }
        out[x] = acc * spec.cell();
    }
    return FieldConfig(spec, std::move(out));
}

} // namespace frg
