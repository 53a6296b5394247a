#include "frg/action.hpp"

#include "frg/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace frg {

BareActionParams::BareActionParams(double m2, double lam, const LatticeSpec& spec, bool kinetic)
    : mass_sq(m2), quartic(lam), kinetic_enabled(kinetic), lattice(spec) {
    if (quartic < 0.0)
        throw std::invalid_argument("action: quartic coupling must be nonnegative");
}

double evaluate_action(const FieldConfig& cfg, const BareActionParams& params) {
    if (!(cfg.lattice == params.lattice))
        throw std::invalid_argument("action: field lattice mismatch");
    if (!cfg.values.allFinite())
        throw std::invalid_argument("action: non-finite field");
    const LatticeSpec& spec = cfg.lattice;
    const double a = spec.spacing;
    double s = 0.0;
    for (Eigen::Index x = 0; x < spec.volume(); ++x) {
        double phi = cfg.values[x];
        double local = 0.5 * params.mass_sq * phi * phi +
                       params.quartic / 24.0 * phi * phi * phi * phi;
        if (params.kinetic_enabled) {
            for (int mu = 0; mu < spec.dim; ++mu) {
                double d = (cfg.values[spec.neighbor(x, mu, +1)] - phi) / a;
                local += 0.5 * d * d;
            }
        }
        s += local;
    }
    return s * spec.cell();
}

ActionDerivatives action_derivatives(const FieldConfig& cfg, const BareActionParams& params) {
    if (!(cfg.lattice == params.lattice))
        throw std::invalid_argument("action: field lattice mismatch");
    const LatticeSpec& spec = cfg.lattice;
    ActionDerivatives out;
    out.hessian = quadratic_kernel(params);
    out.gradient.values = out.hessian * cfg.values;
    const double cell = spec.cell();
    for (Eigen::Index x = 0; x < spec.volume(); ++x) {
        double phi = cfg.values[x];
        out.gradient.values[x] += cell * params.quartic / 6.0 * phi * phi * phi;
        out.hessian(x, x) += cell * params.quartic / 2.0 * phi * phi;
    }
    return out;
}

Eigen::MatrixXd quadratic_kernel(const BareActionParams& params) {
    const LatticeSpec& spec = params.lattice;
    const Eigen::Index v = spec.volume();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(v, v);
    const double cell = spec.cell();
    for (Eigen::Index x = 0; x < v; ++x) {
        k(x, x) += cell * params.mass_sq;
        if (params.kinetic_enabled) {
            for (int mu = 0; mu < spec.dim; ++mu) {
                Eigen::Index xp = spec.neighbor(x, mu, +1);
                double w = cell / (spec.spacing * spec.spacing);
                // bond term 1/2 (phi(x+mu) - phi(x))^2 / a^2 * a^dim
                k(x, x) += w;
                k(xp, xp) += w;
                k(x, xp) -= w;
                k(xp, x) -= w;
            }
        }
    }
    return k;
}

Eigen::MatrixXd quadrature_basis(const BareActionParams& params) {
    // Inverse square root of the convexified curvature: aligns the node grid
    // with the Gaussian covariance so coupled modes converge uniformly.
    const double cell = params.lattice.cell();
    Eigen::MatrixXd p = quadratic_kernel(params);
    p.diagonal().array() += cell * params.quartic;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
    Eigen::VectorXd inv_sqrt(es.eigenvalues().size());
    const double floor = 0.05 * cell;
    for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
        inv_sqrt[i] = 1.0 / std::sqrt(std::max(es.eigenvalues()[i], floor));
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

double log_partition_quadrature(const BareActionParams& params, const SourceField& source,
                                TensorQuadratureOptions opts) {
    const LatticeSpec& spec = params.lattice;
    if (spec.volume() > 6)
        throw ScaleExceeded("log_partition_quadrature: more than 6 sites");
    if (params.quartic == 0.0 && params.mass_sq <= 0.0)
        throw std::invalid_argument("log_partition_quadrature: unnormalizable action");
    if (source.values.size() != spec.volume())
        throw std::invalid_argument("log_partition_quadrature: source size mismatch");
    const double cell = spec.cell();
    auto log_density = [&](const Eigen::VectorXd& phi) {
        FieldConfig cfg(spec, phi);
        return -evaluate_action(cfg, params) + cell * source.values.dot(phi);
    };
    return log_integral(quadrature_basis(params), log_density, opts);
}

double log_partition_gaussian(const BareActionParams& params, const SourceField& source) {
    if (params.quartic != 0.0)
        throw std::invalid_argument("log_partition_gaussian: requires lambda = 0");
    const LatticeSpec& spec = params.lattice;
    if (source.values.size() != spec.volume())
        throw std::invalid_argument("log_partition_gaussian: source size mismatch");
    Eigen::MatrixXd k = quadratic_kernel(params);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    const double two_pi = 2.0 * std::numbers::pi;
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        double ev = es.eigenvalues()[i];
        if (ev <= 0.0)
            throw std::invalid_argument("log_partition_gaussian: kernel not positive definite");
        log_det += std::log(ev / two_pi);
    }
    // source enters as a^dim J, quadratic form in the kernel inverse
    Eigen::VectorXd j = spec.cell() * source.values;
    Eigen::VectorXd y = es.eigenvectors().transpose() * j;
    double quad = (y.array().square() / es.eigenvalues().array()).sum();
    return 0.5 * quad - 0.5 * log_det;
}

} // namespace frg
