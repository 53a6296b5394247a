#include "frg/quadrature.hpp"

#include "frg/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace frg {

namespace {

// log of the Christoffel weight 1 / sum_k p_k(x)^2 with p_k orthonormal
// w.r.t. exp(-x^2); the recurrence is rescaled so extreme nodes (where the
// eigenvector-based weights underflow to noise) stay accurate.
double log_christoffel_weight(double x, int order) {
    double p_prev = 0.0;
    double p = std::pow(std::numbers::pi, -0.25);
    double sum = p * p;
    double log_scale = 0.0;
    for (int k = 0; k < order - 1; ++k) {
        double next = (x * p - std::sqrt(k / 2.0) * p_prev) / std::sqrt((k + 1) / 2.0);
        p_prev = p;
        p = next;
        sum += p * p;
        double mag = std::max(std::abs(p), std::abs(p_prev));
        if (mag > 1e100) {
            p /= mag;
            p_prev /= mag;
            sum /= mag * mag;
            log_scale += std::log(mag);
        }
    }
    return -(std::log(sum) + 2.0 * log_scale);
}

HermiteRule compute_hermite(int order) {
    if (order < 1)
        throw std::invalid_argument("gauss_hermite: order must be >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) {
        double b = std::sqrt(i / 2.0);
        jacobi(i - 1, i) = b;
        jacobi(i, i - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    HermiteRule rule;
    rule.nodes = es.eigenvalues();
    rule.log_weights.resize(order);
    for (int i = 0; i < order; ++i)
        rule.log_weights[i] = log_christoffel_weight(rule.nodes[i], order);
    return rule;
}

const HermiteRule& cached_hermite(int order) {
    static std::mutex mu;
    static std::map<int, HermiteRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, compute_hermite(order)).first;
    return it->second;
}

int default_max_order(Eigen::Index n_vars) {
    switch (n_vars) {
    case 1: return 512;
    case 2: return 256;
    case 3: return 96;
    case 4: return 64;
    case 5: return 24;
    default: return 16;
    }
}

using VectorFn = std::function<Eigen::VectorXcd(const Eigen::VectorXd&)>;

struct Accumulated {
    double log_norm;                 // log of int exp(ld)
    Eigen::VectorXcd mean;           // int g exp(ld) / int exp(ld), if g given
};

// One full tensor-product pass at a fixed order.
Accumulated tensor_pass(const Eigen::MatrixXd& basis,
                        const std::function<double(const Eigen::VectorXd&)>& log_density,
                        const VectorFn* g, Eigen::Index g_size, int order) {
    const Eigen::Index n = basis.cols();
    const HermiteRule& rule = cached_hermite(order);

    const double log_scale = std::log(std::abs(basis.partialPivLu().determinant()));

    Eigen::VectorXi idx = Eigen::VectorXi::Zero(n);
    Eigen::VectorXd x(n), phi(n);

    // streaming log-sum-exp
    double shift = -std::numeric_limits<double>::infinity();
    double den = 0.0;
    Eigen::VectorXcd num = Eigen::VectorXcd::Zero(g_size);

    while (true) {
        double log_w = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            x[i] = rule.nodes[idx[i]];
            log_w += rule.log_weights[idx[i]] + x[i] * x[i];
        }
        phi.noalias() = basis * x;
        double t = log_w + log_density(phi);
        if (std::isfinite(t)) {
            if (t > shift) {
                double r = std::exp(shift - t);
                den *= r;
                num *= r;
                shift = t;
            }
            double e = std::exp(t - shift);
            den += e;
            if (g)
                num += (*g)(phi) * e;
        }
        // odometer
        Eigen::Index i = 0;
        for (; i < n; ++i) {
            if (++idx[i] < order)
                break;
            idx[i] = 0;
        }
        if (i == n)
            break;
        if (n == 0)
            break;
    }
    Accumulated out;
    out.log_norm = shift + std::log(den) + log_scale;
    out.mean = (g && den > 0.0) ? Eigen::VectorXcd(num / den)
                                : Eigen::VectorXcd(Eigen::VectorXcd::Zero(g_size));
    return out;
}

Accumulated adaptive(const Eigen::MatrixXd& basis,
                     const std::function<double(const Eigen::VectorXd&)>& log_density,
                     const VectorFn* g, Eigen::Index g_size,
                     TensorQuadratureOptions opts) {
    const int max_order = opts.max_order > 0 ? opts.max_order : default_max_order(basis.cols());
    int order = std::min(opts.initial_order, max_order);
    Accumulated prev = tensor_pass(basis, log_density, g, g_size, order);
    while (order < max_order) {
        order = std::min(2 * order, max_order);
        Accumulated cur = tensor_pass(basis, log_density, g, g_size, order);
        // Converge on the quantity actually returned: the normalization drifts
        // longer than the ratio it cancels out of.
        double delta = g ? (cur.mean - prev.mean).cwiseAbs().maxCoeff()
                         : std::abs(cur.log_norm - prev.log_norm);
        prev = cur;
        if (delta < opts.tol)
            return cur;
    }
    throw ConvergenceFailure("tensor quadrature: node doubling did not converge");
}

} // namespace

const HermiteRule& gauss_hermite(int order) { return cached_hermite(order); }

double log_integral(const Eigen::MatrixXd& basis,
                    const std::function<double(const Eigen::VectorXd&)>& log_density,
                    TensorQuadratureOptions opts) {
    return adaptive(basis, log_density, nullptr, 0, opts).log_norm;
}

std::complex<double>
expectation(const Eigen::MatrixXd& basis,
            const std::function<double(const Eigen::VectorXd&)>& log_density,
            const std::function<std::complex<double>(const Eigen::VectorXd&)>& g,
            TensorQuadratureOptions opts) {
    VectorFn wrapped = [&g](const Eigen::VectorXd& phi) {
        Eigen::VectorXcd v(1);
        v[0] = g(phi);
        return v;
    };
    return adaptive(basis, log_density, &wrapped, 1, opts).mean[0];
}

Eigen::VectorXcd
expectation_vector(const Eigen::MatrixXd& basis,
                   const std::function<double(const Eigen::VectorXd&)>& log_density,
                   const std::function<Eigen::VectorXcd(const Eigen::VectorXd&)>& g,
                   Eigen::Index g_size, TensorQuadratureOptions opts) {
    return adaptive(basis, log_density, &g, g_size, opts).mean;
}

} // namespace frg
