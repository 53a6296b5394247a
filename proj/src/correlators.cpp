#include "frg/correlators.hpp"

#include "frg/errors.hpp"
#include "frg/interp.hpp"
#include "frg/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace frg {

namespace {

void validate_request(const LatticeSpec& lattice, const CorrelatorRequest& request) {
    const Eigen::Index n = static_cast<Eigen::Index>(request.momenta.size());
    if (n < 1 || n > 6)
        throw std::invalid_argument("correlator request: need 1 <= n <= 6 momenta");
    if (request.connected && n > 4)
        throw std::invalid_argument("correlator request: connected parts stop at n = 4");
    for (const auto& p : request.momenta)
        if (p.modes.size() != lattice.dim)
            throw std::invalid_argument("correlator request: momentum off the dual lattice");
}

Complex amplitude(const FieldConfig& cfg, const MomentumVector& p) {
    const LatticeSpec& lat = cfg.lattice;
    Complex sum(0.0, 0.0);
    for (Eigen::Index x = 0; x < lat.volume(); ++x) {
        double phase = momentum_dot_site(lat, p, x);
        sum += cfg.values[x] * std::polar(1.0, -phase);
    }
    return lat.cell() * sum;
}

// All partitions of {0..n-1}, each block as a bitmask.
void partitions_rec(int n, int next, std::vector<int>& blocks,
                    std::vector<std::vector<int>>& out) {
    if (next == n) {
        out.push_back(blocks);
        return;
    }
    const std::size_t n_blocks = blocks.size();
    for (std::size_t i = 0; i < n_blocks; ++i) {
        blocks[i] |= 1 << next;
        partitions_rec(n, next + 1, blocks, out);
        blocks[i] &= ~(1 << next);
    }
    blocks.push_back(1 << next);
    partitions_rec(n, next + 1, blocks, out);
    blocks.pop_back();
}

std::vector<std::vector<int>> set_partitions(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> blocks;
    partitions_rec(n, 0, blocks, out);
    return out;
}

// Joint cumulant from the table of subset moments (indexed by bitmask).
Complex cumulant_from_moments(int n, const std::vector<Complex>& moment_by_mask) {
    Complex kappa(0.0, 0.0);
    for (const auto& partition : set_partitions(n)) {
        double coeff = 1.0;
        for (std::size_t b = 1; b < partition.size(); ++b)
            coeff *= -static_cast<double>(b);
        Complex prod(coeff, 0.0);
        for (int mask : partition)
            prod *= moment_by_mask[mask];
        kappa += prod;
    }
    return kappa;
}

// Phase matrix: row j, column x holds a^dim * exp(-i p_j . x), so that
// amplitudes = phases * phi.
Eigen::MatrixXcd phase_matrix(const LatticeSpec& lattice,
                              const std::vector<MomentumVector>& momenta) {
    const Eigen::Index n = static_cast<Eigen::Index>(momenta.size());
    Eigen::MatrixXcd phases(n, lattice.volume());
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index x = 0; x < lattice.volume(); ++x)
            phases(j, x) = lattice.cell() *
                           std::polar(1.0, -momentum_dot_site(lattice, momenta[j], x));
    return phases;
}

} // namespace

Eigen::VectorXcd conv_stack_G(const FieldConfig& phi_a,
                              const std::vector<MomentumVector>& momenta) {
    const LatticeSpec& lat = phi_a.lattice;
    for (const auto& p : momenta)
        if (p.modes.size() != lat.dim)
            throw std::invalid_argument("conv_stack_G: momentum off the dual lattice");
    Eigen::VectorXcd g = phi_a.values.cast<Complex>();
    for (const auto& p : momenta) {
        Complex amp = amplitude(phi_a, p);
        for (Eigen::Index x = 0; x < lat.volume(); ++x)
            g[x] *= amp * std::polar(1.0, momentum_dot_site(lat, p, x));
    }
    return g;
}

std::complex<double> h_functional(const FieldConfig& phi_a, const CorrelatorRequest& request) {
    validate_request(phi_a.lattice, request);
    Complex prod(1.0, 0.0);
    for (const auto& p : request.momenta)
        prod *= amplitude(phi_a, p);
    return prod;
}

GammaEstimate estimate_gamma_mc(const SampleBatch& batch, const CorrelatorRequest& request) {
    if (batch.configs.empty())
        throw std::invalid_argument("estimate_gamma_mc: empty batch");
    const LatticeSpec& lat = batch.configs.front().lattice;
    validate_request(lat, request);
    const int n = static_cast<int>(request.momenta.size());
    const Eigen::Index n_samples = static_cast<Eigen::Index>(batch.configs.size());
    const double vol = lat.cell() * static_cast<double>(lat.volume());

    Eigen::MatrixXcd phases = phase_matrix(lat, request.momenta);

    const Eigen::Index n_blocks = std::min<Eigen::Index>(100, n_samples);
    const int n_masks = (1 << n); // index 0 unused

    // Per-mask running sums, overall and per block (mask traversal keeps the
    // summation order deterministic).
    Eigen::MatrixXcd block_sums = Eigen::MatrixXcd::Zero(n_masks, n_blocks);
    Eigen::VectorXcd total_sums = Eigen::VectorXcd::Zero(n_masks);
    Eigen::VectorXd block_counts = Eigen::VectorXd::Zero(n_blocks);

    for (Eigen::Index i = 0; i < n_samples; ++i) {
        Eigen::VectorXcd amps = phases * batch.configs[i].values;
        Eigen::Index b = i * n_blocks / n_samples;
        block_counts[b] += 1.0;
        for (int mask = 1; mask < n_masks; ++mask) {
            Complex prod(1.0, 0.0);
            for (int j = 0; j < n; ++j)
                if (mask & (1 << j))
                    prod *= amps[j];
            total_sums[mask] += prod;
            block_sums(mask, b) += prod;
        }
    }

    const int full_mask = n_masks - 1;
    auto combine = [&](const Eigen::VectorXcd& means) {
        if (!request.connected)
            return means[full_mask];
        std::vector<Complex> by_mask(n_masks, Complex(0.0, 0.0));
        for (int mask = 1; mask < n_masks; ++mask)
            by_mask[mask] = means[mask];
        return cumulant_from_moments(n, by_mask);
    };

    Eigen::VectorXcd overall_means = total_sums / static_cast<double>(n_samples);
    Complex value = combine(overall_means) / vol;

    Eigen::VectorXcd block_values(n_blocks);
    for (Eigen::Index b = 0; b < n_blocks; ++b)
        block_values[b] = combine(block_sums.col(b) / block_counts[b]) / vol;
    Complex block_mean = block_values.sum() / static_cast<double>(n_blocks);
    double var = 0.0;
    for (Eigen::Index b = 0; b < n_blocks; ++b)
        var += std::norm(block_values[b] - block_mean);
    double std_error = n_blocks > 1
                           ? std::sqrt(var / static_cast<double>(n_blocks - 1) /
                                       static_cast<double>(n_blocks))
                           : 0.0;

    return GammaEstimate{value, std_error, n_samples};
}

std::complex<double> correlator_quadrature_oracle(const BareActionParams& params,
                                                  const CorrelatorRequest& request) {
    const LatticeSpec& lat = params.lattice;
    validate_request(lat, request);
    if (lat.volume() > 4)
        throw ScaleExceeded("correlator_quadrature_oracle: more than 4 sites");
    const int n = static_cast<int>(request.momenta.size());
    const double vol = lat.cell() * static_cast<double>(lat.volume());

    Eigen::MatrixXcd phases = phase_matrix(lat, request.momenta);
    auto log_density = [&](const Eigen::VectorXd& phi) {
        return -evaluate_action(FieldConfig(lat, phi), params);
    };
    Eigen::MatrixXd scales = quadrature_basis(params);

    if (!request.connected) {
        auto g = [&](const Eigen::VectorXd& phi) {
            Eigen::VectorXcd amps = phases * phi;
            Complex prod(1.0, 0.0);
            for (int j = 0; j < n; ++j)
                prod *= amps[j];
            return prod;
        };
        return expectation(scales, log_density, g) / vol;
    }

    const int n_masks = 1 << n;
    auto g = [&](const Eigen::VectorXd& phi) {
        Eigen::VectorXcd amps = phases * phi;
        Eigen::VectorXcd out(n_masks - 1);
        for (int mask = 1; mask < n_masks; ++mask) {
            Complex prod(1.0, 0.0);
            for (int j = 0; j < n; ++j)
                if (mask & (1 << j))
                    prod *= amps[j];
            out[mask - 1] = prod;
        }
        return out;
    };
    Eigen::VectorXcd moments = expectation_vector(scales, log_density, g, n_masks - 1);
    std::vector<Complex> by_mask(n_masks, Complex(0.0, 0.0));
    for (int mask = 1; mask < n_masks; ++mask)
        by_mask[mask] = moments[mask - 1];
    return cumulant_from_moments(n, by_mask) / vol;
}

SourceDerivativeEstimate
correlator_source_derivative_oracle(const BareActionParams& params,
                                    const CorrelatorRequest& request, double step_scale) {
    const LatticeSpec& lat = params.lattice;
    validate_request(lat, request);
    if (lat.volume() > 4)
        throw ScaleExceeded("correlator_source_derivative_oracle: more than 4 sites");
    const int n = static_cast<int>(request.momenta.size());
    if (n > 4)
        throw std::invalid_argument("correlator_source_derivative_oracle: n <= 4");
    const Eigen::Index v = lat.volume();
    const double vol = lat.cell() * static_cast<double>(v);

    const double h = step_scale * std::sqrt(std::max(params.mass_sq + params.quartic, 0.5));
    if (!(h > 1e-8))
        throw std::invalid_argument("correlator_source_derivative_oracle: step-size underflow");

    TensorQuadratureOptions opts;
    opts.tol = 1e-12;
    opts.initial_order = 32;

    const double log_z0 =
        log_partition_quadrature(params, SourceField{Eigen::VectorXd::Zero(v)}, opts);

    // F memoized on source offsets in units of h/2.
    std::map<std::vector<int>, double> f_cache;
    auto f_eval = [&](const std::vector<int>& key) {
        auto it = f_cache.find(key);
        if (it != f_cache.end())
            return it->second;
        Eigen::VectorXd j(v);
        for (Eigen::Index s = 0; s < v; ++s)
            j[s] = key[static_cast<std::size_t>(s)] * (h / 2.0);
        double lz = log_partition_quadrature(params, SourceField{j}, opts) - log_z0;
        double val = request.connected ? lz : std::exp(lz);
        f_cache.emplace(key, val);
        return val;
    };

    // Mixed stencil derivative of F for a site multi-index, at step size step.
    auto stencil_derivative = [&](const std::vector<int>& alpha, double step) {
        std::vector<Eigen::Index> sites;
        std::vector<int> orders;
        for (Eigen::Index s = 0; s < v; ++s)
            if (alpha[static_cast<std::size_t>(s)] > 0) {
                sites.push_back(s);
                orders.push_back(alpha[static_cast<std::size_t>(s)]);
            }
        const int r = static_cast<int>(sites.size());
        Eigen::VectorXd nodes(5);
        for (int i = 0; i < 5; ++i)
            nodes[i] = (i - 2) * step;
        std::vector<Eigen::VectorXd> weights(static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i) {
            Eigen::MatrixXd w = fd_weights(0.0, nodes, orders[static_cast<std::size_t>(i)]);
            weights[static_cast<std::size_t>(i)] = w.col(orders[static_cast<std::size_t>(i)]);
        }
        const int half_units = static_cast<int>(std::lround(step / (h / 2.0)));
        std::vector<int> offset(static_cast<std::size_t>(r), 0);
        double total = 0.0;
        while (true) {
            double wprod = 1.0;
            std::vector<int> key(static_cast<std::size_t>(v), 0);
            for (int i = 0; i < r; ++i) {
                int o = offset[static_cast<std::size_t>(i)];
                wprod *= weights[static_cast<std::size_t>(i)][o];
                key[static_cast<std::size_t>(sites[static_cast<std::size_t>(i)])] =
                    (o - 2) * half_units;
            }
            total += wprod * f_eval(key);
            int i = 0;
            for (; i < r; ++i) {
                if (++offset[static_cast<std::size_t>(i)] < 5)
                    break;
                offset[static_cast<std::size_t>(i)] = 0;
            }
            if (i == r)
                break;
        }
        return total;
    };

    // Richardson-extrapolated derivative per multi-index (leading error h^2).
    struct Extrapolated {
        double value;
        double trunc;
    };
    std::map<std::vector<int>, Extrapolated> d_cache;
    auto derivative = [&](const std::vector<int>& alpha) {
        auto it = d_cache.find(alpha);
        if (it != d_cache.end())
            return it->second;
        double coarse = stencil_derivative(alpha, h);
        double fine = stencil_derivative(alpha, h / 2.0);
        Extrapolated e{(4.0 * fine - coarse) / 3.0, std::abs(fine - coarse) / 3.0};
        d_cache.emplace(alpha, e);
        return e;
    };

    // Sum over position tuples with the transform phases.
    std::vector<Eigen::Index> tuple(static_cast<std::size_t>(n), 0);
    Complex total(0.0, 0.0);
    double trunc = 0.0;
    while (true) {
        std::vector<int> alpha(static_cast<std::size_t>(v), 0);
        double phase = 0.0;
        for (int j = 0; j < n; ++j) {
            Eigen::Index x = tuple[static_cast<std::size_t>(j)];
            alpha[static_cast<std::size_t>(x)] += 1;
            phase += momentum_dot_site(lat, request.momenta[static_cast<std::size_t>(j)], x);
        }
        Extrapolated d = derivative(alpha);
        total += d.value * std::polar(1.0, -phase);
        trunc += d.trunc;
        int j = 0;
        for (; j < n; ++j) {
            if (++tuple[static_cast<std::size_t>(j)] < v)
                break;
            tuple[static_cast<std::size_t>(j)] = 0;
        }
        if (j == n)
            break;
    }
    return SourceDerivativeEstimate{total / vol, trunc / vol};
}

} // namespace frg
