#include "frg/cascade.hpp"

#include "frg/errors.hpp"
#include "frg/quadrature.hpp"
#include "frg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace frg {

namespace {

// Exponent of a layer density: -S[phi] + linear.phi - 1/2 phi^T M phi, where
// linear collects the drift source a^dim dPi/dphi_a + M phi_a and M is the
// regulator precision a^{2 dim} Rhat (absent at the top layer).
struct LayerExponent {
    BareActionParams action;
    Eigen::VectorXd linear;
    Eigen::MatrixXd precision; // size 0 when the regulator is off

    double operator()(const Eigen::VectorXd& phi) const {
        double t = -evaluate_action(FieldConfig(action.lattice, phi), action) +
                   linear.dot(phi);
        if (precision.size() > 0)
            t -= 0.5 * phi.dot(precision * phi);
        return t;
    }
};

Eigen::MatrixXd regulator_precision(const RegulatorSpec& reg) {
    const LatticeSpec& lat = reg.lattice;
    const Eigen::Index v = lat.volume();
    Eigen::VectorXd kernel = regulator_position_kernel(reg);
    Eigen::MatrixXd m(v, v);
    const double c2 = lat.cell() * lat.cell();
    for (Eigen::Index x = 0; x < v; ++x) {
        Eigen::VectorXi cx = lat.site_coords(x);
        for (Eigen::Index y = 0; y < v; ++y) {
            Eigen::VectorXi cy = lat.site_coords(y);
            Eigen::VectorXi d(cx.size());
            for (Eigen::Index mu = 0; mu < cx.size(); ++mu)
                d[mu] = ((cx[mu] - cy[mu]) % lat.sites_per_dim + lat.sites_per_dim) %
                        lat.sites_per_dim;
            m(x, y) = c2 * kernel[lat.site_index(d)];
        }
    }
    return m;
}

LayerExponent layer_exponent(const FieldConfig& phi_a, const FlowState& layer,
                             const CascadeSpec& spec) {
    if (!(phi_a.lattice == spec.action.lattice) || !(layer.lattice == spec.action.lattice))
        throw std::invalid_argument("layer density: field/layer lattice mismatch");
    LayerExponent e;
    e.action = spec.action;
    e.linear = spec.action.lattice.cell() * functional_gradient(layer, phi_a);
    if (layer.k > 0.0) {
        e.precision = regulator_precision(RegulatorSpec(spec.family, layer.k, layer.lattice));
        e.linear += e.precision * phi_a.values;
    }
    return e;
}

// ---- exact single-site sampler ----------------------------------------

// Tabulated CDF of exp(f) on an automatically located support, per-interval
// Simpson nodes plus Newton-refined inversion (CDF accuracy ~1e-10).
struct TabulatedCdf {
    double lo = 0.0, h = 0.0, log_max = 0.0, total = 0.0;
    int n = 0;
    Eigen::VectorXd cdf;      // size n+1, normalized
    Eigen::VectorXd node_den; // normalized density at nodes
    const LayerExponent* f = nullptr;

    double density(double x) const {
        Eigen::VectorXd phi(1);
        phi[0] = x;
        return std::exp((*f)(phi) - log_max) / total;
    }

    double sample(double u) const {
        u = std::clamp(u, 1e-300, 1.0 - 1e-16);
        const double* begin = cdf.data();
        Eigen::Index i = std::upper_bound(begin, begin + n + 1, u) - begin;
        i = std::clamp<Eigen::Index>(i - 1, 0, n - 1);
        double xi = lo + i * h;
        double mass = cdf[i + 1] - cdf[i];
        double x = mass > 0.0 ? xi + h * (u - cdf[i]) / mass : xi + 0.5 * h;
        for (int it = 0; it < 2; ++it) {
            double d = density(x);
            double fhat = cdf[i] + 0.5 * (x - xi) * (node_den[i] + d);
            x -= (fhat - u) / std::max(d, 1e-300);
            x = std::clamp(x, xi, xi + h);
        }
        return x;
    }
};

TabulatedCdf build_cdf(const LayerExponent& f, double center_hint, double width_hint) {
    auto eval = [&f](double x) {
        Eigen::VectorXd phi(1);
        phi[0] = x;
        return f(phi);
    };

    // Coarse scan, widened until the e^{-46} support is interior.
    double c = center_hint;
    double w = width_hint;
    const int coarse = 2001;
    double lo = 0.0, hi = 0.0;
    for (int attempt = 0;; ++attempt) {
        if (attempt >= 60)
            throw ConvergenceFailure("layer sampler: density support not located");
        double step = 2.0 * w / (coarse - 1);
        double fmax = -std::numeric_limits<double>::infinity();
        int imax = 0;
        Eigen::VectorXd fv(coarse);
        for (int i = 0; i < coarse; ++i) {
            fv[i] = eval(c - w + i * step);
            if (fv[i] > fmax) {
                fmax = fv[i];
                imax = i;
            }
        }
        int a = 0, b = coarse - 1;
        while (a < imax && fv[a] < fmax - 46.0)
            ++a;
        while (b > imax && fv[b] < fmax - 46.0)
            --b;
        if (a == 0 || b == coarse - 1) {
            c = c - w + imax * step;
            w *= 2.0;
            continue;
        }
        lo = c - w + (a - 1) * step;
        hi = c - w + (b + 1) * step;
        break;
    }

    TabulatedCdf t;
    t.f = &f;
    t.n = 8192;
    t.lo = lo;
    t.h = (hi - lo) / t.n;
    t.node_den.resize(t.n + 1);
    t.cdf.resize(t.n + 1);

    Eigen::VectorXd node_f(t.n + 1), mid_f(t.n);
    t.log_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= t.n; ++i) {
        node_f[i] = eval(lo + i * t.h);
        t.log_max = std::max(t.log_max, node_f[i]);
    }
    for (int i = 0; i < t.n; ++i)
        mid_f[i] = eval(lo + (i + 0.5) * t.h);

    t.cdf[0] = 0.0;
    for (int i = 0; i < t.n; ++i) {
        double d0 = std::exp(node_f[i] - t.log_max);
        double dm = std::exp(mid_f[i] - t.log_max);
        double d1 = std::exp(node_f[i + 1] - t.log_max);
        t.cdf[i + 1] = t.cdf[i] + t.h / 6.0 * (d0 + 4.0 * dm + d1);
    }
    t.total = t.cdf[t.n];
    if (!(t.total > 0.0) || !std::isfinite(t.total))
        throw ConvergenceFailure("layer sampler: density tabulation failed");
    t.cdf /= t.total;
    for (int i = 0; i <= t.n; ++i)
        t.node_den[i] = std::exp(node_f[i] - t.log_max) / t.total;
    return t;
}

// ---- Metropolis sampler ------------------------------------------------

double action_site_delta(const Eigen::VectorXd& phi, Eigen::Index z, double delta,
                         const BareActionParams& p) {
    const LatticeSpec& lat = p.lattice;
    const double cell = lat.cell();
    const double v0 = phi[z];
    const double v1 = v0 + delta;
    double ds = cell * (0.5 * p.mass_sq * (v1 * v1 - v0 * v0) +
                        p.quartic / 24.0 * (v1 * v1 * v1 * v1 - v0 * v0 * v0 * v0));
    if (p.kinetic_enabled && lat.dim >= 1) {
        const double bond = cell / (lat.spacing * lat.spacing);
        for (int mu = 0; mu < lat.dim; ++mu) {
            double up = phi[lat.neighbor(z, mu, +1)];
            double dn = phi[lat.neighbor(z, mu, -1)];
            ds += 0.5 * bond * ((up - v1) * (up - v1) - (up - v0) * (up - v0));
            ds += 0.5 * bond * ((v1 - dn) * (v1 - dn) - (v0 - dn) * (v0 - dn));
        }
    }
    return ds;
}

void attach_statistics(SampleBatch& batch) {
    const Eigen::Index v = batch.configs.front().lattice.volume();
    const auto n = static_cast<double>(batch.configs.size());
    batch.site_mean = Eigen::VectorXd::Zero(v);
    for (const auto& cfg : batch.configs)
        batch.site_mean += cfg.values;
    batch.site_mean /= n;
    batch.site_variance = Eigen::VectorXd::Zero(v);
    if (batch.configs.size() > 1) {
        for (const auto& cfg : batch.configs)
            batch.site_variance += (cfg.values - batch.site_mean).cwiseAbs2();
        batch.site_variance /= n - 1.0;
    }
}

SampleBatch sample_exponent(const LayerExponent& f, const FieldConfig& start, int n,
                            std::uint64_t seed, const SamplerOptions& opts, double layer_k,
                            std::vector<MetropolisLogEntry>* log) {
    const LatticeSpec& lat = f.action.lattice;
    if (n < 1)
        throw std::invalid_argument("sample: need n >= 1");
    SampleBatch batch;
    batch.seed = seed;
    batch.layer_k = layer_k;
    batch.configs.reserve(static_cast<std::size_t>(n));
    Rng rng(seed);

    if (lat.volume() == 1) {
        double q = std::max(f.action.mass_sq + f.action.quartic +
                                (f.precision.size() > 0 ? f.precision(0, 0) : 0.0),
                            0.05);
        double center = f.linear.size() > 0 ? f.linear[0] / q : 0.0;
        TabulatedCdf cdf = build_cdf(f, center, 30.0 / std::sqrt(q) + 2.0 * std::abs(center) + 2.0);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd vphi(1);
            vphi[0] = cdf.sample(rng.uniform());
            batch.configs.emplace_back(lat, vphi);
        }
        batch.acceptance_rate = 1.0;
        attach_statistics(batch);
        return batch;
    }

    // Site-wise Metropolis on the exponent; M*phi is tracked incrementally.
    Eigen::MatrixXd k = quadratic_kernel(f.action);
    Eigen::VectorXd width(lat.volume());
    for (Eigen::Index z = 0; z < lat.volume(); ++z) {
        double q = k(z, z) + (f.precision.size() > 0 ? f.precision(z, z) : 0.0);
        width[z] = opts.proposal_width > 0.0 ? opts.proposal_width
                                             : 2.4 / std::sqrt(std::max(q, 0.05));
    }

    Eigen::VectorXd phi = start.values;
    Eigen::VectorXd mphi = f.precision.size() > 0 ? Eigen::VectorXd(f.precision * phi)
                                                  : Eigen::VectorXd();
    long proposals = 0, accepts = 0;
    auto sweep = [&]() {
        for (Eigen::Index z = 0; z < lat.volume(); ++z) {
            double delta = rng.uniform(-width[z], width[z]);
            double log_ratio = -action_site_delta(phi, z, delta, f.action) +
                               f.linear[z] * delta;
            if (f.precision.size() > 0)
                log_ratio -= mphi[z] * delta + 0.5 * f.precision(z, z) * delta * delta;
            double u = rng.uniform();
            bool accept = std::log(u) < log_ratio;
            if (log)
                log->push_back({z, phi[z], phi[z] + delta, log_ratio, u, accept});
            ++proposals;
            if (accept) {
                ++accepts;
                if (f.precision.size() > 0)
                    mphi += f.precision.col(z) * delta;
                phi[z] += delta;
            }
        }
    };

    for (int s = 0; s < opts.burn_in; ++s)
        sweep();
    proposals = 0;
    accepts = 0;
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < std::max(1, opts.thinning); ++s)
            sweep();
        batch.configs.emplace_back(lat, phi);
    }
    batch.acceptance_rate =
        proposals > 0 ? static_cast<double>(accepts) / static_cast<double>(proposals) : 1.0;
    if (batch.acceptance_rate < 0.05)
        throw ConvergenceFailure("sample: Metropolis acceptance below 0.05; retune proposal");
    attach_statistics(batch);
    return batch;
}

LayerExponent bare_exponent(const BareActionParams& params) {
    LayerExponent e;
    e.action = params;
    e.linear = Eigen::VectorXd::Zero(params.lattice.volume());
    return e;
}

double rhs_value(const Functional& rhs, const LatticeSpec& lat, const FieldConfig& phi_a) {
    if (const auto* q = std::get_if<QuadraticFunctional>(&rhs))
        return 0.5 * phi_a.values.dot(q->kernel * phi_a.values) +
               q->linear.dot(phi_a.values) + q->constant;
    const auto& g = std::get<GridPotential>(rhs);
    double sum = 0.0;
    for (Eigen::Index x = 0; x < lat.volume(); ++x)
        sum += g.value(phi_a.values[x]);
    return lat.cell() * sum;
}

} // namespace

CascadeSpec make_cascade(const BareActionParams& params, RegulatorFamily family,
                         double lambda_uv, double k_min, FlowStepControl control,
                         std::optional<GridOptions> grid) {
    if (!uv_scale_validated(params, lambda_uv))
        throw std::invalid_argument("make_cascade: UV scale too low for the couplings");
    control.store_states = true;
    FlowState initial = (params.quartic != 0.0 || grid.has_value())
                            ? initial_flow_state_grid(params, family, lambda_uv,
                                                      grid.value_or(GridOptions{}))
                            : initial_flow_state_quadratic(params, family, lambda_uv);
    FlowResult result = integrate_flow(initial, family, k_min, control);
    CascadeSpec spec;
    spec.family = family;
    spec.action = params;
    spec.trajectory = std::move(result.states);
    spec.k_grid.reserve(result.trajectory.size());
    for (const auto& pt : result.trajectory)
        spec.k_grid.push_back(pt.k);
    return spec;
}

double layer_log_density(const FieldConfig& phi, const FieldConfig& phi_a,
                         const FlowState& layer, const CascadeSpec& spec) {
    return layer_exponent(phi_a, layer, spec)(phi.values);
}

double layer_log_density_normalized(const FieldConfig& phi, const FieldConfig& phi_a,
                                    const FlowState& layer, const CascadeSpec& spec) {
    if (spec.action.lattice.volume() > 2)
        throw ScaleExceeded("layer_log_density_normalized: more than 2 sites");
    LayerExponent e = layer_exponent(phi_a, layer, spec);
    auto log_density = [&e](const Eigen::VectorXd& v) { return e(v); };
    double log_zk = log_integral(quadrature_basis(spec.action), log_density);
    return e(phi.values) - log_zk;
}

SampleBatch sample_layer(const FieldConfig& phi_a, const FlowState& layer,
                         const CascadeSpec& spec, int n, std::uint64_t seed,
                         SamplerOptions opts, std::vector<MetropolisLogEntry>* log) {
    LayerExponent e = layer_exponent(phi_a, layer, spec);
    return sample_exponent(e, phi_a, n, seed, opts, layer.k, log);
}

double cascade_marginal_log_ratio(const FieldConfig& phi_a, const CascadeSpec& spec) {
    if (spec.trajectory.empty() || spec.k_grid.size() != spec.trajectory.size())
        throw std::invalid_argument("cascade_marginal_log_ratio: k-grid/trajectory mismatch");
    const std::size_t m = spec.k_grid.size();
    if (m == 1)
        return 0.0;
    // Trapezoid in t = ln k of k dPi_k/dk [phi_a]; equals the telescoped
    // sum of -(dPi/dk) dk over the layers.
    std::vector<double> f(m);
    for (std::size_t i = 0; i < m; ++i) {
        Functional rhs = wetterich_rhs(spec.trajectory[i], spec.family);
        f[i] = spec.k_grid[i] * rhs_value(rhs, spec.action.lattice, phi_a);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        double dt = std::log(spec.k_grid[i + 1] / spec.k_grid[i]);
        sum += 0.5 * (f[i] + f[i + 1]) * dt;
    }
    return sum;
}

InputDistributionAudit input_distribution_log(const FieldConfig& phi, const CascadeSpec& spec) {
    if (spec.action.lattice.volume() > 2)
        throw ScaleExceeded("input_distribution_log: more than 2 sites");
    SourceField zero{Eigen::VectorXd::Zero(spec.action.lattice.volume())};
    double log_z0 = log_partition_quadrature(spec.action, zero);
    InputDistributionAudit audit;
    audit.lhs = -evaluate_action(phi, spec.action) - log_z0;
    audit.rhs = -functional_value(spec.bottom(), phi) - log_z0;
    audit.residual = audit.rhs - audit.lhs;
    return audit;
}

NormalizationAudit cascade_normalization_audit(const CascadeSpec& spec) {
    const BareActionParams& p = spec.action;
    if (p.lattice.volume() > 2)
        throw ScaleExceeded("cascade_normalization_audit: more than 2 sites");
    SourceField zero{Eigen::VectorXd::Zero(p.lattice.volume())};
    NormalizationAudit audit;
    audit.log_z0 = log_partition_quadrature(p, zero);
    Eigen::MatrixXd scales = quadrature_basis(p);
    auto minus_s = [&p](const Eigen::VectorXd& v) {
        return -evaluate_action(FieldConfig(p.lattice, v), p);
    };
    audit.pv_integral = std::exp(log_integral(scales, minus_s) - audit.log_z0);
    const FlowState& bottom = spec.bottom();
    // Outside the potential grid's support the integrand is already negligible
    // (it decays like e^{-S}); truncate instead of failing on those nodes.
    const GridPotential* grid = std::get_if<GridPotential>(&bottom.functional);
    auto eq_density = [&](const Eigen::VectorXd& v) {
        if (grid && (v.minCoeff() < grid->phi_nodes[0] ||
                     v.maxCoeff() > grid->phi_nodes[grid->phi_nodes.size() - 1]))
            return -std::numeric_limits<double>::infinity();
        FieldConfig cfg(p.lattice, v);
        return -2.0 * evaluate_action(cfg, p) + functional_value(bottom, cfg);
    };
    audit.eq_integral = std::exp(log_integral(scales, eq_density) - audit.log_z0);
    return audit;
}

SampleBatch top_layer_sample(const CascadeSpec& spec, int n, std::uint64_t seed,
                             SamplerOptions opts, std::vector<MetropolisLogEntry>* log) {
    return action_sample(spec.action, n, seed, opts, log);
}

SampleBatch action_sample(const BareActionParams& params, int n, std::uint64_t seed,
                          SamplerOptions opts, std::vector<MetropolisLogEntry>* log) {
    LayerExponent e = bare_exponent(params);
    return sample_exponent(e, FieldConfig::zero(params.lattice), n, seed, opts, 0.0, log);
}

} // namespace frg
