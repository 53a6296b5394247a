#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "frg/cascade.hpp"
#include "frg/errors.hpp"

#include <cmath>
#include <numbers>

using namespace frg;

namespace {

const LatticeSpec kZero;

CascadeSpec gaussian_cascade(double mass_sq, int steps = 400) {
    BareActionParams params(mass_sq, 0.0, kZero);
    FlowStepControl control;
    control.steps = steps;
    return make_cascade(params, RegulatorFamily::Litim, 100.0, 1e-3, control);
}

const FlowState& layer_at(const CascadeSpec& spec, double k) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < spec.k_grid.size(); ++i)
        if (std::abs(spec.k_grid[i] - k) < std::abs(spec.k_grid[best] - k))
            best = i;
    return spec.trajectory[best];
}

} // namespace

TEST_CASE("layer density reduces to the bare Boltzmann weight") {
    CascadeSpec spec = gaussian_cascade(1.0);
    const FlowState& bottom = spec.bottom(); // k ~ 1e-3, R_k ~ 1e-6
    FieldConfig zero = FieldConfig::zero(kZero);
    for (double phi : {-1.5, 0.3, 2.0}) {
        FieldConfig f = FieldConfig::constant(kZero, phi);
        double expected = -evaluate_action(f, spec.action);
        CHECK(layer_log_density(f, zero, bottom, spec) ==
              doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("gaussian layer density completes the square around phi_a") {
    CascadeSpec spec = gaussian_cascade(1.0);
    const FlowState& layer = layer_at(spec, 1.0);
    const double r = layer.k * layer.k;
    const double phi_a_val = 0.8;
    FieldConfig phi_a = FieldConfig::constant(kZero, phi_a_val);
    // exponent = const - (m^2+R)/2 (phi - phi_a)^2: stationary at phi = phi_a
    const double h = 1e-4;
    double up = layer_log_density(FieldConfig::constant(kZero, phi_a_val + h), phi_a, layer, spec);
    double dn = layer_log_density(FieldConfig::constant(kZero, phi_a_val - h), phi_a, layer, spec);
    double mid = layer_log_density(phi_a, phi_a, layer, spec);
    CHECK((up - dn) / (2.0 * h) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK((up - 2.0 * mid + dn) / (h * h) == doctest::Approx(-(1.0 + r)).epsilon(1e-4));
}

TEST_CASE("mean-field identity at phi = phi_a") {
    CascadeSpec spec = gaussian_cascade(1.0);
    for (double k : {1e-3, 0.5, 2.0}) {
        const FlowState& layer = layer_at(spec, k);
        for (double v : {0.0, 0.7, -1.0}) {
            FieldConfig phi_a = FieldConfig::constant(kZero, v);
            double lhs = layer_log_density_normalized(phi_a, phi_a, layer, spec);
            double rhs = -evaluate_action(phi_a, spec.action) + functional_value(layer, phi_a);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
        }
    }
}

TEST_CASE("exact single-site sampling: moments and replay") {
    CascadeSpec spec = gaussian_cascade(1.0);
    const FlowState& bottom = spec.bottom();
    FieldConfig zero = FieldConfig::zero(kZero);
    const int n = 100000;
    SampleBatch batch = sample_layer(zero, bottom, spec, n, 42);
    CHECK(batch.acceptance_rate == 1.0);
    CHECK(std::abs(batch.site_mean[0]) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(batch.site_variance[0] ==
          doctest::Approx(1.0).epsilon(3.0 * std::sqrt(2.0 / n) + 1e-5));

    SampleBatch replay = sample_layer(zero, bottom, spec, n, 42);
    bool identical = true;
    for (int i = 0; i < n && identical; ++i)
        identical = batch.configs[i].values[0] == replay.configs[i].values[0];
    CHECK(identical);
    SampleBatch other = sample_layer(zero, bottom, spec, 100, 43);
    CHECK(other.configs[0].values[0] != batch.configs[0].values[0]);
}

TEST_CASE("strong regulator freezes the layer variance") {
    CascadeSpec spec = gaussian_cascade(1.0);
    const FlowState& top = spec.trajectory.front(); // k = Lambda = 100
    FieldConfig zero = FieldConfig::zero(kZero);
    SampleBatch batch = sample_layer(zero, top, spec, 40000, 7);
    const double expected = 1.0 / (1.0 + 100.0 * 100.0);
    CHECK(batch.site_variance[0] == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("metropolis top-layer sampling on a line lattice") {
    LatticeSpec lat(1, 4, 1.0);
    BareActionParams params(1.0, 0.0, lat);
    SamplerOptions opts;
    opts.burn_in = 500;
    opts.thinning = 5;
    SampleBatch batch = action_sample(params, 4000, 11, opts);
    CHECK(batch.acceptance_rate > 0.05);
    CHECK(batch.acceptance_rate < 1.0);
    // exact covariance: diagonal of K^{-1}
    Eigen::MatrixXd k = quadratic_kernel(params);
    Eigen::MatrixXd cov = k.inverse();
    for (int x = 0; x < 4; ++x) {
        CHECK(std::abs(batch.site_mean[x]) < 15.0 * std::sqrt(cov(x, x) / 4000.0));
        CHECK(batch.site_variance[x] == doctest::Approx(cov(x, x)).epsilon(0.15));
    }

    std::vector<MetropolisLogEntry> log;
    SamplerOptions tiny;
    tiny.burn_in = 1;
    tiny.thinning = 1;
    SampleBatch small = action_sample(params, 2, 3, tiny, &log);
    CHECK(log.size() == 4 * (1 + 2)); // one entry per site per sweep
    (void)small;
}

TEST_CASE("telescoped marginal ratio matches the endpoint difference") {
    CascadeSpec spec = gaussian_cascade(1.0);
    for (double v : {0.0, 1.0, -1.0}) {
        FieldConfig phi_a = FieldConfig::constant(kZero, v);
        double telescoped = cascade_marginal_log_ratio(phi_a, spec);
        double direct = functional_value(spec.bottom(), phi_a) -
                        functional_value(spec.trajectory.front(), phi_a);
        CHECK(std::abs(telescoped - direct) < 1e-5);
    }

    CascadeSpec single = gaussian_cascade(1.0);
    single.k_grid.resize(1);
    single.trajectory.resize(1);
    CHECK(cascade_marginal_log_ratio(FieldConfig::constant(kZero, 1.0), single) == 0.0);
}

TEST_CASE("refining the k-grid is self-consistent") {
    FieldConfig phi_a = FieldConfig::constant(kZero, 1.0);
    CascadeSpec coarse = gaussian_cascade(1.0, 200);
    CascadeSpec fine = gaussian_cascade(1.0, 400);
    double rc = cascade_marginal_log_ratio(phi_a, coarse);
    double rf = cascade_marginal_log_ratio(phi_a, fine);
    CHECK(std::abs(rc - rf) < 1e-4);
}

TEST_CASE("input distribution identity") {
    CascadeSpec unit_z = gaussian_cascade(2.0 * std::numbers::pi);
    for (double v : {0.0, 0.5}) {
        InputDistributionAudit audit =
            input_distribution_log(FieldConfig::constant(kZero, v), unit_z);
        CHECK(std::abs(audit.residual) < 1e-6);
    }

    CascadeSpec gauss = gaussian_cascade(1.0);
    const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (double v : {0.0, 0.5, -1.0}) {
        InputDistributionAudit audit =
            input_distribution_log(FieldConfig::constant(kZero, v), gauss);
        CHECK(audit.residual == doctest::Approx(log_sqrt_2pi).epsilon(1e-6));
    }
}

TEST_CASE("normalization audit") {
    CascadeSpec unit_z = gaussian_cascade(2.0 * std::numbers::pi);
    NormalizationAudit audit = cascade_normalization_audit(unit_z);
    CHECK(audit.pv_integral == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(audit.eq_integral == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(audit.log_z0 == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("scale guards") {
    LatticeSpec lat(1, 4, 1.0);
    BareActionParams params(1.0, 0.0, lat);
    CascadeSpec spec;
    spec.action = params;
    spec.k_grid = {1.0};
    QuadraticFunctional q;
    q.kernel = quadratic_kernel(params);
    q.linear = Eigen::VectorXd::Zero(4);
    spec.trajectory.push_back(FlowState{1.0, lat, q});
    CHECK_THROWS_AS((void)cascade_normalization_audit(spec), ScaleExceeded);
    CHECK_THROWS_AS((void)input_distribution_log(FieldConfig::zero(lat), spec), ScaleExceeded);
}
