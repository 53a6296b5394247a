#pragma once

#include "frg/action.hpp"
#include "frg/cascade.hpp"

#include <complex>
#include <vector>

namespace frg {

struct CorrelatorRequest {
    std::vector<MomentumVector> momenta; // ordered, 1 <= n <= 6
    bool connected = false;              // cumulant subtraction, needs n <= 4
};

struct GammaEstimate {
    std::complex<double> value{0.0, 0.0};
    double std_error = 0.0;
    Eigen::Index n_samples = 0;
};

/// Convolutional stack G_n(x) = G_{n-1}(x) * [a^dim sum_y e^{-i p_n y} phi(x+y)],
/// G_0 = phi. Each layer multiplies by e^{+i p_n x} phi~(p_n).
Eigen::VectorXcd conv_stack_G(const FieldConfig& phi_a,
                              const std::vector<MomentumVector>& momenta);

/// Final phase-weighted readout of the stack; factorizes as prod_j phi~(p_j).
std::complex<double> h_functional(const FieldConfig& phi_a, const CorrelatorRequest& request);

/// Batch-mean estimate of Gamma(p_1..p_n) = <prod_j phi~(p_j)> / (N^dim a^dim).
/// Connected parts use the moment-cumulant relations (n <= 4). Error bars come
/// from ~100 block means, valid for thinned Metropolis output as well as iid draws.
GammaEstimate estimate_gamma_mc(const SampleBatch& batch, const CorrelatorRequest& request);

/// Gamma by direct tensor quadrature of the path integral. <= 4 sites, n <= 6.
std::complex<double> correlator_quadrature_oracle(const BareActionParams& params,
                                                  const CorrelatorRequest& request);

struct SourceDerivativeEstimate {
    std::complex<double> value{0.0, 0.0};
    double truncation_estimate = 0.0; // |Richardson-extrapolated - finest stencil|
};

/// Gamma from mixed finite differences of Z[J] at J=0 (plain Z with a 1/Z
/// prefactor for full correlators, ln Z for connected). <= 4 sites, n <= 4.
SourceDerivativeEstimate
correlator_source_derivative_oracle(const BareActionParams& params,
                                    const CorrelatorRequest& request,
                                    double step_scale = 0.1);

} // namespace frg
