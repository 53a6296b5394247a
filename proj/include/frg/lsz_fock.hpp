#pragma once

#include "frg/correlators.hpp"

#include <utility>
#include <vector>

namespace frg {

/// Occupancy-number basis state over a fixed duplicate-free mode list.
struct FockState {
    Eigen::VectorXi occupancies; // one count per mode, sum <= cutoff
    std::vector<MomentumVector> mode_momenta;
    int cutoff = 0;
};

/// All occupancy tuples with total <= cutoff, graded-lexicographic
/// (|00>, |10>, |01>, |20>, ...), deterministic.
std::vector<FockState> fock_enumerate(const std::vector<MomentumVector>& modes, int cutoff);

struct GateMatrix {
    Eigen::MatrixXcd entries;
    std::vector<FockState> basis;
};

struct UnitarityReport {
    double defect = 0.0;         // max_i |sigma_i(U) - 1| (distance to the unitary group)
    double left_residual = 0.0;  // max |U*U - I|
    double right_residual = 0.0; // max |UU* - I|
    bool pass = false;
};

UnitarityReport check_unitary(const GateMatrix& gate, double tolerance);

struct SMatrixElement {
    std::vector<MomentumVector> in_momenta;
    std::vector<MomentumVector> out_momenta;
    Complex value{0.0, 0.0};
    double std_error = 0.0;
};

/// Momentum-space correlator with outgoing phases e^{+ip.x} and incoming
/// e^{-iq.x}: builds the equivalent estimator request (out momenta negated).
CorrelatorRequest fourier_request(const LatticeSpec& lattice,
                                  const std::vector<MomentumVector>& out_momenta,
                                  const std::vector<MomentumVector>& in_momenta,
                                  bool connected = false);

Complex fourier_correlator_quadrature(const BareActionParams& params,
                                      const std::vector<MomentumVector>& out_momenta,
                                      const std::vector<MomentumVector>& in_momenta,
                                      bool connected = false);

GammaEstimate fourier_correlator_mc(const SampleBatch& batch,
                                    const std::vector<MomentumVector>& out_momenta,
                                    const std::vector<MomentumVector>& in_momenta,
                                    bool connected = false);

/// Euclidean amputation proxy: each external leg contributes a factor
/// 1 / (two_point(leg) * sqrt(residue_z) * (2 pi)^{3/2}); the kinematic
/// sqrt(Z) (2 pi)^{3/2} factors can be switched off for convention-free
/// comparisons. Legs are ordered out then in, matching `two_point`.
SMatrixElement lsz_amputate(Complex gamma_connected, double gamma_std_error,
                            const std::vector<MomentumVector>& out_momenta,
                            const std::vector<MomentumVector>& in_momenta,
                            const std::vector<Complex>& two_point, double residue_z,
                            bool kinematic_prefactors = true);

/// Field renormalization from a linear fit 1/Gamma(p,-p) = (phat^2 + m_eff^2)/Z.
/// Needs at least two distinct phat^2 samples.
double residue_Z(const Eigen::VectorXd& p_squared, const Eigen::VectorXd& two_point);

/// Places I + (S - I) elements into the occupancy basis; n identical momenta
/// map to occupancy n of the matching mode. The unitarity defect is reported,
/// never asserted.
std::pair<GateMatrix, UnitarityReport>
smatrix_as_gate(const std::vector<SMatrixElement>& elements,
                const std::vector<FockState>& basis, double tolerance = 1e-10);

} // namespace frg
