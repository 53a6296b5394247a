#include "frg/lsz_fock.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace frg {

namespace {

void occupancy_rec(int mode, int remaining, Eigen::VectorXi& occ, int total,
                   std::vector<Eigen::VectorXi>& out) {
    const int n_modes = static_cast<int>(occ.size());
    if (mode == n_modes) {
        if (remaining == 0)
            out.push_back(occ);
        return;
    }
    for (int c = remaining; c >= 0; --c) {
        occ[mode] = c;
        occupancy_rec(mode + 1, remaining - c, occ, total, out);
    }
    occ[mode] = 0;
}

} // namespace

std::vector<FockState> fock_enumerate(const std::vector<MomentumVector>& modes, int cutoff) {
    if (cutoff < 0)
        throw std::invalid_argument("fock_enumerate: cutoff must be >= 0");
    for (std::size_t i = 0; i < modes.size(); ++i)
        for (std::size_t j = i + 1; j < modes.size(); ++j)
            if (modes[i] == modes[j])
                throw std::invalid_argument("fock_enumerate: duplicate mode");
    std::vector<FockState> basis;
    Eigen::VectorXi occ = Eigen::VectorXi::Zero(static_cast<Eigen::Index>(modes.size()));
    for (int total = 0; total <= cutoff; ++total) {
        std::vector<Eigen::VectorXi> level;
        occupancy_rec(0, total, occ, total, level);
        for (auto& o : level)
            basis.push_back(FockState{std::move(o), modes, cutoff});
    }
    return basis;
}

UnitarityReport check_unitary(const GateMatrix& gate, double tolerance) {
    const Eigen::MatrixXcd& u = gate.entries;
    if (u.rows() != u.cols())
        throw std::invalid_argument("check_unitary: matrix must be square");
    Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(u.rows(), u.cols());
    UnitarityReport report;
    report.left_residual = (u.adjoint() * u - eye).cwiseAbs().maxCoeff();
    report.right_residual = (u * u.adjoint() - eye).cwiseAbs().maxCoeff();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u);
    report.defect = (svd.singularValues().array() - 1.0).abs().maxCoeff();
    report.pass = report.defect <= tolerance;
    return report;
}

CorrelatorRequest fourier_request(const LatticeSpec& lattice,
                                  const std::vector<MomentumVector>& out_momenta,
                                  const std::vector<MomentumVector>& in_momenta,
                                  bool connected) {
    CorrelatorRequest request;
    request.connected = connected;
    for (const auto& p : out_momenta)
        request.momenta.push_back(negate(lattice, p));
    for (const auto& q : in_momenta)
        request.momenta.push_back(q);
    return request;
}

Complex fourier_correlator_quadrature(const BareActionParams& params,
                                      const std::vector<MomentumVector>& out_momenta,
                                      const std::vector<MomentumVector>& in_momenta,
                                      bool connected) {
    return correlator_quadrature_oracle(
        params, fourier_request(params.lattice, out_momenta, in_momenta, connected));
}

GammaEstimate fourier_correlator_mc(const SampleBatch& batch,
                                    const std::vector<MomentumVector>& out_momenta,
                                    const std::vector<MomentumVector>& in_momenta,
                                    bool connected) {
    if (batch.configs.empty())
        throw std::invalid_argument("fourier_correlator_mc: empty batch");
    return estimate_gamma_mc(batch, fourier_request(batch.configs.front().lattice,
                                                    out_momenta, in_momenta, connected));
}

SMatrixElement lsz_amputate(Complex gamma_connected, double gamma_std_error,
                            const std::vector<MomentumVector>& out_momenta,
                            const std::vector<MomentumVector>& in_momenta,
                            const std::vector<Complex>& two_point, double residue_z,
                            bool kinematic_prefactors) {
    if (out_momenta.empty() || in_momenta.empty())
        throw std::invalid_argument("lsz_amputate: in/out momentum lists must be nonempty");
    if (two_point.size() != out_momenta.size() + in_momenta.size())
        throw std::invalid_argument("lsz_amputate: need one two-point value per leg");
    if (!(residue_z > 0.0))
        throw std::invalid_argument("lsz_amputate: residue Z must be positive");
    Complex factor(1.0, 0.0);
    const double kinematic =
        std::sqrt(residue_z) * std::pow(2.0 * std::numbers::pi, 1.5);
    for (const Complex& g : two_point) {
        if (std::abs(g) == 0.0)
            throw std::invalid_argument("lsz_amputate: vanishing leg propagator");
        factor /= g;
        if (kinematic_prefactors)
            factor /= kinematic;
    }
    SMatrixElement element;
    element.in_momenta = in_momenta;
    element.out_momenta = out_momenta;
    element.value = gamma_connected * factor;
    element.std_error = gamma_std_error * std::abs(factor);
    return element;
}

double residue_Z(const Eigen::VectorXd& p_squared, const Eigen::VectorXd& two_point) {
    if (p_squared.size() != two_point.size() || p_squared.size() < 2)
        throw std::invalid_argument("residue_Z: need >= 2 aligned samples");
    if ((p_squared.array() - p_squared[0]).abs().maxCoeff() < 1e-14)
        throw std::invalid_argument("residue_Z: degenerate fit (identical momenta)");
    // least squares on 1/Gamma = (phat^2 + m_eff^2) / Z
    Eigen::VectorXd y(two_point.size());
    for (Eigen::Index i = 0; i < two_point.size(); ++i) {
        if (two_point[i] == 0.0)
            throw std::invalid_argument("residue_Z: vanishing two-point sample");
        y[i] = 1.0 / two_point[i];
    }
    const auto n = static_cast<double>(p_squared.size());
    double mx = p_squared.mean(), my = y.mean();
    double sxx = (p_squared.array() - mx).square().sum();
    double sxy = ((p_squared.array() - mx) * (y.array() - my)).sum();
    double slope = sxy / sxx;
    (void)n;
    if (!(std::abs(slope) > 0.0) || !std::isfinite(slope))
        throw std::invalid_argument("residue_Z: degenerate fit");
    return 1.0 / slope;
}

std::pair<GateMatrix, UnitarityReport>
smatrix_as_gate(const std::vector<SMatrixElement>& elements,
                const std::vector<FockState>& basis, double tolerance) {
    if (basis.empty())
        throw std::invalid_argument("smatrix_as_gate: empty basis");
    const auto& modes = basis.front().mode_momenta;
    const Eigen::Index dim = static_cast<Eigen::Index>(basis.size());

    auto occupancy_of = [&modes](const std::vector<MomentumVector>& momenta) {
        Eigen::VectorXi occ = Eigen::VectorXi::Zero(static_cast<Eigen::Index>(modes.size()));
        for (const auto& p : momenta) {
            bool found = false;
            for (std::size_t m = 0; m < modes.size(); ++m)
                if (modes[m] == p) {
                    occ[static_cast<Eigen::Index>(m)] += 1;
                    found = true;
                    break;
                }
            if (!found)
                throw std::invalid_argument("smatrix_as_gate: momentum outside the mode list");
        }
        return occ;
    };
    auto index_of = [&basis](const Eigen::VectorXi& occ) {
        for (std::size_t i = 0; i < basis.size(); ++i)
            if (basis[i].occupancies.size() == occ.size() &&
                (basis[i].occupancies - occ).isZero())
                return static_cast<Eigen::Index>(i);
        throw std::invalid_argument("smatrix_as_gate: state outside the truncated basis");
    };

    GateMatrix gate;
    gate.basis = basis;
    gate.entries = Eigen::MatrixXcd::Identity(dim, dim);
    for (const auto& e : elements) {
        Eigen::Index row = index_of(occupancy_of(e.out_momenta));
        Eigen::Index col = index_of(occupancy_of(e.in_momenta));
        gate.entries(row, col) += e.value;
    }
    return {gate, check_unitary(gate, tolerance)};
}

} // namespace frg
