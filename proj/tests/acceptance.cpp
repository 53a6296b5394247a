// Acceptance gate: twelve numbered criteria, one pass/fail line each.
// argv[1] must point at the command-line binary (used by criterion 12).

#include "frg/cascade.hpp"
#include "frg/correlators.hpp"
#include "frg/errors.hpp"
#include "frg/flow.hpp"
#include "frg/legendre.hpp"
#include "frg/lsz_fock.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace frg;

namespace {

int g_failures = 0;

void report(int number, const char* what, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", number, what,
                detail.c_str());
    if (!pass)
        ++g_failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

const LatticeSpec kZero{0, 1, 1.0};

MomentumVector mode1(int n) {
    MomentumVector p;
    p.modes.resize(1);
    p.modes[0] = n;
    return p;
}

FlowResult run_flow(const BareActionParams& params, RegulatorFamily family, int steps,
                    bool grid) {
    FlowStepControl control;
    control.steps = steps;
    control.store_states = true;
    FlowState initial = grid ? initial_flow_state_grid(params, family, 100.0)
                             : initial_flow_state_quadratic(params, family, 100.0);
    return integrate_flow(initial, family, 1e-3, control);
}

double endpoint_curvature(const FlowResult& result) {
    return result.trajectory.back().curvature_zero;
}

// 1: free theory, grid representation: the curvature must not flow.
void criterion_1() {
    BareActionParams gauss(1.0, 0.0, kZero);
    FlowState initial = initial_flow_state_grid(gauss, RegulatorFamily::Litim, 100.0);
    FlowStepControl control;
    control.steps = 400;
    control.store_states = false;
    FlowResult result = integrate_flow(initial, RegulatorFamily::Litim, 1e-3, control);
    double err = std::abs(endpoint_curvature(result) - 1.0);
    report(1, "free flow keeps the curvature exactly", err < 1e-6, "|U''(0)-1| = " + fmt(err));
}

// 2: interacting endpoint matches the exact effective potential; the two
// regulator families land together.
void criterion_2() {
    BareActionParams quartic(1.0, 1.0, kZero);
    FlowResult litim = run_flow(quartic, RegulatorFamily::Litim, 400, true);

    Eigen::VectorXd nodes = Eigen::VectorXd::LinSpaced(41, -0.5, 0.5);
    GridPotential oracle = effective_action_oracle(quartic, nodes);
    double exact = oracle.second_derivative(0.0);
    double rel = std::abs(endpoint_curvature(litim) - exact) / std::abs(exact);
    bool pass = rel < 1e-3;

    LatticeSpec line(1, 2, 1.0);
    BareActionParams chain(1.0, 0.5, line);
    double lit = endpoint_curvature(run_flow(chain, RegulatorFamily::Litim, 400, true));
    double expo = endpoint_curvature(run_flow(chain, RegulatorFamily::Exponential, 400, true));
    double fam = std::abs(lit - expo) / std::abs(lit);
    pass = pass && fam < 1e-2;
    report(2, "interacting endpoint matches the exact potential", pass,
           "rel err " + fmt(rel) + ", family split " + fmt(fam));
}

// 3: sampler, quadrature oracle, and source-derivative oracle agree.
void criterion_3() {
    bool pass = true;
    std::string detail;
    for (double lambda : {0.0, 0.1, 1.0}) {
        BareActionParams params(1.0, lambda, kZero);
        SampleBatch batch = action_sample(params, 1000000, 314159);
        for (int n : {2, 4}) {
            CorrelatorRequest req;
            for (int i = 0; i < n; ++i)
                req.momenta.push_back(MomentumVector{});
            req.connected = (n == 4);
            Complex quad = correlator_quadrature_oracle(params, req);
            GammaEstimate mc = estimate_gamma_mc(batch, req);
            SourceDerivativeEstimate sd = correlator_source_derivative_oracle(params, req);
            double mc_err = std::abs(mc.value.real() - quad.real());
            double sd_err = std::abs(sd.value.real() - quad.real());
            bool ok = mc_err < std::max(4.0 * mc.std_error, 2e-3) &&
                      sd_err < std::max(1e-5, 10.0 * sd.truncation_estimate);
            if (!ok)
                detail += " lambda=" + fmt(lambda) + " n=" + std::to_string(n) + " mc_err=" +
                          fmt(mc_err) + " sd_err=" + fmt(sd_err);
            pass = pass && ok;
        }
    }
    report(3, "three-way correlator agreement", pass, pass ? "all lambda, n" : detail);
}

// 4: telescoped layer ratios reproduce the endpoint difference, and the
// mismatch roughly halves when the layer count doubles.
void criterion_4() {
    BareActionParams gauss(1.0, 0.0, kZero);

    auto mismatch = [&](int steps) {
        FlowStepControl control;
        control.steps = steps;
        CascadeSpec cascade = make_cascade(gauss, RegulatorFamily::Litim, 100.0, 1e-3,
                                           control);
        double worst = 0.0;
        for (double phi : {0.0, 1.0, -1.0}) {
            FieldConfig probe = FieldConfig::constant(kZero, phi);
            double telescoped = cascade_marginal_log_ratio(probe, cascade);
            double endpoints = functional_value(cascade.bottom(), probe) -
                               functional_value(cascade.trajectory.front(), probe);
            worst = std::max(worst, std::abs(telescoped - endpoints));
        }
        return worst;
    };
    double coarse = mismatch(400);
    double fine = mismatch(800);
    double ratio = fine / coarse;
    bool small = coarse < 1e-5;
    bool halves = ratio > 0.35 && ratio < 0.65;
    report(4, "telescoping against the endpoint difference", small && halves,
           "mismatch(400) = " + fmt(coarse) + ", mismatch(800) = " + fmt(fine) +
               ", ratio = " + fmt(ratio));
}

// 5: the self-normalizing free theory integrates to one both ways.
void criterion_5() {
    BareActionParams gauss(2.0 * std::numbers::pi, 0.0, kZero);
    CascadeSpec cascade = make_cascade(gauss, RegulatorFamily::Litim, 100.0, 1e-3);
    NormalizationAudit audit = cascade_normalization_audit(cascade);
    double pv = std::abs(audit.pv_integral - 1.0);
    double eq = std::abs(audit.eq_integral - 1.0);
    report(5, "cascade normalization at m^2 = 2 pi", pv < 1e-6 && eq < 1e-6,
           "|pv-1| = " + fmt(pv) + ", |eq-1| = " + fmt(eq));
}

// 6: closed-form input distribution: zero residual when ln Z0 = 0, constant
// ln sqrt(2 pi) residual for the unit-mass theory.
void criterion_6() {
    const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    BareActionParams self_norm(2.0 * std::numbers::pi, 0.0, kZero);
    BareActionParams unit(1.0, 0.0, kZero);
    CascadeSpec cascade_sn = make_cascade(self_norm, RegulatorFamily::Litim, 100.0, 1e-3);
    CascadeSpec cascade_u = make_cascade(unit, RegulatorFamily::Litim, 100.0, 1e-3);
    double worst_sn = 0.0, worst_u = 0.0;
    for (double phi = -3.0; phi <= 3.0; phi += 0.5) {
        FieldConfig f = FieldConfig::constant(kZero, phi);
        worst_sn = std::max(worst_sn, std::abs(input_distribution_log(f, cascade_sn).residual));
        worst_u = std::max(worst_u, std::abs(input_distribution_log(f, cascade_u).residual -
                                             log_sqrt_2pi));
    }
    report(6, "closed-form input distribution identity", worst_sn < 1e-6 && worst_u < 1e-6,
           "max residual " + fmt(worst_sn) + ", max offset error " + fmt(worst_u));
}

// 7: four-site free propagator, exact and sampled.
void criterion_7() {
    LatticeSpec lat(1, 4, 1.0);
    BareActionParams gauss(1.0, 0.0, lat);
    double worst = 0.0;
    for (int p = 0; p < 4; ++p) {
        double expected = 1.0 / (lattice_p_squared(lat, mode1(p)) + 1.0);
        Complex got = fourier_correlator_quadrature(gauss, {mode1(p)}, {mode1(p)});
        worst = std::max(worst, std::abs(got.real() - expected));
    }
    bool pass = worst < 1e-6;

    SampleBatch batch = action_sample(gauss, 100000, 2718);
    bool mc_ok = true;
    for (int p = 0; p < 4; ++p) {
        double expected = 1.0 / (lattice_p_squared(lat, mode1(p)) + 1.0);
        GammaEstimate est = fourier_correlator_mc(batch, {mode1(p)}, {mode1(p)});
        mc_ok = mc_ok && std::abs(est.value.real() - expected) < 3.0 * est.std_error;
    }
    report(7, "lattice propagator against the dispersion", pass && mc_ok,
           "quadrature err " + fmt(worst) + (mc_ok ? ", mc within 3 sigma" : ", mc outside"));
}

// 8: the free theory scatters trivially.
void criterion_8() {
    BareActionParams gauss(1.0, 0.0, kZero);
    SampleBatch batch = action_sample(gauss, 100000, 9001);
    std::vector<MomentumVector> legs{MomentumVector{}, MomentumVector{}};
    GammaEstimate conn = fourier_correlator_mc(batch, legs, legs, true);
    bool pass = std::abs(conn.value.real()) < 3.0 * conn.std_error;
    report(8, "free-theory connected element vanishes", pass,
           "value " + fmt(conn.value.real()) + ", 3 sigma = " + fmt(3.0 * conn.std_error));
}

// 9: leading-order vertex at weak coupling.
void criterion_9() {
    BareActionParams weak(1.0, 0.01, kZero);
    std::vector<MomentumVector> legs{MomentumVector{}, MomentumVector{}};
    Complex gamma = fourier_correlator_quadrature(weak, legs, legs, true);
    std::vector<Complex> two_point(4, fourier_correlator_quadrature(weak, {legs[0]}, {legs[0]}));
    SMatrixElement element = lsz_amputate(gamma, 0.0, legs, legs, two_point, 1.0, false);
    double rel = std::abs(element.value.real() + 0.01) / 0.01;
    report(9, "weak-coupling amputated vertex is -lambda", rel < 0.1,
           "value " + fmt(element.value.real()) + ", rel err " + fmt(rel));
}

// 10: unitarity defect calibration.
void criterion_10() {
    bool pass = true;
    std::string detail;

    std::vector<MomentumVector> modes{MomentumVector{}};
    auto basis1 = fock_enumerate(modes, 1); // 2 states

    GateMatrix identity{Eigen::MatrixXcd::Identity(2, 2), basis1};
    pass = pass && check_unitary(identity, 1e-12).pass;

    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    Eigen::MatrixXcd had(2, 2);
    had << inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2;
    pass = pass && check_unitary(GateMatrix{had, basis1}, 1e-12).pass;

    Eigen::MatrixXcd ones = Eigen::MatrixXcd::Ones(2, 2);
    UnitarityReport ones_report = check_unitary(GateMatrix{ones, basis1}, 1e-12);
    pass = pass && !ones_report.pass && std::abs(ones_report.defect - 1.0) < 1e-12;
    detail += "all-ones defect " + fmt(ones_report.defect);

    Eigen::MatrixXcd nudged = Eigen::MatrixXcd::Identity(2, 2);
    nudged(0, 1) = 1e-4;
    UnitarityReport nudged_report = check_unitary(GateMatrix{nudged, basis1}, 1e-12);
    pass = pass && nudged_report.defect > 1e-5 && nudged_report.defect < 1e-3;

    auto [gate, free_report] = smatrix_as_gate({}, fock_enumerate(modes, 2));
    pass = pass && free_report.defect < 1e-10;
    detail += ", free-gate defect " + fmt(free_report.defect);
    report(10, "unitarity defect calibration", pass, detail);
}

// 11: convex-duality suite over the test theories.
void criterion_11() {
    bool pass = true;
    std::string detail;

    // biconjugation on analytic tables
    for (int which = 0; which < 2; ++which) {
        int n = which == 0 ? 241 : 3201;
        ConvexFunctionTable f;
        f.args = Eigen::VectorXd::LinSpaced(n, -3.0, 3.0);
        f.values.resize(n);
        for (int i = 0; i < n; ++i) {
            double x = f.args[i];
            f.values[i] = which == 0 ? 0.5 * x * x : 0.25 * x * x * x * x;
        }
        ConvexFunctionTable fs = legendre_transform(f);
        double worst = 0.0;
        for (int i = n / 3; i <= 2 * n / 3; ++i)
            worst = std::max(worst, std::abs(legendre_transform_at(fs, f.args[i]) - f.values[i]));
        pass = pass && worst < 1e-6;
        if (which == 1)
            detail += "biconjugation err " + fmt(worst);

        // Young-Fenchel on every grid pair
        double yf = 0.0;
        for (int i = 0; i < n; i += 16)
            for (int j = 0; j < n; j += 16)
                yf = std::min(yf, f.values[i] + fs.values[j] - f.args[i] * fs.args[j]);
        pass = pass && yf > -1e-9;
    }

    for (double m2 : {1.0, 2.0 * std::numbers::pi})
        for (double lambda : {0.0, 1.0}) {
            BareActionParams params(m2, lambda, kZero);
            BijectionReport bijection = bijection_roundtrip(params);
            pass = pass && bijection.all_asserted_pass();
        }
    report(11, "convex duality roundtrip", pass, detail);
}

// 12: the command line is bitwise deterministic.
void criterion_12(const std::string& cli) {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "frg_acceptance_12";
    fs::remove_all(base);
    fs::create_directories(base);
    fs::path config = base / "config.json";
    {
        std::ofstream out(config);
        out << "{\n"
               " \"schema_version\": 1,\n"
               " \"model\": {\"dim\": 0, \"mass_sq\": 1.0, \"quartic\": 0.5},\n"
               " \"sampler\": {\"n_samples\": 5000, \"seed\": 42},\n"
               " \"correlators\": [{\"momenta\": [[], []], \"connected\": false},\n"
               "                   {\"momenta\": [[], [], [], []], \"connected\": true}]\n"
               "}\n";
    }
    auto run = [&](const std::string& dir, int seed) {
        std::ostringstream cmd;
        cmd << '"' << cli << '"' << " --config " << config << " --out " << dir << " --seed "
            << seed << " correlate > /dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    fs::path a = base / "a", b = base / "b", c = base / "c";
    bool pass = run(a.string(), 42) == 0 && run(b.string(), 42) == 0 && run(c.string(), 43) == 0;
    std::string ra = slurp(a / "correlators.csv");
    std::string rb = slurp(b / "correlators.csv");
    std::string rc = slurp(c / "correlators.csv");
    pass = pass && !ra.empty() && ra == rb && ra != rc;
    report(12, "command line byte-identical determinism", pass,
           pass ? "same seed identical, new seed differs" : "output mismatch");
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-cli-binary>\n");
        return 2;
    }
    auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12(argv[1]);
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d of 12 criteria passed in %.1f s\n", 12 - g_failures, dt);
    return g_failures == 0 ? 0 : 1;
}
