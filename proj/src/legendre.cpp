#include "frg/legendre.hpp"

#include "frg/correlators.hpp"
#include "frg/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace frg {

namespace {

void validate_table(const ConvexFunctionTable& f) {
    if (f.args.size() != f.values.size() || f.args.size() < 3)
        throw std::invalid_argument("function table: need >= 3 aligned samples");
    for (Eigen::Index i = 1; i < f.args.size(); ++i)
        if (!(f.args[i] > f.args[i - 1]))
            throw std::invalid_argument("function table: arguments must increase");
}

// sup_x [x y - f(x)]: grid sup refined through a local cubic interpolant of f
// around the argmax; the stationarity condition p'(x) = y is a quadratic
// solved in closed form. Exact for polynomial f up to cubic.
double conjugate_at(const ConvexFunctionTable& f, double y) {
    const Eigen::Index n = f.args.size();
    Eigen::Index best = 0;
    double gbest = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        double g = f.args[i] * y - f.values[i];
        if (g > gbest) {
            gbest = g;
            best = i;
        }
    }
    if (n < 4)
        return gbest;
    const Eigen::Index s = std::clamp<Eigen::Index>(best - 1, 0, n - 4);
    const double x0 = f.args[s], x1 = f.args[s + 1], x2 = f.args[s + 2],
                 x3 = f.args[s + 3];
    // Newton divided differences of f on the window.
    double d01 = (f.values[s + 1] - f.values[s]) / (x1 - x0);
    double d12 = (f.values[s + 2] - f.values[s + 1]) / (x2 - x1);
    double d23 = (f.values[s + 3] - f.values[s + 2]) / (x3 - x2);
    double c2 = (d12 - d01) / (x2 - x0);
    double c2b = (d23 - d12) / (x3 - x1);
    double c3 = (c2b - c2) / (x3 - x0);
    // p'(x) = y as a quadratic in x.
    double qa = 3.0 * c3;
    double qb = 2.0 * c2 - 2.0 * c3 * (x0 + x1 + x2);
    double qc = d01 - c2 * (x0 + x1) + c3 * (x0 * x1 + x0 * x2 + x1 * x2) - y;
    auto eval_g = [&](double x) {
        double p = f.values[s] + d01 * (x - x0) + c2 * (x - x0) * (x - x1) +
                   c3 * (x - x0) * (x - x1) * (x - x2);
        return x * y - p;
    };
    double roots[2];
    int n_roots = 0;
    if (std::abs(qa) < 1e-14 * (std::abs(qb) + std::abs(qc))) {
        if (qb != 0.0)
            roots[n_roots++] = -qc / qb;
    } else {
        double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            double r = std::sqrt(disc);
            // numerically stable pair
            double q = -0.5 * (qb + std::copysign(r, qb));
            roots[n_roots++] = q / qa;
            if (q != 0.0)
                roots[n_roots++] = qc / q;
        }
    }
    for (int i = 0; i < n_roots; ++i) {
        double x = roots[i];
        if (x >= x0 && x <= x3)
            gbest = std::max(gbest, eval_g(x));
    }
    return gbest;
}

} // namespace

ConvexityReport convexity_check(const ConvexFunctionTable& f, double tol) {
    validate_table(f);
    ConvexityReport report;
    report.min_second_difference = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 1; i + 1 < f.args.size(); ++i) {
        double d0 = (f.values[i] - f.values[i - 1]) / (f.args[i] - f.args[i - 1]);
        double d1 = (f.values[i + 1] - f.values[i]) / (f.args[i + 1] - f.args[i]);
        double second = 2.0 * (d1 - d0) / (f.args[i + 1] - f.args[i - 1]);
        report.min_second_difference = std::min(report.min_second_difference, second);
    }
    report.pass = report.min_second_difference >= -tol;
    return report;
}

ConvexFunctionTable legendre_transform(const ConvexFunctionTable& f) {
    validate_table(f);
    if (!convexity_check(f).pass)
        throw std::invalid_argument("legendre_transform: input table is not convex");
    const Eigen::Index n = f.args.size();
    // Sample the conjugate at the dual points (secant slopes of f): that
    // concentrates nodes where f is flat and the conjugate is stiff.
    ConvexFunctionTable out;
    out.args.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index lo = std::max<Eigen::Index>(i - 1, 0);
        Eigen::Index hi = std::min<Eigen::Index>(i + 1, n - 1);
        out.args[i] = (f.values[hi] - f.values[lo]) / (f.args[hi] - f.args[lo]);
    }
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(out.args[i] > out.args[i - 1]))
            throw std::invalid_argument("legendre_transform: degenerate slope range");
    out.values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out.values[i] = conjugate_at(f, out.args[i]);
    return out;
}

double legendre_transform_at(const ConvexFunctionTable& f, double y) {
    validate_table(f);
    return conjugate_at(f, y);
}

bool BijectionReport::all_asserted_pass() const {
    for (const auto& link : links)
        if (link.asserted && !link.pass)
            return false;
    return true;
}

BijectionReport bijection_roundtrip(const BareActionParams& params) {
    if (params.lattice.volume() != 1)
        throw ScaleExceeded("bijection_roundtrip: single-site models only");
    const bool gaussian = params.quartic == 0.0;

    // ln Z[j] on a source grid wide enough to reach |phi| ~ 6 sigma slopes,
    // so tail truncation in the normalization and moment checks is negligible.
    const Eigen::Index n = 321;
    const double j_max = 6.0 * (params.mass_sq + params.quartic);
    ConvexFunctionTable lnz;
    lnz.args.resize(n);
    lnz.values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lnz.args[i] = -j_max + 2.0 * j_max * static_cast<double>(i) /
                                   static_cast<double>(n - 1);
        Eigen::VectorXd j(1);
        j[0] = lnz.args[i];
        lnz.values[i] = log_partition_quadrature(params, SourceField{j});
    }
    const double log_z0 = lnz.values[(n - 1) / 2];

    BijectionReport report;
    auto add = [&report](std::string name, double residual, double tol, bool asserted) {
        report.links.push_back(
            {std::move(name), residual, tol, asserted, std::abs(residual) <= tol});
    };

    ConvexityReport cz = convexity_check(lnz);
    add("lnZ_convexity", std::max(0.0, -cz.min_second_difference), 1e-8, true);

    ConvexFunctionTable pi = legendre_transform(lnz);
    ConvexityReport cp = convexity_check(pi);
    add("pi_convexity", std::max(0.0, -cp.min_second_difference), 1e-8, true);

    // Biconjugation (Pi)* == lnZ on the interior third of the source grid.
    double bicon = 0.0;
    for (Eigen::Index i = n / 3; i <= 2 * n / 3; ++i)
        bicon = std::max(bicon, std::abs(conjugate_at(pi, lnz.args[i]) - lnz.values[i]));
    add("biconjugation", bicon, 1e-6, gaussian);

    // Candidate input density e^{-Pi}/Z0: normalization and second moment by
    // Simpson on the conjugate's domain.
    const double phi_lo = pi.args[0], phi_hi = pi.args[pi.args.size() - 1];
    const int m = 4000; // intervals, even
    const double h = (phi_hi - phi_lo) / m;
    double norm = 0.0, second = 0.0;
    for (int i = 0; i <= m; ++i) {
        double phi = phi_lo + i * h;
        double w = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        double density = std::exp(-conjugate_at(lnz, phi));
        norm += w * density;
        second += w * density * phi * phi;
    }
    norm *= h / 3.0;
    second *= h / 3.0;
    add("pv_normalization", std::log(norm) - log_z0, 1e-6, false);

    CorrelatorRequest two_point{{MomentumVector{}, MomentumVector{}}, false};
    SourceDerivativeEstimate gamma = correlator_source_derivative_oracle(params, two_point);
    add("moment_match", second / norm - gamma.value.real(),
        std::max(1e-6, 10.0 * gamma.truncation_estimate), gaussian);

    return report;
}

} // namespace frg
