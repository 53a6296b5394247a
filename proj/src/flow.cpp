#include "frg/flow.hpp"

#include "frg/errors.hpp"
#include "frg/interp.hpp"

#include <cmath>
#include <sstream>
#include <numbers>

namespace frg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string breakdown_message(double k, const char* what, double where, double den) {
    std::ostringstream msg;
    msg << "flow breakdown at k=" << k << ": " << what << " " << where
        << " has nonpositive denominator " << den;
    return msg.str();
}

void check_inside(const GridPotential& g, double phi) {
    if (phi < g.phi_nodes[0] || phi > g.phi_nodes[g.phi_nodes.size() - 1])
        throw std::invalid_argument("grid potential: field outside grid range");
}

/// Momentum eigenvalues of a translation-invariant site-space kernel,
/// divided by the cell measure (so a pure mass kernel gives m^2 per mode).
Eigen::VectorXd spectral_eigenvalues(const LatticeSpec& lattice, const Eigen::MatrixXd& kernel) {
    const auto grid = momentum_grid(lattice);
    Eigen::VectorXd ev(lattice.volume());
    for (Eigen::Index ip = 0; ip < lattice.volume(); ++ip) {
        Complex acc(0.0, 0.0);
        for (Eigen::Index y = 0; y < lattice.volume(); ++y)
            acc += kernel(0, y) * std::polar(1.0, momentum_dot_site(lattice, grid[ip], y));
        ev[ip] = acc.real() / lattice.cell();
    }
    return ev;
}

double constant_field_value(const FieldConfig& phi_a, const char* what) {
    double c = phi_a.values.size() > 0 ? phi_a.values[0] : 0.0;
    for (Eigen::Index i = 1; i < phi_a.values.size(); ++i)
        if (phi_a.values[i] != c)
            throw std::invalid_argument(std::string(what) +
                                        ": local-potential truncation requires a constant field");
    return c;
}

double kinetic_energy(const LatticeSpec& spec, const Eigen::VectorXd& phi) {
    double s = 0.0;
    for (Eigen::Index x = 0; x < spec.volume(); ++x)
        for (int mu = 0; mu < spec.dim; ++mu) {
            double d = (phi[spec.neighbor(x, mu, +1)] - phi[x]) / spec.spacing;
            s += 0.5 * d * d;
        }
    return s * spec.cell();
}

Eigen::VectorXd minus_laplacian(const LatticeSpec& spec, const Eigen::VectorXd& phi) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.volume());
    const double a2 = spec.spacing * spec.spacing;
    for (Eigen::Index x = 0; x < spec.volume(); ++x)
        for (int mu = 0; mu < spec.dim; ++mu)
            out[x] -= (phi[spec.neighbor(x, mu, +1)] + phi[spec.neighbor(x, mu, -1)] -
                       2.0 * phi[x]) /
                      a2;
    return out;
}

// Degrees of freedom that actually flow, as a flat vector.
Eigen::VectorXd pack(const Functional& f) {
    if (const auto* q = std::get_if<QuadraticFunctional>(&f))
        return Eigen::VectorXd::Constant(1, q->constant);
    return std::get<GridPotential>(f).u_values;
}

void unpack(Functional& f, const Eigen::VectorXd& dof) {
    if (auto* q = std::get_if<QuadraticFunctional>(&f))
        q->constant = dof[0];
    else
        std::get<GridPotential>(f).u_values = dof;
}

} // namespace

double GridPotential::value(double phi) const {
    check_inside(*this, phi);
    return local_derivative(phi_nodes, u_values, phi, 0);
}

double GridPotential::first_derivative(double phi) const {
    check_inside(*this, phi);
    return local_derivative(phi_nodes, u_values, phi, 1);
}

double GridPotential::second_derivative(double phi) const {
    check_inside(*this, phi);
    return local_derivative(phi_nodes, u_values, phi, 2);
}

Eigen::VectorXd GridPotential::curvature_nodes() const {
    Eigen::VectorXd out(phi_nodes.size());
    for (Eigen::Index i = 0; i < phi_nodes.size(); ++i)
        out[i] = local_derivative(phi_nodes, u_values, phi_nodes[i], 2, 5);
    return out;
}

double functional_value(const FlowState& state, const FieldConfig& phi_a) {
    if (!(phi_a.lattice == state.lattice))
        throw std::invalid_argument("functional_value: lattice mismatch");
    if (const auto* q = std::get_if<QuadraticFunctional>(&state.functional))
        return 0.5 * phi_a.values.dot(q->kernel * phi_a.values) + q->linear.dot(phi_a.values) +
               q->constant;
    const auto& g = std::get<GridPotential>(state.functional);
    double s = kinetic_energy(state.lattice, phi_a.values);
    for (Eigen::Index x = 0; x < phi_a.values.size(); ++x)
        s += state.lattice.cell() * g.value(phi_a.values[x]);
    return s;
}

Eigen::VectorXd functional_gradient(const FlowState& state, const FieldConfig& phi_a) {
    if (!(phi_a.lattice == state.lattice))
        throw std::invalid_argument("functional_gradient: lattice mismatch");
    if (const auto* q = std::get_if<QuadraticFunctional>(&state.functional))
        return (q->kernel * phi_a.values + q->linear) / state.lattice.cell();
    const auto& g = std::get<GridPotential>(state.functional);
    Eigen::VectorXd out = minus_laplacian(state.lattice, phi_a.values);
    for (Eigen::Index x = 0; x < out.size(); ++x)
        out[x] += g.first_derivative(phi_a.values[x]);
    return out;
}

Eigen::MatrixXd functional_hessian(const FlowState& state, const FieldConfig& phi_a) {
    if (!(phi_a.lattice == state.lattice))
        throw std::invalid_argument("functional_hessian: lattice mismatch");
    if (const auto* q = std::get_if<QuadraticFunctional>(&state.functional))
        return q->kernel;
    const auto& g = std::get<GridPotential>(state.functional);
    double c = constant_field_value(phi_a, "functional_hessian");
    const LatticeSpec& spec = state.lattice;
    Eigen::MatrixXd h =
        spec.cell() * g.second_derivative(c) *
        Eigen::MatrixXd::Identity(spec.volume(), spec.volume());
    const double w = spec.cell() / (spec.spacing * spec.spacing);
    for (Eigen::Index x = 0; x < spec.volume(); ++x)
        for (int mu = 0; mu < spec.dim; ++mu) {
            Eigen::Index xp = spec.neighbor(x, mu, +1);
            h(x, x) += w;
            h(xp, xp) += w;
            h(x, xp) -= w;
            h(xp, x) -= w;
        }
    return h;
}

Functional wetterich_rhs(const FlowState& state, RegulatorFamily family) {
    const RegulatorSpec reg(family, state.k, state.lattice);
    const auto grid = momentum_grid(state.lattice);
    Eigen::VectorXd psq(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        psq[i] = lattice_p_squared(state.lattice, grid[i]);

    if (const auto* q = std::get_if<QuadraticFunctional>(&state.functional)) {
        Eigen::VectorXd ev = spectral_eigenvalues(state.lattice, q->kernel);
        double dc = 0.0;
        for (Eigen::Index ip = 0; ip < ev.size(); ++ip) {
            double den = ev[ip] + regulator_value_psq(reg, psq[ip]);
            if (den <= 0.0)
                throw FlowBreakdown(breakdown_message(state.k, "mode", static_cast<double>(ip), den));
            dc += 0.5 * regulator_k_derivative_psq(reg, psq[ip]) / den;
        }
        QuadraticFunctional rhs;
        rhs.kernel = Eigen::MatrixXd::Zero(q->kernel.rows(), q->kernel.cols());
        rhs.linear = Eigen::VectorXd::Zero(q->linear.size());
        rhs.constant = dc;
        return rhs;
    }

    const auto& g = std::get<GridPotential>(state.functional);
    GridPotential rhs;
    rhs.phi_nodes = g.phi_nodes;
    rhs.u_values.resize(g.u_values.size());
    Eigen::VectorXd upp = g.curvature_nodes();
    const double volume = static_cast<double>(state.lattice.volume());
    for (Eigen::Index node = 0; node < upp.size(); ++node) {
        double acc = 0.0;
        for (Eigen::Index ip = 0; ip < psq.size(); ++ip) {
            double den = psq[ip] + upp[node] + regulator_value_psq(reg, psq[ip]);
            if (den <= 0.0)
                throw FlowBreakdown(
                    breakdown_message(state.k, "node phi", g.phi_nodes[node], den));
            acc += 0.5 * regulator_k_derivative_psq(reg, psq[ip]) / den;
        }
        rhs.u_values[node] = acc / volume;
    }
    return rhs;
}

namespace {

// dy/dt with t = ln(k/Lambda); y are the flowing degrees of freedom.
Eigen::VectorXd rhs_t(const FlowState& proto, RegulatorFamily family, double k,
                      const Eigen::VectorXd& y) {
    FlowState s = proto;
    s.k = k;
    unpack(s.functional, y);
    return k * pack(wetterich_rhs(s, family));
}

Eigen::VectorXd rk4_step(const FlowState& proto, RegulatorFamily family, double t0, double h,
                         double lambda_uv, const Eigen::VectorXd& y) {
    auto k_of = [&](double t) { return lambda_uv * std::exp(t); };
    Eigen::VectorXd k1 = rhs_t(proto, family, k_of(t0), y);
    Eigen::VectorXd k2 = rhs_t(proto, family, k_of(t0 + 0.5 * h), y + 0.5 * h * k1);
    Eigen::VectorXd k3 = rhs_t(proto, family, k_of(t0 + 0.5 * h), y + 0.5 * h * k2);
    Eigen::VectorXd k4 = rhs_t(proto, family, k_of(t0 + h), y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One grid interval with adaptive halving; returns accumulated error estimate.
Eigen::VectorXd advance(const FlowState& proto, RegulatorFamily family, double t0, double h,
                        double lambda_uv, const Eigen::VectorXd& y, double tol, int depth,
                        double& err_acc) {
    Eigen::VectorXd full = rk4_step(proto, family, t0, h, lambda_uv, y);
    Eigen::VectorXd half = rk4_step(proto, family, t0, 0.5 * h, lambda_uv, y);
    half = rk4_step(proto, family, t0 + 0.5 * h, 0.5 * h, lambda_uv, half);
    double err = (full - half).cwiseAbs().maxCoeff() / 15.0;
    // At max depth accept the half-step result and carry the defect in the
    // error budget: sharp-cutoff regulators have a kink at k^2 = phat^2 that
    // no amount of halving smooths out.
    if (err <= tol || depth >= 24) {
        err_acc += err;
        return half;
    }
    Eigen::VectorXd mid =
        advance(proto, family, t0, 0.5 * h, lambda_uv, y, 0.5 * tol, depth + 1, err_acc);
    return advance(proto, family, t0 + 0.5 * h, 0.5 * h, lambda_uv, mid, 0.5 * tol, depth + 1,
                   err_acc);
}

TrajectoryPoint log_point(const FlowState& s, double step_error) {
    TrajectoryPoint p;
    p.k = s.k;
    p.step_error = step_error;
    if (const auto* q = std::get_if<QuadraticFunctional>(&s.functional)) {
        Eigen::VectorXd ev = spectral_eigenvalues(s.lattice, q->kernel);
        p.curvature_zero = ev[0]; // zero mode is first in the grid ordering
        p.constant = q->constant;
    } else {
        const auto& g = std::get<GridPotential>(s.functional);
        p.curvature_zero = g.second_derivative(0.0);
        p.constant = g.value(0.0);
    }
    return p;
}

} // namespace

FlowResult integrate_flow(const FlowState& initial, RegulatorFamily family, double k_min,
                          FlowStepControl control) {
    if (k_min <= 0.0 || k_min > initial.k)
        throw std::invalid_argument("integrate_flow: need 0 < k_min <= Lambda");
    if (control.steps < 1)
        throw std::invalid_argument("integrate_flow: need at least one step");
    const double lambda_uv = initial.k;
    FlowResult result;
    result.trajectory.reserve(control.steps + 1);

    FlowState state = initial;
    Eigen::VectorXd y = pack(state.functional);
    result.trajectory.push_back(log_point(state, 0.0));
    if (control.store_states)
        result.states.push_back(state);

    const double t_end = std::log(k_min / lambda_uv);
    const double h = t_end / control.steps;
    for (int i = 0; i < control.steps; ++i) {
        double err = 0.0;
        y = advance(state, family, i * h, h, lambda_uv, y, control.tol, 0, err);
        state.k = lambda_uv * std::exp((i + 1) * h);
        unpack(state.functional, y);
        result.error_estimate += err;
        result.trajectory.push_back(log_point(state, err));
        if (control.store_states)
            result.states.push_back(state);
    }
    state.k = k_min;
    result.endpoint = state;
    return result;
}

FlowState initial_flow_state_grid(const BareActionParams& params, RegulatorFamily family,
                                  double lambda_uv, GridOptions grid) {
    if (grid.nodes < 7 || grid.nodes % 2 == 0)
        throw std::invalid_argument("initial_flow_state_grid: need an odd node count >= 7");
    const double sigma_sq = params.mass_sq + params.quartic;
    if (sigma_sq <= 0.0)
        throw std::invalid_argument("initial_flow_state_grid: m^2 + lambda must be positive");
    const double w = grid.halfwidth_sigmas / std::sqrt(sigma_sq);

    GridPotential g;
    g.phi_nodes = Eigen::VectorXd::LinSpaced(grid.nodes, -w, w);
    g.u_values.resize(grid.nodes);

    const LatticeSpec& lat = params.lattice;
    const RegulatorSpec reg(family, lambda_uv, lat);
    const auto momenta = momentum_grid(lat);
    const double volume = static_cast<double>(lat.volume());
    for (Eigen::Index i = 0; i < grid.nodes; ++i) {
        double phi = g.phi_nodes[i];
        double classical = 0.5 * params.mass_sq * phi * phi +
                           params.quartic / 24.0 * phi * phi * phi * phi;
        double spp = params.mass_sq + 0.5 * params.quartic * phi * phi;
        double one_loop = 0.0;
        for (const auto& p : momenta) {
            double den = lattice_p_squared(lat, p) + spp + regulator_value(reg, p);
            if (den <= 0.0)
                throw FlowBreakdown("initial_flow_state_grid: UV kernel not positive");
            one_loop += 0.5 * std::log(lat.cell() * den / kTwoPi);
        }
        g.u_values[i] = classical + one_loop / volume;
    }
    return FlowState{lambda_uv, lat, std::move(g)};
}

FlowState initial_flow_state_quadratic(const BareActionParams& params, RegulatorFamily family,
                                       double lambda_uv) {
    if (params.quartic != 0.0)
        throw std::invalid_argument("initial_flow_state_quadratic: requires lambda = 0");
    const LatticeSpec& lat = params.lattice;
    QuadraticFunctional q;
    q.kernel = quadratic_kernel(params);
    q.linear = Eigen::VectorXd::Zero(lat.volume());
    const RegulatorSpec reg(family, lambda_uv, lat);
    double c = 0.0;
    for (const auto& p : momentum_grid(lat)) {
        double den = lattice_p_squared(lat, p) + params.mass_sq + regulator_value(reg, p);
        if (den <= 0.0)
            throw FlowBreakdown("initial_flow_state_quadratic: UV kernel not positive");
        c += 0.5 * std::log(lat.cell() * den / kTwoPi);
    }
    q.constant = c;
    return FlowState{lambda_uv, lat, std::move(q)};
}

bool uv_scale_validated(const BareActionParams& params, double lambda_uv) {
    double scale = std::max(params.mass_sq, std::pow(params.quartic, 2.0 / 3.0));
    return lambda_uv * lambda_uv >= 100.0 * scale;
}

GridPotential effective_action_oracle(const BareActionParams& params,
                                      const Eigen::VectorXd& phi_nodes) {
    const LatticeSpec& lat = params.lattice;
    if (lat.volume() > 2)
        throw ScaleExceeded("effective_action_oracle: more than 2 sites");
    const double vol = lat.cell() * static_cast<double>(lat.volume());
    const Eigen::MatrixXd scales = quadrature_basis(params);
    const double cell = lat.cell();

    auto stats = [&](double j) {
        // ln Z, <phi_bar>, Var(phi_bar) at constant source j, phi_bar = mean site field
        auto log_density = [&](const Eigen::VectorXd& phi) {
            FieldConfig cfg(lat, phi);
            return -evaluate_action(cfg, params) + cell * j * phi.sum();
        };
        double lz = log_integral(scales, log_density);
        Complex m1 = expectation(scales, log_density,
                                 [&](const Eigen::VectorXd& phi) {
                                     return Complex(phi.mean(), 0.0);
                                 });
        Complex m2 = expectation(scales, log_density,
                                 [&](const Eigen::VectorXd& phi) {
                                     double mb = phi.mean();
                                     return Complex(mb * mb, 0.0);
                                 });
        return std::tuple<double, double, double>(lz, m1.real(),
                                                  m2.real() - m1.real() * m1.real());
    };

    GridPotential out;
    out.phi_nodes = phi_nodes;
    out.u_values.resize(phi_nodes.size());
    for (Eigen::Index i = 0; i < phi_nodes.size(); ++i) {
        const double target = phi_nodes[i];
        // sup_j [ j target vol - lnZ(j) ]: stationarity is <phi_bar>(j) = target,
        // solved by Newton with d<phi_bar>/dj = vol Var(phi_bar).
        double j = (params.mass_sq + params.quartic) * target;
        double lz = 0.0;
        bool converged = false;
        for (int iter = 0; iter < 100; ++iter) {
            auto [lzj, mean, var] = stats(j);
            lz = lzj;
            double mismatch = target - mean;
            if (std::abs(mismatch) < 1e-11) {
                converged = true;
                break;
            }
            if (var <= 0.0)
                throw ConvergenceFailure("effective_action_oracle: flat source response");
            double step = mismatch / (vol * var);
            double cap = 2.0 / (vol * std::sqrt(var));
            j += std::clamp(step, -cap, cap);
        }
        if (!converged)
            throw ConvergenceFailure("effective_action_oracle: source maximization stalled");
        out.u_values[i] = (j * target * vol - lz) / vol;
    }
    return out;
}

} // namespace frg
