#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "frg/correlators.hpp"
#include "frg/errors.hpp"
#include "frg/rng.hpp"

#include <cmath>
#include <numbers>

using namespace frg;

namespace {

const LatticeSpec kZero;

MomentumVector mode(int n) {
    MomentumVector p;
    p.modes = Eigen::VectorXi::Constant(1, n);
    return p;
}

MomentumVector trivial() { return MomentumVector{}; }

FieldConfig random_field(const LatticeSpec& lat, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(lat.volume());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = rng.normal();
    return FieldConfig(lat, v);
}

} // namespace

TEST_CASE("convolutional stack: constant and spike fields") {
    LatticeSpec lat(1, 4, 1.0);
    const double c = 0.9;
    FieldConfig constant = FieldConfig::constant(lat, c);
    Eigen::VectorXcd g0 = conv_stack_G(constant, {mode(0)});
    for (int x = 0; x < 4; ++x)
        CHECK(std::abs(g0[x] - Complex(4.0 * c * c, 0.0)) < 1e-12);
    Eigen::VectorXcd g1 = conv_stack_G(constant, {mode(2)});
    for (int x = 0; x < 4; ++x)
        CHECK(std::abs(g1[x]) < 1e-12);

    // brute-force oracle: G_1(x) = a sum_y e^{-ipy} phi(x) phi(x+y)
    FieldConfig spike = FieldConfig::zero(lat);
    spike.values[0] = 1.3;
    for (int p = 0; p < 4; ++p) {
        Eigen::VectorXcd got = conv_stack_G(spike, {mode(p)});
        for (int x = 0; x < 4; ++x) {
            Complex direct(0.0, 0.0);
            for (int y = 0; y < 4; ++y)
                direct += std::polar(1.0, -2.0 * std::numbers::pi * p * y / 4.0) *
                          spike.values[x] * spike.values[(x + y) % 4];
            CHECK(std::abs(got[x] - direct) < 1e-12);
        }
    }
}

TEST_CASE("h functional factorizes into transform products") {
    LatticeSpec lat(1, 4, 0.8);
    FieldConfig f = random_field(lat, 5);
    Eigen::VectorXcd ft = dft_forward(f);

    CHECK(std::abs(h_functional(f, {{mode(1)}, false}) - ft[1]) < 1e-12);
    CHECK(std::abs(h_functional(f, {{mode(1), mode(3)}, false}) - ft[1] * ft[3]) < 1e-10);

    FieldConfig s = FieldConfig::constant(kZero, 1.7);
    CHECK(std::abs(h_functional(s, {{trivial(), trivial(), trivial()}, false}) -
                   Complex(1.7 * 1.7 * 1.7, 0.0)) < 1e-12);
}

TEST_CASE("monte-carlo gamma estimates on the gaussian") {
    BareActionParams gauss(1.0, 0.0, kZero);
    SampleBatch batch = action_sample(gauss, 200000, 17);

    GammaEstimate two = estimate_gamma_mc(batch, {{trivial(), trivial()}, false});
    CHECK(std::abs(two.value.real() - 1.0) < 3.0 * two.std_error);

    GammaEstimate one = estimate_gamma_mc(batch, {{trivial()}, false});
    CHECK(std::abs(one.value.real()) < 3.0 * one.std_error);
    GammaEstimate three = estimate_gamma_mc(batch, {{trivial(), trivial(), trivial()}, false});
    CHECK(std::abs(three.value.real()) < 3.0 * three.std_error);

    CorrelatorRequest four{{trivial(), trivial(), trivial(), trivial()}, false};
    GammaEstimate full = estimate_gamma_mc(batch, four);
    CHECK(std::abs(full.value.real() - 3.0) < 3.0 * full.std_error);
    four.connected = true;
    GammaEstimate conn = estimate_gamma_mc(batch, four);
    CHECK(std::abs(conn.value.real()) < 3.0 * conn.std_error);

    SampleBatch empty;
    CHECK_THROWS((void)estimate_gamma_mc(empty, {{trivial()}, false}));
}

TEST_CASE("stderr scales like one over root n") {
    BareActionParams gauss(1.0, 0.0, kZero);
    CorrelatorRequest two{{trivial(), trivial()}, false};
    SampleBatch small = action_sample(gauss, 20000, 23);
    SampleBatch large = action_sample(gauss, 80000, 23);
    double ratio = estimate_gamma_mc(large, two).std_error /
                   estimate_gamma_mc(small, two).std_error;
    CHECK(ratio > 0.3);
    CHECK(ratio < 0.75); // expect ~0.5
}

TEST_CASE("quadrature oracle closed forms") {
    BareActionParams gauss(1.0, 0.0, kZero);
    CHECK(correlator_quadrature_oracle(gauss, {{trivial(), trivial()}, false}).real() ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK(correlator_quadrature_oracle(
              gauss, {{trivial(), trivial(), trivial(), trivial()}, false})
              .real() == doctest::Approx(3.0).epsilon(1e-8));

    LatticeSpec lat(1, 2, 1.0);
    BareActionParams line(1.0, 0.0, lat);
    for (int p : {0, 1}) {
        double psq = lattice_p_squared(lat, mode(p));
        CorrelatorRequest req{{mode(p), mode((2 - p) % 2)}, false};
        CHECK(correlator_quadrature_oracle(line, req).real() ==
              doctest::Approx(1.0 / (psq + 1.0)).epsilon(1e-7));
    }

    BareActionParams quartic(1.0, 1.0, kZero);
    CHECK(correlator_quadrature_oracle(quartic, {{trivial(), trivial()}, false}).real() < 1.0);
}

TEST_CASE("momentum conservation and permutation symmetry") {
    LatticeSpec lat(1, 2, 1.0);
    BareActionParams line(1.0, 0.0, lat);
    CHECK(std::abs(correlator_quadrature_oracle(line, {{mode(0), mode(1)}, false})) < 1e-10);

    LatticeSpec lat4(1, 4, 1.0);
    BareActionParams quartic(1.0, 0.5, lat4);
    Complex a = correlator_quadrature_oracle(quartic, {{mode(1), mode(3)}, false});
    Complex b = correlator_quadrature_oracle(quartic, {{mode(3), mode(1)}, false});
    CHECK(std::abs(a - b) < 1e-10);
}

TEST_CASE("source-derivative oracle closed forms") {
    BareActionParams gauss(1.0, 0.0, kZero);
    auto two = correlator_source_derivative_oracle(gauss, {{trivial(), trivial()}, false});
    CHECK(two.value.real() == doctest::Approx(1.0).epsilon(1e-5));

    auto one = correlator_source_derivative_oracle(gauss, {{trivial()}, false});
    CHECK(std::abs(one.value) < 1e-6);

    auto four = correlator_source_derivative_oracle(
        gauss, {{trivial(), trivial(), trivial(), trivial()}, false});
    CHECK(four.value.real() == doctest::Approx(3.0).epsilon(1e-4));

    auto four_conn = correlator_source_derivative_oracle(
        gauss, {{trivial(), trivial(), trivial(), trivial()}, true});
    CHECK(std::abs(four_conn.value.real()) < 1e-4);
}

TEST_CASE("source-derivative oracle tracks the quadrature oracle") {
    BareActionParams quartic(1.0, 1.0, kZero);
    for (bool connected : {false, true}) {
        for (int n : {2, 4}) {
            CorrelatorRequest req;
            req.connected = connected;
            for (int i = 0; i < n; ++i)
                req.momenta.push_back(trivial());
            Complex exact = correlator_quadrature_oracle(quartic, req);
            auto fd = correlator_source_derivative_oracle(quartic, req);
            CHECK(std::abs(fd.value - exact) <
                  std::max(1e-5, 10.0 * fd.truncation_estimate));
        }
    }

    LatticeSpec lat(1, 2, 1.0);
    BareActionParams line(1.0, 0.5, lat);
    CorrelatorRequest req{{mode(1), mode(1)}, true};
    Complex exact = correlator_quadrature_oracle(line, req);
    auto fd = correlator_source_derivative_oracle(line, req);
    CHECK(std::abs(fd.value - exact) < std::max(1e-5, 10.0 * fd.truncation_estimate));
}

TEST_CASE("request validation") {
    BareActionParams gauss(1.0, 0.0, kZero);
    CHECK_THROWS((void)correlator_quadrature_oracle(gauss, {{}, false}));
    CorrelatorRequest five_conn;
    five_conn.connected = true;
    for (int i = 0; i < 5; ++i)
        five_conn.momenta.push_back(trivial());
    CHECK_THROWS((void)correlator_quadrature_oracle(gauss, five_conn));

    LatticeSpec big(2, 3, 1.0); // 9 sites
    BareActionParams too_big(1.0, 0.0, big);
    MomentumVector p;
    p.modes = Eigen::VectorXi::Zero(2);
    CHECK_THROWS_AS((void)correlator_quadrature_oracle(too_big, {{p, p}, false}),
                    ScaleExceeded);
}
