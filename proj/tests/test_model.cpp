#include "eptrack/model.hpp"
#include "eptrack/paths.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace eptrack;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

model::EffectiveHamiltonian device_h(double v_p, double delta_p_hz) {
    const auto d = model::default_device();
    return model::build_hamiltonian(d.modes, d.pump(v_p, hz_to_rad(delta_p_hz)));
}

// delta_p at which the dressed frequencies coincide.
double degeneracy_delta(const model::Device& d, double v_p) {
    return d.kappa * v_p * v_p / 8.0 * (1.0 / d.modes.omega1 - 1.0 / d.modes.omega2);
}

}  // namespace

TEST_CASE("device constants and derived rates") {
    const auto d = model::default_device();
    CHECK_THAT(rad_to_hz(d.modes.gamma1), WithinAbs(0.676, 1e-3));
    CHECK_THAT(rad_to_hz(d.modes.gamma2), WithinAbs(0.904, 1e-3));
    CHECK_THAT(rad_to_hz(d.modes.gamma2 - d.modes.gamma1), WithinAbs(0.228, 1e-3));
    CHECK_NOTHROW(d.modes.validate());
}

TEST_CASE("closed-form eigenvalues agree with both oracles") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const auto h = oracle::random_weak_coupling(rng);
        const auto e = model::eigenvalues(h);
        const auto q = oracle::eigen_quadratic(h);
        const auto s = oracle::eigen_solver(h);
        const double scale = std::abs(e.plus);
        CHECK(std::abs(e.plus - q.plus) < 1e-10 * scale);
        CHECK(std::abs(e.minus - q.minus) < 1e-10 * scale);
        CHECK(std::abs(e.plus - s.plus) < 1e-10 * scale);
        CHECK(std::abs(e.minus - s.minus) < 1e-10 * scale);
        // Splitting itself, relative to the linewidth scale.
        CHECK(std::abs((e.plus - e.minus) - (q.plus - q.minus)) < 1e-6 * (h.gamma1 + h.gamma2));
    }
}

TEST_CASE("trace and determinant invariants") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto h = oracle::random_weak_coupling(rng);
        const auto e = model::eigenvalues(h);
        CHECK(std::abs(e.plus + e.minus - h.trace()) < 1e-12 * std::abs(h.trace()));
        CHECK(std::abs(e.plus * e.minus - h.determinant()) < 1e-11 * std::abs(h.determinant()));
        CHECK(e.plus.real() >= e.minus.real());
    }
}

TEST_CASE("uncoupled limit returns the bare complex frequencies") {
    const model::EffectiveHamiltonian h{100.0, 101.0, 0.0, 0.2, 0.4};
    const auto e = model::eigenvalues(h);
    CHECK_THAT(e.plus.real(), WithinAbs(101.0, 1e-12));
    CHECK_THAT(e.plus.imag(), WithinAbs(-0.2, 1e-12));
    CHECK_THAT(e.minus.real(), WithinAbs(100.0, 1e-12));
    CHECK_THAT(e.minus.imag(), WithinAbs(-0.1, 1e-12));
}

TEST_CASE("equal real parts are ordered by imaginary part") {
    const model::EffectiveHamiltonian h{100.0, 100.0, 0.05, 0.2, 0.8};
    const auto e = model::eigenvalues(h);
    CHECK(e.plus.real() == e.minus.real());
    CHECK(e.plus.imag() >= e.minus.imag());
}

TEST_CASE("coupling at the transition voltage") {
    const auto h = device_h(0.162, 0.0);
    CHECK_THAT(h.g, WithinAbs(0.3586, 5e-4));
    const auto d = model::default_device();
    CHECK_THAT(h.g, WithinRel(0.25 * (d.modes.gamma2 - d.modes.gamma1), 2e-3));
}

TEST_CASE("exceptional point location") {
    const auto d = model::default_device();
    const auto ep = model::locate_ep(d.modes, d.pump(0.0, 0.0));
    CHECK_THAT(ep.v_p, WithinAbs(0.162, 1e-3));
    CHECK(std::abs(rad_to_hz(ep.delta_p)) < 1e-4);
    CHECK(ep.residual < 1e-12);
    const auto h = model::build_hamiltonian(d.modes, d.pump(ep.v_p, ep.delta_p));
    const auto e = model::eigenvalues(h);
    CHECK(std::abs(e.plus - e.minus) < 1e-5);
    CHECK_THROWS_AS(model::eigenvectors(h), Error);
    try {
        model::eigenvectors(h);
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::DegenerateAtEP);
    }
}

TEST_CASE("doubling the damping contrast doubles the EP voltage") {
    const auto d = model::default_device();
    model::ModePair wide = d.modes;
    wide.gamma2 = wide.gamma1 + 2.0 * (d.modes.gamma2 - d.modes.gamma1);
    const auto a = model::locate_ep(d.modes, d.pump(0.0, 0.0));
    const auto b = model::locate_ep(wide, d.pump(0.0, 0.0));
    CHECK_THAT(b.v_p, WithinRel(2.0 * a.v_p, 1e-9));
}

TEST_CASE("equal damping has no exceptional point") {
    auto d = model::default_device();
    d.modes.gamma2 = d.modes.gamma1;
    try {
        model::locate_ep(d.modes, d.pump(0.0, 0.0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
}

TEST_CASE("PT phases on the degeneracy line") {
    const auto d = model::default_device();
    const double vstar = model::locate_ep(d.modes, d.pump(0.0, 0.0)).v_p;
    for (double v = 0.02; v < 0.6; v += 0.01) {
        if (std::abs(v - vstar) < 1e-3) continue;
        const auto h = model::build_hamiltonian(d.modes, d.pump(v, degeneracy_delta(d, v)));
        const auto e = model::eigenvalues(h);
        if (v < vstar) {
            CHECK(std::abs(e.plus.real() - e.minus.real()) < 1e-9 * d.modes.omega1);
            CHECK(e.plus.imag() != Catch::Approx(e.minus.imag()));
        } else {
            const double expect = -0.25 * (d.modes.gamma1 + d.modes.gamma2);
            CHECK_THAT(e.plus.imag(), WithinAbs(expect, 1e-9));
            CHECK_THAT(e.minus.imag(), WithinAbs(expect, 1e-9));
            CHECK(e.plus.real() > e.minus.real());
        }
    }
}

TEST_CASE("susceptibility matches the factored eigenvalue form") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto h = oracle::random_weak_coupling(rng);
        const auto q = oracle::eigen_quadratic(h);
        for (double dw : {-5.0, -1.0, 0.0, 0.7, 4.0}) {
            const double w = h.omega1 + dw;
            const Complex expect = (h.h22() - w) / ((w - q.plus) * (w - q.minus));
            CHECK(oracle::rel_err(model::susceptibility(h, w), expect) < 1e-8);
        }
    }
}

TEST_CASE("response phase runs from 0 to -pi across the resonances") {
    const auto h = device_h(0.5, 0.3);
    CHECK(std::abs(model::response_phase(h, h.omega1 - 2000.0)) < 0.01);
    CHECK(std::abs(model::response_phase(h, h.omega1 + 2000.0) + kPi) < 0.01);
    // Isolated mode: theta(Omega1) = -pi/2 and slope -2/gamma.
    const model::EffectiveHamiltonian bare{1000.0, 1100.0, 0.0, 2.0, 3.0};
    CHECK_THAT(model::response_phase(bare, 1000.0), WithinAbs(-kPi / 2, 1e-12));
    const double eps = 1e-5;
    const double slope =
        (model::response_phase(bare, 1000.0 + eps) - model::response_phase(bare, 1000.0 - eps)) / (2 * eps);
    CHECK_THAT(slope, WithinRel(-2.0 / 2.0, 1e-6));
}

TEST_CASE("steady state solves the driven linear system") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) {
        const auto h = oracle::random_weak_coupling(rng);
        const double w = h.omega1 + 0.3;
        const auto s = model::steady_state(h, w, 0.7);
        const auto o = oracle::steady_state_lu(h, w, 0.7);
        CHECK(oracle::rel_err(s.a0, o[0]) < 1e-9);
        CHECK(std::abs(s.b1 - o[1]) < 1e-9 * std::abs(o[0]));
        const auto hyb = model::hybrid_state(h, w);
        CHECK(oracle::rel_err(hyb[0], model::susceptibility(h, w)) < 1e-14);
        CHECK(oracle::rel_err(0.7 * hyb[0], s.a0) < 1e-14);
    }
}

TEST_CASE("eigenvectors are normalized, gauge-fixed and exact") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
        const auto h = oracle::random_weak_coupling(rng);
        const auto e = model::eigenvalues(h);
        const auto v = model::eigenvectors(h);
        const auto m = oracle::matrix(h);
        for (auto [lambda, vec] : {std::pair{e.plus, v.plus}, std::pair{e.minus, v.minus}}) {
            const double n = std::norm(vec[0]) + std::norm(vec[1]);
            CHECK_THAT(n, WithinAbs(1.0, 1e-12));
            const std::size_t big = std::abs(vec[0]) >= std::abs(vec[1]) ? 0 : 1;
            CHECK(std::abs(vec[big].imag()) < 1e-15);
            CHECK(vec[big].real() > 0.0);
            const Complex r0 = m(0, 0) * vec[0] + m(0, 1) * vec[1] - lambda * vec[0];
            const Complex r1 = m(1, 0) * vec[0] + m(1, 1) * vec[1] - lambda * vec[1];
            CHECK(std::abs(r0) + std::abs(r1) < 1e-9 * std::abs(lambda));
        }
    }
}

TEST_CASE("eigenvectors in the uncoupled limit are the unit vectors") {
    const model::EffectiveHamiltonian h{100.0, 101.0, 0.0, 0.2, 0.4};
    const auto v = model::eigenvectors(h);
    CHECK(std::abs(v.minus[0] - 1.0) < 1e-14);
    CHECK(std::abs(v.minus[1]) < 1e-14);
    CHECK(std::abs(v.plus[1] - 1.0) < 1e-14);
}

TEST_CASE("sheet tracking permutes around the EP only") {
    const auto d = model::default_device();
    for (auto dir : {paths::Direction::Clockwise, paths::Direction::CounterClockwise}) {
        const auto enclosing = paths::pump_path(paths::pt_symmetric_rectangle(dir), d);
        const auto t = model::sheet_track(enclosing, d.modes);
        CHECK(t.permuted());
        CHECK(t.label(model::SheetLabel::High, enclosing.size() - 1) == model::SheetLabel::Low);
        CHECK(std::abs(t.branch(model::SheetLabel::High, enclosing.size() - 1) -
                       t.points.front().low) < 1e-12 * d.modes.omega1);

        const paths::Corner c[] = {{0.5, 0.3}, {0.3, 0.3}, {0.3, -0.3}, {0.5, -0.3}, {0.5, 0.3}};
        const double e[] = {15, 15, 15, 15};
        const auto inside = paths::pump_path(paths::rectangular_loop(c, e, dir), d);
        const auto u = model::sheet_track(inside, d.modes);
        CHECK_FALSE(u.permuted());
        CHECK(u.cut_crossings.size() % 2 == 0);
    }
}

TEST_CASE("sheet tracking refuses ambiguous coarse paths") {
    const auto d = model::default_device();
    const auto ep = model::locate_ep(d.modes, d.pump(0.0, 0.0));
    // Two samples straddling the EP closely: both assignments cost the same.
    std::vector<model::PumpSettings> p{d.pump(ep.v_p - 1e-3, ep.delta_p), d.pump(ep.v_p, ep.delta_p),
                                       d.pump(ep.v_p + 1e-3, ep.delta_p)};
    try {
        model::sheet_track(p, d.modes);
        FAIL("expected AmbiguousMatching");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AmbiguousMatching);
    }
}

TEST_CASE("input validation") {
    model::ModePair m{1.0, 0.5, 0.1, 0.1};
    CHECK_THROWS_AS(m.validate(), Error);
    m = {1.0, 2.0, -0.1, 0.1};
    CHECK_THROWS_AS(m.validate(), Error);
    const auto d = model::default_device();
    CHECK_THROWS_AS(d.pump(-0.1, 0.0).validate(d.modes), Error);
    CHECK_NOTHROW(d.pump(0.3, 0.0).validate(d.modes));
}
