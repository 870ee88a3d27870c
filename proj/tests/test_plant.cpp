#include "eptrack/plant.hpp"
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

plant::EnvelopeState run_envelope(const model::EffectiveHamiltonian& h, double omega_d, double f,
                                  plant::EnvelopeState s, double duration, double dt) {
    const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
    for (std::size_t k = 0; k < steps; ++k) s = plant::envelope_step(s, h, omega_d, f, dt);
    return s;
}

double envelope_error(const plant::EnvelopeState& s, const std::array<Complex, 2>& ref) {
    return std::hypot(std::abs(s.a0 - ref[0]), std::abs(s.b1 - ref[1]));
}

// Least-squares slope of unwrapped arg / log-magnitude over t >= t_from.
struct Slopes {
    double phase = 0.0;
    double log_mag = 0.0;
};

Slopes fit_slopes(const std::vector<double>& t, const std::vector<Complex>& z, double t_from) {
    double prev = 0.0, offset = 0.0;
    double st = 0, sp = 0, sl = 0, stt = 0, stp = 0, stl = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        double a = std::arg(z[k]);
        if (k > 0) {
            if (a + offset - prev > kPi) offset -= kTwoPi;
            if (a + offset - prev < -kPi) offset += kTwoPi;
        }
        a += offset;
        prev = a;
        if (t[k] < t_from) continue;
        const double l = std::log(std::abs(z[k]));
        st += t[k];
        sp += a;
        sl += l;
        stt += t[k] * t[k];
        stp += t[k] * a;
        stl += t[k] * l;
        ++n;
    }
    const double dn = static_cast<double>(n);
    const double den = dn * stt - st * st;
    return {(dn * stp - st * sp) / den, (dn * stl - st * sl) / den};
}

// Free ringdown of one Newtonian mode, demodulated against w_ref t.
Slopes ringdown(const model::ModePair& m, const model::PumpSettings& p, bool mode2, double w_ref,
                double duration, plant::PumpModel pump_model) {
    plant::NewtonianOptions opt;
    opt.duration = duration;
    opt.pump_model = pump_model;
    if (mode2) {
        opt.initial.y = 1.0;
    } else {
        opt.initial.x = 1.0;
    }
    const double dt = plant::default_newtonian_step(m);
    plant::Demodulator demod(0.2, 2);
    demod.reset(Complex(1.0, 0.0));
    std::vector<double> t;
    std::vector<Complex> z;
    std::size_t k = 0;
    plant::newtonian_simulate(m, p, plant::DriveSpec::off(), opt, [&](const plant::PhysicalState& s) {
        const Complex v = demod.push(mode2 ? s.y : s.x, w_ref * s.t, dt);
        if (k++ % 100 == 0) {
            t.push_back(s.t);
            z.push_back(v);
        }
    });
    return fit_slopes(t, z, 2.0);
}

}  // namespace

TEST_CASE("RK4 envelope step is fourth order") {
    const auto h = device_h(0.3, 0.1);
    const double w = h.omega1 + 3.0;
    const double f = 0.5;
    const double T = 2.0;
    const auto exact = oracle::envelope_exact(h, w, f, {Complex(0.0), Complex(0.0)}, T);
    const double e1 = envelope_error(run_envelope(h, w, f, {}, T, 0.05), exact);
    const double e2 = envelope_error(run_envelope(h, w, f, {}, T, 0.025), exact);
    const double ratio = e1 / e2;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("envelope integrator matches the exact propagator") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10; ++i) {
        const auto h = oracle::random_weak_coupling(rng);
        const double w = h.omega1 + 1.0;
        const std::array<Complex, 2> s0{Complex(0.3, -0.1), Complex(-0.2, 0.05)};
        const auto ref = oracle::envelope_exact(h, w, 1.0, s0, 3.0);
        const auto got = run_envelope(h, w, 1.0, {s0[0], s0[1], 0.0}, 3.0, 1e-3);
        CHECK(envelope_error(got, ref) < 1e-9 * std::abs(ref[0]));
    }
}

TEST_CASE("long runs settle onto the steady state") {
    const auto h = device_h(0.5, 0.3);
    const double gmin = std::min(h.gamma1, h.gamma2);
    const double w = model::eigenvalues(h).plus.real();
    const auto ss = model::steady_state(h, w, 1.0);
    const auto s = run_envelope(h, w, 1.0, {}, 40.0 / gmin, 1e-3);
    CHECK(oracle::rel_err(s.a0, ss.a0) < 1e-6);
}

TEST_CASE("envelope runs are linear in the drive and deterministic") {
    const auto h = device_h(0.2, -0.1);
    const double w = h.omega1 - 0.5;
    const auto a = run_envelope(h, w, 1.0, {}, 5.0, 1e-3);
    const auto b = run_envelope(h, w, 2.0, {}, 5.0, 1e-3);
    const auto c = run_envelope(h, w, 1.0, {}, 5.0, 1e-3);
    CHECK(std::abs(b.a0 / a.a0 - 2.0) < 1e-12);
    CHECK(std::abs(b.b1 / a.b1 - 2.0) < 1e-12);
    CHECK(a.a0 == c.a0);
    CHECK(a.b1 == c.b1);
    CHECK(a.t == c.t);
}

TEST_CASE("free decay never increases the envelope norm") {
    const auto h = device_h(0.4, 0.2);
    plant::EnvelopeState s{Complex(1.0, 0.0), Complex(0.0, 0.5), 0.0};
    double prev = std::norm(s.a0) + std::norm(s.b1);
    for (int k = 0; k < 5000; ++k) {
        s = plant::envelope_step(s, h, h.omega1, 0.0, 1e-3);
        const double n = std::norm(s.a0) + std::norm(s.b1);
        CHECK(n <= prev * (1.0 + 1e-14));
        prev = n;
    }
}

TEST_CASE("overflowing step reports NonFinite") {
    const auto h = device_h(0.3, 0.0);
    plant::EnvelopeState s{Complex(1e300, 0.0), Complex(1e300, 0.0), 0.0};
    try {
        for (int k = 0; k < 10; ++k) s = plant::envelope_step(s, h, h.omega1 - 1e4, 0.0, 1.0);
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFinite);
    }
}

TEST_CASE("demodulator recovers a single tone") {
    const double dt = 1e-4;
    const double w = kTwoPi * 200.0;
    plant::Demodulator d(0.05, 2);
    Complex out;
    for (int k = 0; k < 20000; ++k) {
        const double psi = w * k * dt;
        out = d.push(0.8 * std::cos(psi + 0.4), psi, dt);
    }
    CHECK(std::abs(out - std::polar(0.8, 0.4)) < 1e-3);
}

TEST_CASE("demodulator suppresses white noise by its bandwidth") {
    const double dt = 1e-4;
    const double tau = 0.01;
    const double alpha = -std::expm1(-dt / tau);
    const double r = 1.0 - alpha;
    const double gain = std::pow(alpha, 4) * (1.0 + r * r) / std::pow(1.0 - r * r, 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    plant::Demodulator d(tau, 2);
    double acc = 0.0;
    std::size_t count = 0;
    for (int k = 0; k < 2'000'000; ++k) {
        const Complex y = d.push(n(rng), kTwoPi * 300.0 * k * dt, dt);
        if (k > 10000) {
            acc += std::norm(y);
            ++count;
        }
    }
    CHECK_THAT(acc / static_cast<double>(count), WithinRel(4.0 * gain, 0.1));
}

TEST_CASE("Newtonian ringdown reproduces the quality factors") {
    const auto d = model::default_device();
    const double s = 500.0 / 50'468.68;
    const model::ModePair m{d.modes.omega1 * s, d.modes.omega2 * s, d.modes.gamma1 * s,
                            d.modes.gamma2 * s};
    const model::PumpSettings off{0.0, 0.0, d.v_0, d.kappa * s * s};
    const auto r1 = ringdown(m, off, false, m.omega1, 60.0, plant::PumpModel::Full);
    const auto r2 = ringdown(m, off, true, m.omega2, 60.0, plant::PumpModel::Full);
    CHECK_THAT(m.omega1 / (-2.0 * r1.log_mag), WithinRel(74'658.0, 0.01));
    CHECK_THAT(m.omega2 / (-2.0 * r2.log_mag), WithinRel(56'424.0, 0.01));
}

TEST_CASE("static pump term shifts the mode by kappa Vp^2 / (8 w1)") {
    const model::ModePair m{kTwoPi * 100.0, kTwoPi * 300.0, kTwoPi * 0.01, kTwoPi * 0.01};
    const double v_p = 1.0;
    const double kappa = 8.0 * m.omega1 * kTwoPi * 0.05;
    const model::PumpSettings on{v_p, 0.0, 1.0, kappa};
    const model::PumpSettings off{0.0, 0.0, 1.0, kappa};
    const auto pumped = ringdown(m, on, false, m.omega1, 20.0, plant::PumpModel::StaticOnly);
    const auto bare = ringdown(m, off, false, m.omega1, 20.0, plant::PumpModel::StaticOnly);
    const double shift = -(pumped.phase - bare.phase);
    CHECK_THAT(shift, WithinRel(kappa * v_p * v_p / (8.0 * m.omega1), 1e-3));
}

TEST_CASE("Newtonian model rejects bad options") {
    const auto d = model::default_device();
    plant::NewtonianOptions opt;
    opt.duration = -1.0;
    CHECK_THROWS_AS(plant::newtonian_simulate(d.modes, d.pump(0.1, 0.0), plant::DriveSpec::off(), opt),
                    Error);
    CHECK_THROWS_AS(plant::Demodulator(0.0), Error);
}

TEST_CASE("seeded force noise is reproducible") {
    plant::ForceNoise a(0.1, 42), b(0.1, 42), c(0.0, 42);
    for (int k = 0; k < 100; ++k) CHECK(a.draw() == b.draw());
    CHECK(c.draw() == Complex(0.0, 0.0));
}
