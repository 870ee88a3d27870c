#include "eptrack/spectra.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace eptrack;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const model::Device kDev = model::default_device();

model::EffectiveHamiltonian device_h(double v_p, double delta_p_hz) {
    return model::build_hamiltonian(kDev.modes, kDev.pump(v_p, hz_to_rad(delta_p_hz)));
}

// Grid that spans both resonances regardless of their order.
std::vector<double> covering_grid(const model::EffectiveHamiltonian& h, std::size_t n = 801) {
    const double gm = std::max(h.gamma1, h.gamma2);
    return spectra::linspace(std::min(h.omega1, h.omega2) - 6 * gm, std::max(h.omega1, h.omega2) + 6 * gm, n);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double param_error(const spectra::FitParams& p, const model::EffectiveHamiltonian& h, double varphi,
                   Complex b) {
    return std::max({rel(p.omega1, h.omega1), rel(p.omega2, h.omega2), rel(p.gamma1, h.gamma1),
                     rel(p.gamma2, h.gamma2), rel(p.g, h.g), std::abs(p.varphi - varphi),
                     std::abs(p.b - b) / std::abs(b)});
}

std::size_t count_peaks(const std::vector<spectra::SweepPoint>& d) {
    std::size_t n = 0;
    for (std::size_t k = 1; k + 1 < d.size(); ++k) {
        const double m = std::abs(d[k].value());
        if (m > std::abs(d[k - 1].value()) && m > std::abs(d[k + 1].value())) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("analytic sweep is the susceptibility through the circuit") {
    const auto h = device_h(0.5, 0.3);
    const auto grid = spectra::default_grid(h);
    spectra::SweepConfig c;
    c.f = 0.7;
    c.varphi = deg_to_rad(-65.0);
    c.feedthrough = {0.01, 0.02};
    const auto d = spectra::sweep(h, grid, c);
    REQUIRE(d.size() == grid.size());
    for (std::size_t k = 0; k < d.size(); k += 37) {
        const Complex expect = 0.7 * model::susceptibility(h, grid[k]) * std::polar(1.0, c.varphi) + c.feedthrough;
        CHECK(std::abs(d[k].value() - expect) < 1e-12 * std::abs(expect));
        CHECK(d[k].omega_d == grid[k]);
    }
}

TEST_CASE("default grid brackets both resonances") {
    const auto h = device_h(0.5, 0.3);
    const auto g = spectra::default_grid(h);
    CHECK(g.size() == spectra::kDefaultSweepPoints);
    CHECK_THAT(g.front(), WithinAbs(h.omega1 - 6 * h.gamma2, 1e-9));
    const auto e = model::eigenvalues(h);
    CHECK(g.front() < e.minus.real());
    CHECK(g.back() > e.plus.real());
}

TEST_CASE("simulated sweep agrees with the analytic response") {
    const auto h = device_h(0.3, 0.1);
    const auto grid = spectra::linspace(h.omega1 - 10.0, h.omega1 + 10.0, 60);
    spectra::SweepConfig a;
    a.varphi = 0.3;
    auto s = a;
    s.source = spectra::SweepSource::Simulated;
    const auto da = spectra::sweep(h, grid, a);
    const auto ds = spectra::sweep(h, grid, s);
    double peak = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        peak = std::max(peak, std::abs(da[k].value()));
        worst = std::max(worst, std::abs(da[k].value() - ds[k].value()));
    }
    CHECK(worst < 1e-5 * peak);
}

TEST_CASE("peak count follows the PT phase") {
    // Deep in the symmetric phase the split exceeds the linewidth; in the broken
    // phase the resonances merge. At 0.5 V the split is still below the linewidth.
    const auto sym = spectra::sweep(device_h(1.0, 0.0), spectra::default_grid(device_h(1.0, 0.0)), {});
    CHECK(count_peaks(sym) == 2);
    const auto brk = spectra::sweep(device_h(0.05, 0.0), spectra::default_grid(device_h(0.05, 0.0)), {});
    CHECK(count_peaks(brk) == 1);
    const auto mid = spectra::sweep(device_h(0.5, 0.0), spectra::default_grid(device_h(0.5, 0.0)), {});
    CHECK(count_peaks(mid) == 1);
}

TEST_CASE("seed validation") {
    const auto h = device_h(0.5, 0.3);
    const auto short_grid = spectra::linspace(h.omega1 - 10, h.omega1 + 10, 30);
    try {
        spectra::initial_guess(spectra::sweep(h, short_grid, {}));
        FAIL("expected InvalidArgument");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
    std::vector<spectra::SweepPoint> flat;
    for (double w : spectra::linspace(1000.0, 1010.0, 100)) flat.push_back({w, 0.5, 0.1});
    try {
        spectra::initial_guess(flat);
        FAIL("expected DegenerateSweep");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateSweep);
    }
    CHECK_THROWS_AS(spectra::sweep(h, std::vector<double>{}, {}), Error);
}

TEST_CASE("noiseless round trip on random Hamiltonians") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const auto h = oracle::random_weak_coupling(rng);
        spectra::SweepConfig c;
        c.varphi = u(rng);
        c.f = 0.5 * h.gamma1;
        c.feedthrough = {0.05, -0.02};
        const auto r = spectra::fit_sweep(spectra::sweep(h, covering_grid(h), c));
        CHECK(r.status == spectra::FitStatus::Converged);
        CHECK(param_error(r.params, h, c.varphi, c.feedthrough) < 1e-8);
    }
}

TEST_CASE("circuit phase recovered within a tenth of a degree") {
    const auto h = device_h(0.3, -0.2);
    for (double deg : {-170.0, -65.0, 0.0, 40.0, 120.0}) {
        spectra::SweepConfig c;
        c.varphi = deg_to_rad(deg);
        c.feedthrough = {0.01, 0.02};
        const auto r = spectra::fit_sweep(spectra::sweep(h, spectra::default_grid(h), c));
        CHECK(std::abs(rad_to_deg(wrap_phase(r.params.varphi - c.varphi))) < 0.1);
    }
}

TEST_CASE("fit commutes with a frequency translation") {
    const auto h = device_h(0.4, 0.2);
    auto shifted = h;
    const double d = kTwoPi * 3.0;
    shifted.omega1 += d;
    shifted.omega2 += d;
    spectra::SweepConfig c;
    c.feedthrough = {0.01, 0.0};
    auto grid = spectra::default_grid(h);
    auto grid2 = grid;
    for (double& w : grid2) w += d;
    const auto a = spectra::fit_sweep(spectra::sweep(h, grid, c));
    const auto b = spectra::fit_sweep(spectra::sweep(shifted, grid2, c));
    CHECK_THAT(b.params.omega1 - a.params.omega1, WithinAbs(d, 1e-7));
    CHECK_THAT(b.params.omega2 - a.params.omega2, WithinAbs(d, 1e-7));
    CHECK_THAT(b.params.gamma1, WithinRel(a.params.gamma1, 1e-8));
    CHECK_THAT(b.params.g, WithinRel(a.params.g, 1e-8));
}

TEST_CASE("more iterations never raise the residual") {
    const auto h = device_h(0.5, 0.3);
    spectra::SweepConfig c;
    c.varphi = 0.2;
    c.noise_std = spectra::noise_for_snr(h, spectra::default_grid(h), c, 40.0);
    c.seed = 3;
    const auto data = spectra::sweep(h, spectra::default_grid(h), c);
    const auto seed = spectra::initial_guess(data);
    double prev = spectra::rms_residual(seed.params, data);
    for (int it : {1, 2, 4, 8, 16, 64}) {
        spectra::FitOptions o;
        o.max_iterations = it;
        const auto r = spectra::fit(data, seed.params, o);
        CHECK(r.residual <= prev * (1.0 + 1e-12));
        CHECK(r.iterations <= it);
        prev = r.residual;
    }
}

TEST_CASE("gain medium is reported as non-physical") {
    // A mode with negative damping: chi has a pole in the upper half plane.
    model::EffectiveHamiltonian h{1000.0, 1006.0, 0.0, -1.0, 2.0};
    spectra::SweepConfig c;
    c.feedthrough = {0.01, 0.0};
    const auto grid = spectra::linspace(990.0, 1018.0, 401);
    const auto data = spectra::sweep(h, grid, c);
    spectra::FitParams seed{h.omega1, h.omega2, h.gamma1, h.gamma2, 0.0, 1.0, 0.0, c.feedthrough};
    const auto r = spectra::fit(data, seed);
    CHECK(r.status == spectra::FitStatus::NonPhysical);
}

TEST_CASE("sixty decibel Monte Carlo meets the eigenvalue tolerances") {
    const auto h = device_h(0.5, 0.3);
    const auto e = model::eigenvalues(h);
    const auto grid = spectra::default_grid(h);
    spectra::SweepConfig c;
    c.varphi = deg_to_rad(-65.0);
    c.feedthrough = {0.01, 0.02};
    c.noise_std = spectra::noise_for_snr(h, grid, c, 60.0);
    const auto res = spectra::monte_carlo_fits(h, grid, c, 20, exec::Policy::Serial);
    int pass = 0;
    for (const auto& r : res) {
        const double dre = std::max(std::abs(r.eigen.plus.real() - e.plus.real()),
                                    std::abs(r.eigen.minus.real() - e.minus.real()));
        const double dim = std::max(rel(r.eigen.plus.imag(), e.plus.imag()), rel(r.eigen.minus.imag(), e.minus.imag()));
        pass += dre < kTwoPi * 5e-3 && dim < 0.05;
    }
    CHECK(pass >= 19);
}

TEST_CASE("noise level hits the requested SNR") {
    const auto h = device_h(0.5, 0.3);
    const auto grid = spectra::default_grid(h);
    spectra::SweepConfig c;
    const double peak = [&] {
        double m = 0.0;
        for (const auto& p : spectra::sweep(h, grid, c)) m = std::max(m, std::abs(p.value()));
        return m;
    }();
    CHECK_THAT(spectra::noise_for_snr(h, grid, c, 60.0), WithinRel(peak * 1e-3, 1e-12));
}

TEST_CASE("surfaces from fits match the closed form") {
    const auto v = spectra::linspace(0.1, 0.5, 3);
    const auto d = spectra::linspace(-0.3, 0.3, 3);
    spectra::SurfaceOptions fitted;
    fitted.sweep.varphi = deg_to_rad(-65.0);
    fitted.sweep.feedthrough = {0.01, 0.02};
    spectra::SurfaceOptions exact = fitted;
    exact.analytic = true;
    const auto a = spectra::build_surfaces(kDev, v, d, fitted, exec::Policy::Serial);
    const auto b = spectra::build_surfaces(kDev, v, d, exact, exec::Policy::Serial);
    REQUIRE(a.cells.size() == 9);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            REQUIRE(a.at(i, j).eigen.has_value());
            CHECK(a.at(i, j).v_p == v[i]);
            CHECK(a.at(i, j).delta_p_hz == d[j]);
            CHECK(std::abs(a.at(i, j).eigen->plus - b.at(i, j).eigen->plus) < 1e-6);
            CHECK(std::abs(a.at(i, j).eigen->minus - b.at(i, j).eigen->minus) < 1e-6);
        }
    }
}

TEST_CASE("branch point estimate picks the closest coalescence") {
    const auto v = spectra::linspace(0.05, 0.5, 21);
    const auto d = spectra::linspace(-0.5, 0.5, 21);
    spectra::SurfaceOptions opt;
    opt.analytic = true;
    const auto s = spectra::build_surfaces(kDev, v, d, opt, exec::Policy::Serial);
    const auto bp = spectra::estimate_branch_point(s);
    CHECK(std::abs(bp.v_p - 0.162) <= v[1] - v[0]);
    CHECK(std::abs(bp.delta_p_hz) <= d[1] - d[0]);
}

TEST_CASE("linspace endpoints") {
    const auto g = spectra::linspace(1.0, 2.0, 5);
    CHECK(g.front() == 1.0);
    CHECK(g.back() == 2.0);
    CHECK(g[2] == 1.5);
    CHECK(spectra::linspace(3.0, 4.0, 1) == std::vector<double>{3.0});
}
