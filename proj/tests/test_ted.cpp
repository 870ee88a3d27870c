#include "eptrack/common.hpp"
#include "eptrack/ted.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace eptrack;
using Catch::Matchers::WithinRel;

TEST_CASE("relaxation time scales with width squared") {
    const auto si = ted::silicon();
    const ted::BeamSpec a{9e-6, kTwoPi * 50'000.0};
    const ted::BeamSpec b{18e-6, kTwoPi * 50'000.0};
    const double ta = ted::thermal_relaxation_time(a, si);
    CHECK_THAT(ta, WithinRel(81e-12 / (kPi * kPi * 8.8e-5), 1e-12));
    CHECK_THAT(ted::thermal_relaxation_time(b, si), WithinRel(4.0 * ta, 1e-12));
}

TEST_CASE("Zener Q has its minimum at w tau = 1") {
    const auto si = ted::silicon();
    const double scale = si.heat_capacity / (si.youngs_modulus * si.thermal_expansion *
                                             si.thermal_expansion * si.equilibrium_temperature);
    CHECK_THAT(ted::q_ted(1.0, 1.0, si), WithinRel(2.0 * scale, 1e-12));
    for (double wt : {0.01, 0.3, 0.9, 1.1, 3.0, 100.0}) CHECK(ted::q_ted(wt, 1.0, si) > 2.0 * scale);
    CHECK_THAT(ted::q_ted(0.5, 1.0, si), WithinRel(ted::q_ted(2.0, 1.0, si), 1e-12));
}

TEST_CASE("narrower beam damps less at the device frequency") {
    const auto si = ted::silicon();
    const double w = kTwoPi * 50'468.68;
    const double q9 = ted::q_ted(ted::BeamSpec{9e-6, w}, si);
    const double q13 = ted::q_ted(ted::BeamSpec{13e-6, w}, si);
    CHECK(q9 > q13);
    // Below the relaxation peak Q ~ 1 / (w tau) ~ 1 / b^2.
    CHECK_THAT(q9 / q13, WithinRel(169.0 / 81.0, 0.02));
    CHECK(ted::damping_rate(w, q9) < ted::damping_rate(w, q13));
}

TEST_CASE("damping rate and validation") {
    CHECK(ted::damping_rate(100.0, 50.0) == 2.0);
    CHECK(ted::damping_rate(100.0, INFINITY) == 0.0);
    CHECK_THROWS_AS(ted::damping_rate(100.0, 0.0), Error);
    CHECK_THROWS_AS(ted::damping_rate(100.0, -1.0), Error);
    CHECK_THROWS_AS(ted::thermal_relaxation_time(ted::BeamSpec{0.0, 1.0}, ted::silicon()), Error);
    auto bad = ted::silicon();
    bad.thermal_diffusivity = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_NOTHROW(ted::material("si"));
    try {
        ted::material("unobtainium");
        FAIL("expected Config");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }
}
