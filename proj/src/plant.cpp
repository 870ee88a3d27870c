#include "eptrack/plant.hpp"

#include <array>
#include <cmath>

namespace eptrack::plant {

namespace {

using Env = std::array<Complex, 2>;

Env envelope_rhs(const Env& s, Complex d11, Complex d22, double g, Complex drive) {
    // i ds/dt = M s - (drive, 0)  =>  ds/dt = -i (M s - (drive, 0))
    const Complex r0 = d11 * s[0] + g * s[1] - drive;
    const Complex r1 = g * s[0] + d22 * s[1];
    return {-kI * r0, -kI * r1};
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

using Phys = std::array<double, 4>;

struct Forcing {
    double stiffness;  // Delta_p
    double force;      // F cos(psi) / m
};

}  // namespace

EnvelopeState envelope_step(const EnvelopeState& state, const model::EffectiveHamiltonian& h,
                            double omega_d, Complex drive, double dt) {
    const Complex d11 = h.h11() - omega_d;
    const Complex d22 = h.h22() - omega_d;
    const Env s{state.a0, state.b1};

    const Env k1 = envelope_rhs(s, d11, d22, h.g, drive);
    const Env s2{s[0] + 0.5 * dt * k1[0], s[1] + 0.5 * dt * k1[1]};
    const Env k2 = envelope_rhs(s2, d11, d22, h.g, drive);
    const Env s3{s[0] + 0.5 * dt * k2[0], s[1] + 0.5 * dt * k2[1]};
    const Env k3 = envelope_rhs(s3, d11, d22, h.g, drive);
    const Env s4{s[0] + dt * k3[0], s[1] + dt * k3[1]};
    const Env k4 = envelope_rhs(s4, d11, d22, h.g, drive);

    EnvelopeState next;
    next.a0 = s[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    next.b1 = s[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    next.t = state.t + dt;
    if (!finite(next.a0) || !finite(next.b1)) {
        throw Error(ErrorKind::NonFinite, "envelope integration overflowed");
    }
    return next;
}

double pump_waveform(const model::ModePair& modes, const model::PumpSettings& pump, double t) {
    const double wp = pump.pump_frequency(modes);
    return 2.0 * pump.kappa * pump.v_0 * pump.v_p * std::cos(wp * t) -
           0.5 * pump.kappa * pump.v_p * pump.v_p;
}

DriveSpec DriveSpec::constant(double f, double omega_d) {
    DriveSpec d;
    d.f = f;
    d.omega_d = [omega_d](double) { return omega_d; };
    d.phase = [omega_d](double t) { return omega_d * t; };
    return d;
}

DriveSpec DriveSpec::linear_chirp(double f, double omega0, double rate) {
    DriveSpec d;
    d.f = f;
    d.omega_d = [omega0, rate](double t) { return omega0 + rate * t; };
    d.phase = [omega0, rate](double t) { return omega0 * t + 0.5 * rate * t * t; };
    return d;
}

double default_newtonian_step(const model::ModePair& modes) {
    return 1.0 / (rad_to_hz(modes.omega2) * 200.0);
}

void newtonian_simulate(const model::ModePair& modes, const model::PumpSettings& pump,
                        const DriveSpec& drive, const NewtonianOptions& options,
                        const PhysicalObserver& observer) {
    const double dt = options.dt > 0.0 ? options.dt : default_newtonian_step(modes);
    if (!(options.duration >= 0.0) || !(options.mass > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "Newtonian run needs duration >= 0 and mass > 0");
    }
    const auto steps = static_cast<std::size_t>(std::llround(options.duration / dt));
    const double force_scale = 4.0 * modes.omega1 * drive.f;  // F / m
    const double w1sq = modes.omega1 * modes.omega1;
    const double w2sq = modes.omega2 * modes.omega2;
    const double g1 = modes.gamma1;
    const double g2 = modes.gamma2;
    const double wp = pump.pump_frequency(modes);
    const double modulation = 2.0 * pump.kappa * pump.v_0 * pump.v_p;
    const double static_part = -0.5 * pump.kappa * pump.v_p * pump.v_p;
    const bool full = options.pump_model == PumpModel::Full;

    auto forcing = [&](double t) {
        Forcing fc;
        fc.stiffness = static_part + (full ? modulation * std::cos(wp * t) : 0.0);
        fc.force = force_scale == 0.0 ? 0.0 : force_scale * std::cos(drive.phase(t));
        return fc;
    };
    auto rhs = [&](const Phys& s, const Forcing& fc) {
        const double half = 0.5 * fc.stiffness;
        return Phys{
            s[2],
            s[3],
            -g1 * s[2] - (w1sq + half) * s[0] - half * s[1] + fc.force,
            -g2 * s[3] - (w2sq + half) * s[1] - half * s[0],
        };
    };

    const double t0 = options.initial.t;
    Phys s{options.initial.x, options.initial.y, options.initial.xdot, options.initial.ydot};
    observer(PhysicalState{s[0], s[1], s[2], s[3], t0});

    Forcing f_start = forcing(t0);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const double t_end = t0 + static_cast<double>(k + 1) * dt;
        const Forcing f_mid = forcing(0.5 * (t + t_end));
        const Forcing f_end = forcing(t_end);

        const Phys k1 = rhs(s, f_start);
        Phys tmp;
        for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
        const Phys k2 = rhs(tmp, f_mid);
        for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
        const Phys k3 = rhs(tmp, f_mid);
        for (int i = 0; i < 4; ++i) tmp[i] = s[i] + dt * k3[i];
        const Phys k4 = rhs(tmp, f_end);
        for (int i = 0; i < 4; ++i) {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(s[i])) {
                throw Error(ErrorKind::NonFinite, "Newtonian integration overflowed");
            }
        }
        f_start = f_end;
        observer(PhysicalState{s[0], s[1], s[2], s[3], t_end});
    }
}

std::vector<PhysicalState> newtonian_simulate(const model::ModePair& modes,
                                              const model::PumpSettings& pump,
                                              const DriveSpec& drive,
                                              const NewtonianOptions& options) {
    std::vector<PhysicalState> out;
    const std::size_t every = options.decimation == 0 ? 1 : options.decimation;
    std::size_t count = 0;
    newtonian_simulate(modes, pump, drive, options, [&](const PhysicalState& s) {
        if (count++ % every == 0) {
            out.push_back(s);
        }
    });
    return out;
}

Demodulator::Demodulator(double time_constant, int stages)
    : time_constant_(time_constant), sections_(static_cast<std::size_t>(stages < 1 ? 1 : stages)) {
    if (!(time_constant > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "demodulator time constant must be positive");
    }
}

Complex Demodulator::push(double x, double phase, double dt) {
    const double alpha = -std::expm1(-dt / time_constant_);
    Complex input = x * std::polar(1.0, -phase);
    for (auto& section : sections_) {
        section += alpha * (input - section);
        input = section;
    }
    return value();
}

void Demodulator::reset(Complex value) {
    for (auto& section : sections_) {
        section = 0.5 * value;
    }
}

std::vector<Complex> demodulate_physical(std::span<const double> x, std::span<const double> phase,
                                         double dt, double time_constant, int stages) {
    if (x.size() != phase.size()) {
        throw Error(ErrorKind::InvalidArgument, "signal and reference lengths differ");
    }
    Demodulator demod(time_constant, stages);
    std::vector<Complex> out;
    out.reserve(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        out.push_back(demod.push(x[k], phase[k], dt));
    }
    return out;
}

Complex ForceNoise::draw() {
    if (!enabled()) {
        return {};
    }
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return std::sqrt(0.5) * std_dev_ * Complex(re, im);
}

}  // namespace eptrack::plant
