#pragma once

// Time-domain models of the resonator.
//
// The reduced model integrates the slow envelopes (A0, B1) in the frame of
// the instantaneous drive phase psi(t):
//
//     i d/dt (A0, B1) = (H - w_d I)(A0, B1) - (f, 0)
//
// The Newtonian model integrates the full second-order equations with the
// explicit pump modulation and is only used to validate the reduction.

#include "eptrack/common.hpp"
#include "eptrack/model.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace eptrack::plant {

struct EnvelopeState {
    Complex a0;  ///< mode-1 complex amplitude
    Complex b1;  ///< first idler of mode 2
    double t = 0.0;
};

inline constexpr double kMaxEnvelopeStep = 1e-2;
inline constexpr double kDefaultEnvelopeStep = 1e-3;

/// One fixed-step RK4 update with coefficients frozen over the step (callers
/// evaluate H and w_d at the step midpoint). `drive` is f plus any force noise.
/// Throws NonFinite on overflow.
EnvelopeState envelope_step(const EnvelopeState& state, const model::EffectiveHamiltonian& h,
                            double omega_d, Complex drive, double dt);

/// Stiffness modulation 2 kappa V0 Vp cos(w_p t) - kappa Vp^2 / 2. The
/// 2 w_p harmonic is not part of the model.
double pump_waveform(const model::ModePair& modes, const model::PumpSettings& pump, double t);

struct PhysicalState {
    double x = 0.0;
    double y = 0.0;
    double xdot = 0.0;
    double ydot = 0.0;
    double t = 0.0;
};

/// Drive F cos(psi(t)) on mode 1 with f = F / (4 m w1).
struct DriveSpec {
    double f = 0.0;
    std::function<double(double)> omega_d;  ///< instantaneous frequency (rad/s)
    std::function<double(double)> phase;    ///< psi(t), with d psi/dt = omega_d(t)

    static DriveSpec constant(double f, double omega_d);
    /// omega_d(t) = omega0 + rate * t.
    static DriveSpec linear_chirp(double f, double omega0, double rate);
    static DriveSpec off() { return constant(0.0, 0.0); }
};

enum class PumpModel {
    Full,        ///< 2 kappa V0 Vp cos(w_p t) - kappa Vp^2/2
    StaticOnly,  ///< -kappa Vp^2/2 only (w_p -> 0, bias term suppressed)
};

struct NewtonianOptions {
    double mass = 1.0;
    double dt = 0.0;        ///< 0 selects default_newtonian_step()
    double duration = 0.0;
    std::size_t decimation = 1;
    PhysicalState initial{};
    PumpModel pump_model = PumpModel::Full;
};

/// 200 steps per period of the upper mode. RK4 phase dispersion scales as
/// (w dt)^4 / 120; at this density the carrier frequency error is < 1e-8 w.
double default_newtonian_step(const model::ModePair& modes);

using PhysicalObserver = std::function<void(const PhysicalState&)>;

/// Observer is called for the initial state and after every step.
void newtonian_simulate(const model::ModePair& modes, const model::PumpSettings& pump,
                        const DriveSpec& drive, const NewtonianOptions& options,
                        const PhysicalObserver& observer);

/// Decimated samples (every `options.decimation` steps, including t = 0).
std::vector<PhysicalState> newtonian_simulate(const model::ModePair& modes,
                                              const model::PumpSettings& pump,
                                              const DriveSpec& drive,
                                              const NewtonianOptions& options);

/// Streaming homodyne demodulator: 2 * lowpass(x e^{-i psi}) through a cascade
/// of first-order sections. x = A cos(psi + theta0) demodulates to A e^{i theta0}.
class Demodulator {
public:
    explicit Demodulator(double time_constant, int stages = 2);

    Complex push(double x, double phase, double dt);
    [[nodiscard]] Complex value() const { return 2.0 * sections_.back(); }
    void reset(Complex value);

private:
    double time_constant_;
    std::vector<Complex> sections_;
};

std::vector<Complex> demodulate_physical(std::span<const double> x, std::span<const double> phase,
                                         double dt, double time_constant, int stages = 2);

/// Seeded complex white force noise, one draw per integration step.
class ForceNoise {
public:
    ForceNoise(double std_dev, std::uint64_t seed) : std_dev_(std_dev), engine_(seed) {}

    Complex draw();
    [[nodiscard]] bool enabled() const { return std_dev_ > 0.0; }

private:
    double std_dev_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace eptrack::plant
