#pragma once

// Two-mode non-Hermitian effective Hamiltonian of the parametrically pumped
// resonator, in the Floquet frame of the pump.
//
//     H = [ Omega1 - i gamma1/2          g         ]
//         [        g          Omega2 - i gamma2/2  ]
//
// Omega1 = w1 - k Vp^2/(8 w1), Omega2 = w1 - k Vp^2/(8 w2) - delta_p,
// g = k V0 Vp/(4 w1). All frequencies are angular (rad/s).

#include "eptrack/common.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace eptrack::model {

struct ModePair {
    double omega1 = 0.0;  ///< rad/s
    double omega2 = 0.0;  ///< rad/s, the higher mode
    double gamma1 = 0.0;  ///< rad/s
    double gamma2 = 0.0;  ///< rad/s

    /// Throws InvalidArgument when the pair breaks its invariants.
    void validate() const;
};

struct PumpSettings {
    double v_p = 0.0;      ///< pump amplitude (V)
    double delta_p = 0.0;  ///< pump detuning w_p - (w2 - w1) (rad/s)
    double v_0 = 0.0;      ///< bias voltage (V)
    double kappa = 0.0;    ///< electrostatic tuning coefficient (N m^-1 kg^-1 V^-2)

    void validate(const ModePair& modes) const;
    /// Pump frequency w_p = (w2 - w1) + delta_p.
    [[nodiscard]] double pump_frequency(const ModePair& modes) const {
        return (modes.omega2 - modes.omega1) + delta_p;
    }
};

struct EffectiveHamiltonian {
    double omega1 = 0.0;  ///< dressed mode-1 frequency
    double omega2 = 0.0;  ///< dressed, pump-shifted mode-2 frequency
    double g = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;

    [[nodiscard]] Complex h11() const { return {omega1, -0.5 * gamma1}; }
    [[nodiscard]] Complex h22() const { return {omega2, -0.5 * gamma2}; }
    [[nodiscard]] Complex trace() const { return h11() + h22(); }
    [[nodiscard]] Complex determinant() const { return h11() * h22() - g * g; }
};

/// Convention: Re(plus) >= Re(minus); ties broken by Im(plus) >= Im(minus).
struct EigenPair {
    Complex plus;
    Complex minus;
};

enum class SheetLabel { High, Low };

const char* to_string(SheetLabel label);
SheetLabel opposite(SheetLabel label);

using State2 = std::array<Complex, 2>;

/// Device constants shared by every operating point.
struct Device {
    ModePair modes;
    double kappa = 0.0;
    double v_0 = 0.0;

    [[nodiscard]] PumpSettings pump(double v_p, double delta_p) const {
        return {v_p, delta_p, v_0, kappa};
    }
};

/// The MEMS disk resonator: f1 = 50,468.68 Hz, f2 = 51,007.86 Hz,
/// Q1 = 74,658, Q2 = 56,424, kappa = 70,186, V0 = 40 V.
Device default_device();

EffectiveHamiltonian build_hamiltonian(const ModePair& modes, const PumpSettings& pump);

EigenPair eigenvalues(const EffectiveHamiltonian& h);

/// chi_1(w_d) = (Omega2 - w_d - i gamma2/2) / ((w_d - l+)(w_d - l-)).
Complex susceptibility(const EffectiveHamiltonian& h, double omega_d);

/// theta = -Arg chi_1(w_d), principal value.
double response_phase(const EffectiveHamiltonian& h, double omega_d);

struct SteadyState {
    Complex a0;
    Complex b1;
};

SteadyState steady_state(const EffectiveHamiltonian& h, double omega_d, double f);

/// Unnormalized hybrid state; the first component is chi_1(w_d).
State2 hybrid_state(const EffectiveHamiltonian& h, double omega_d);

struct EigenVectors {
    State2 plus;
    State2 minus;
};

/// Unit-norm eigenvectors with the largest-magnitude component real positive.
/// Throws DegenerateAtEP when |l+ - l-| < 1e-9 (gamma1 + gamma2).
EigenVectors eigenvectors(const EffectiveHamiltonian& h);

/// Radicand of the closed-form eigenvalues; vanishes at the EP.
Complex radicand(const EffectiveHamiltonian& h);

struct EpLocation {
    double v_p = 0.0;
    double delta_p = 0.0;
    int iterations = 0;
    double residual = 0.0;  ///< |radicand| at the returned point, (rad/s)^2
};

/// Newton refinement of the analytic seed Vp* = |gamma2 - gamma1| w1/(kappa V0).
/// Only v_0 and kappa are read from the template.
EpLocation locate_ep(const ModePair& modes, const PumpSettings& pump_template);

struct TrackedPoint {
    PumpSettings params;
    EigenPair eigen;          ///< as returned by eigenvalues()
    Complex high;             ///< branch that started as the high sheet
    Complex low;              ///< branch that started as the low sheet
    bool high_is_plus = true; ///< whether the initially-high branch is currently l+
};

struct TrackedPath {
    std::vector<TrackedPoint> points;
    std::vector<std::size_t> cut_crossings;

    /// Eigenvalue on the branch that started on `start` at sample k.
    [[nodiscard]] Complex branch(SheetLabel start, std::size_t k) const {
        return start == SheetLabel::High ? points[k].high : points[k].low;
    }
    /// Instantaneous Re-ordering label of that branch at sample k.
    [[nodiscard]] SheetLabel label(SheetLabel start, std::size_t k) const;
    /// True when an odd number of branch-cut crossings occurred.
    [[nodiscard]] bool permuted() const { return cut_crossings.size() % 2 == 1; }
};

inline constexpr double kDefaultMatchingMargin = 1.5;

/// Continuity (nearest-neighbour) tracking of both eigenvalue branches.
/// Throws AmbiguousMatching when the swap/keep cost ratio drops below `margin`.
TrackedPath sheet_track(std::span<const PumpSettings> path, const ModePair& modes,
                        double margin = kDefaultMatchingMargin);

}  // namespace eptrack::model
