#pragma once

// Zener thermoelastic damping of a flexural beam.
//
//     Q = C / (E alpha^2 T0) * (1/(w tau) + w tau),   tau = b^2 / (pi^2 chi)
//
// C is the volumetric heat capacity (J m^-3 K^-1), which keeps Q dimensionless.

#include <string_view>

namespace eptrack::ted {

struct MaterialProps {
    double heat_capacity = 0.0;           ///< J m^-3 K^-1
    double youngs_modulus = 0.0;          ///< Pa
    double thermal_expansion = 0.0;       ///< 1/K
    double equilibrium_temperature = 0.0; ///< K
    double thermal_diffusivity = 0.0;     ///< m^2/s

    void validate() const;
};

struct BeamSpec {
    double width = 0.0;    ///< m
    double omega_m = 0.0;  ///< rad/s

    void validate() const;
};

/// Single-crystal silicon near room temperature: C = 1.631e6 J m^-3 K^-1
/// (rho 2329 kg/m^3, c_p 700 J/(kg K)), E = 169 GPa ([110]), alpha = 2.6e-6 /K,
/// T0 = 300 K, chi = 8.8e-5 m^2/s.
MaterialProps silicon();

/// Looks up a named material ("silicon"); throws Config for unknown names.
MaterialProps material(std::string_view name);

double thermal_relaxation_time(const BeamSpec& beam, const MaterialProps& mat);

/// tau-dependence only, for a given frequency.
double q_ted(double omega_m, double tau_z, const MaterialProps& mat);
double q_ted(const BeamSpec& beam, const MaterialProps& mat);

/// gamma = omega / q. Throws InvalidArgument for q <= 0.
double damping_rate(double omega, double q);

}  // namespace eptrack::ted
