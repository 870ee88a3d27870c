#include "eptrack/ted.hpp"

#include "eptrack/common.hpp"

#include <cmath>
#include <string>

namespace eptrack::ted {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw Error(ErrorKind::InvalidArgument, what);
    }
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void MaterialProps::validate() const {
    require(positive(heat_capacity) && positive(youngs_modulus) && positive(thermal_expansion) &&
                positive(equilibrium_temperature) && positive(thermal_diffusivity),
            "material constants must be strictly positive");
}

void BeamSpec::validate() const {
    require(positive(width), "beam width must be positive");
    require(positive(omega_m), "mode frequency must be positive");
}

MaterialProps silicon() {
    return {2329.0 * 700.0, 169e9, 2.6e-6, 300.0, 8.8e-5};
}

MaterialProps material(std::string_view name) {
    if (name == "silicon" || name == "si") {
        return silicon();
    }
    throw Error(ErrorKind::Config, "unknown material '" + std::string(name) + "'");
}

double thermal_relaxation_time(const BeamSpec& beam, const MaterialProps& mat) {
    beam.validate();
    mat.validate();
    return beam.width * beam.width / (kPi * kPi * mat.thermal_diffusivity);
}

double q_ted(double omega_m, double tau_z, const MaterialProps& mat) {
    mat.validate();
    require(positive(omega_m) && positive(tau_z), "frequency and relaxation time must be positive");
    const double wt = omega_m * tau_z;
    const double scale = mat.heat_capacity /
                         (mat.youngs_modulus * mat.thermal_expansion * mat.thermal_expansion *
                          mat.equilibrium_temperature);
    return scale * (1.0 / wt + wt);
}

double q_ted(const BeamSpec& beam, const MaterialProps& mat) {
    return q_ted(beam.omega_m, thermal_relaxation_time(beam, mat), mat);
}

double damping_rate(double omega, double q) {
    require(q > 0.0, "quality factor must be positive");
    require(std::isfinite(omega), "frequency must be finite");
    if (std::isinf(q)) {
        return 0.0;
    }
    return omega / q;
}

}  // namespace eptrack::ted
