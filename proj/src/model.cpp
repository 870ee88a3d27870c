#include "eptrack/model.hpp"

#include <algorithm>
#include <sstream>

namespace eptrack::model {

namespace {

constexpr double kEpTolerance = 1e-12;
constexpr int kEpMaxIterations = 50;

void require(bool ok, const char* what) {
    if (!ok) {
        throw Error(ErrorKind::InvalidArgument, what);
    }
}

// (w_d - l+)(w_d - l-) = (w_d - h11)(w_d - h22) - g^2, the characteristic
// polynomial evaluated at w_d. Same value as the factored form, but it never
// needs the square root.
Complex response_denominator(const EffectiveHamiltonian& h, double omega_d) {
    const Complex d1 = Complex(omega_d) - h.h11();
    const Complex d2 = Complex(omega_d) - h.h22();
    return d1 * d2 - h.g * h.g;
}

EigenPair ordered(Complex a, Complex b) {
    if (a.real() > b.real() || (a.real() == b.real() && a.imag() >= b.imag())) {
        return {a, b};
    }
    return {b, a};
}

}  // namespace

void ModePair::validate() const {
    require(std::isfinite(omega1) && std::isfinite(omega2) && std::isfinite(gamma1) &&
                std::isfinite(gamma2),
            "mode pair must be finite");
    require(omega1 > 0.0 && omega2 > 0.0, "mode frequencies must be positive");
    require(omega2 > omega1, "mode 2 must be the higher mode");
    require(gamma1 > 0.0 && gamma2 > 0.0, "damping rates must be positive");
}

void PumpSettings::validate(const ModePair& modes) const {
    require(std::isfinite(v_p) && std::isfinite(delta_p) && std::isfinite(v_0) &&
                std::isfinite(kappa),
            "pump settings must be finite");
    require(v_p >= 0.0, "pump amplitude must be non-negative");
    require(v_0 > 0.0, "bias voltage must be positive");
    require(kappa > 0.0, "tuning coefficient must be positive");
    require(pump_frequency(modes) > 0.0, "pump frequency must be positive");
}

const char* to_string(SheetLabel label) {
    return label == SheetLabel::High ? "high" : "low";
}

SheetLabel opposite(SheetLabel label) {
    return label == SheetLabel::High ? SheetLabel::Low : SheetLabel::High;
}

Device default_device() {
    Device d;
    d.modes.omega1 = hz_to_rad(50'468.68);
    d.modes.omega2 = hz_to_rad(51'007.86);
    d.modes.gamma1 = d.modes.omega1 / 74'658.0;
    d.modes.gamma2 = d.modes.omega2 / 56'424.0;
    d.kappa = 70'186.0;
    d.v_0 = 40.0;
    return d;
}

EffectiveHamiltonian build_hamiltonian(const ModePair& modes, const PumpSettings& pump) {
    const double static_tuning = pump.kappa * pump.v_p * pump.v_p / 8.0;
    EffectiveHamiltonian h;
    h.omega1 = modes.omega1 - static_tuning / modes.omega1;
    h.omega2 = modes.omega1 - static_tuning / modes.omega2 - pump.delta_p;
    h.g = pump.kappa * pump.v_0 * pump.v_p / (4.0 * modes.omega1);
    h.gamma1 = modes.gamma1;
    h.gamma2 = modes.gamma2;
    return h;
}

Complex radicand(const EffectiveHamiltonian& h) {
    const Complex half_detuning{0.5 * (h.omega2 - h.omega1), -0.25 * (h.gamma2 - h.gamma1)};
    return half_detuning * half_detuning + h.g * h.g;
}

EigenPair eigenvalues(const EffectiveHamiltonian& h) {
    const Complex mean{0.5 * (h.omega1 + h.omega2), -0.25 * (h.gamma1 + h.gamma2)};
    const Complex root = std::sqrt(radicand(h));
    return ordered(mean + root, mean - root);
}

Complex susceptibility(const EffectiveHamiltonian& h, double omega_d) {
    const Complex numerator = h.h22() - omega_d;
    return numerator / response_denominator(h, omega_d);
}

double response_phase(const EffectiveHamiltonian& h, double omega_d) {
    return wrap_phase(-std::arg(susceptibility(h, omega_d)));
}

SteadyState steady_state(const EffectiveHamiltonian& h, double omega_d, double f) {
    const Complex den = response_denominator(h, omega_d);
    return {f * susceptibility(h, omega_d), -f * h.g / den};
}

State2 hybrid_state(const EffectiveHamiltonian& h, double omega_d) {
    const Complex den = response_denominator(h, omega_d);
    return {susceptibility(h, omega_d), -h.g / den};
}

EigenVectors eigenvectors(const EffectiveHamiltonian& h) {
    const EigenPair lambda = eigenvalues(h);
    const double floor = 1e-9 * (h.gamma1 + h.gamma2);
    if (std::abs(lambda.plus - lambda.minus) < floor) {
        throw Error(ErrorKind::DegenerateAtEP, "eigenvectors coalesce at the exceptional point");
    }

    auto vector_for = [&h](Complex l) {
        // Both forms span the same eigenspace; the longer one avoids the
        // null vector of the uncoupled limit.
        State2 a{l - h.h22(), Complex(h.g)};
        State2 b{Complex(h.g), l - h.h11()};
        const double na = std::norm(a[0]) + std::norm(a[1]);
        const double nb = std::norm(b[0]) + std::norm(b[1]);
        State2 v = na >= nb ? a : b;
        const std::size_t big = std::abs(v[0]) >= std::abs(v[1]) ? 0 : 1;
        const Complex gauge = std::conj(v[big]) / std::abs(v[big]);
        const double norm = std::sqrt(std::max(na, nb));
        for (auto& c : v) {
            c *= gauge / norm;
        }
        v[big] = Complex(v[big].real(), 0.0);
        return v;
    };
    return {vector_for(lambda.plus), vector_for(lambda.minus)};
}

EpLocation locate_ep(const ModePair& modes, const PumpSettings& pump_template) {
    modes.validate();
    const double dgamma = modes.gamma2 - modes.gamma1;
    if (dgamma == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "equal damping rates: no exceptional point");
    }
    require(pump_template.kappa > 0.0 && pump_template.v_0 > 0.0,
            "pump template needs positive kappa and bias");

    const double kappa = pump_template.kappa;
    const double shift_coeff = kappa / 8.0 * (1.0 / modes.omega1 - 1.0 / modes.omega2);
    const double coupling_coeff = kappa * pump_template.v_0 / (4.0 * modes.omega1);

    PumpSettings p = pump_template;
    p.v_p = std::abs(dgamma) * modes.omega1 / (kappa * pump_template.v_0);
    p.delta_p = shift_coeff * p.v_p * p.v_p;

    EpLocation out;
    for (int it = 0; it <= kEpMaxIterations; ++it) {
        const EffectiveHamiltonian h = build_hamiltonian(modes, p);
        const Complex r = radicand(h);
        out.v_p = p.v_p;
        out.delta_p = p.delta_p;
        out.iterations = it;
        out.residual = std::abs(r);
        if (out.residual < kEpTolerance) {
            return out;
        }
        if (it == kEpMaxIterations) {
            break;
        }
        const Complex w{0.5 * (h.omega2 - h.omega1), -0.25 * (h.gamma2 - h.gamma1)};
        const Complex dr_dv = 2.0 * w * (shift_coeff * p.v_p) + 2.0 * h.g * coupling_coeff;
        const Complex dr_dd = -w;
        const double det = dr_dv.real() * dr_dd.imag() - dr_dd.real() * dr_dv.imag();
        if (det == 0.0 || !std::isfinite(det)) {
            break;
        }
        const double step_v = (-r.real() * dr_dd.imag() + r.imag() * dr_dd.real()) / det;
        const double step_d = (-dr_dv.real() * r.imag() + dr_dv.imag() * r.real()) / det;
        p.v_p += step_v;
        p.delta_p += step_d;
    }
    std::ostringstream msg;
    msg << "EP refinement stalled at |radicand| = " << out.residual << " after "
        << out.iterations << " Newton steps";
    throw Error(ErrorKind::NoConvergence, msg.str());
}

SheetLabel TrackedPath::label(SheetLabel start, std::size_t k) const {
    const bool on_plus = (start == SheetLabel::High) == points[k].high_is_plus;
    return on_plus ? SheetLabel::High : SheetLabel::Low;
}

TrackedPath sheet_track(std::span<const PumpSettings> path, const ModePair& modes,
                        double margin) {
    if (path.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "sheet tracking needs at least two samples");
    }
    TrackedPath out;
    out.points.reserve(path.size());

    TrackedPoint first;
    first.params = path[0];
    first.eigen = eigenvalues(build_hamiltonian(modes, path[0]));
    first.high = first.eigen.plus;
    first.low = first.eigen.minus;
    out.points.push_back(first);

    for (std::size_t k = 1; k < path.size(); ++k) {
        const TrackedPoint& prev = out.points.back();
        TrackedPoint cur;
        cur.params = path[k];
        cur.eigen = eigenvalues(build_hamiltonian(modes, path[k]));

        const double keep =
            std::abs(cur.eigen.plus - prev.high) + std::abs(cur.eigen.minus - prev.low);
        const double swap =
            std::abs(cur.eigen.plus - prev.low) + std::abs(cur.eigen.minus - prev.high);
        const double best = std::min(keep, swap);
        const double worst = std::max(keep, swap);
        if (!(worst > margin * best)) {
            std::ostringstream msg;
            msg << "branch matching margin " << (best > 0.0 ? worst / best : 1.0)
                << " below " << margin << " at sample " << k << "; refine the path";
            throw Error(ErrorKind::AmbiguousMatching, msg.str());
        }
        if (keep <= swap) {
            cur.high = cur.eigen.plus;
            cur.low = cur.eigen.minus;
            cur.high_is_plus = true;
        } else {
            cur.high = cur.eigen.minus;
            cur.low = cur.eigen.plus;
            cur.high_is_plus = false;
        }
        if (cur.high_is_plus != prev.high_is_plus) {
            out.cut_crossings.push_back(k);
        }
        out.points.push_back(cur);
    }
    return out;
}

}  // namespace eptrack::model
