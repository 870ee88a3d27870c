#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace eptrack {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }
constexpr double rad_to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Principal branch (-pi, pi].
inline double wrap_phase(double phase) {
    double w = std::remainder(phase, kTwoPi);
    if (w <= -kPi) {
        w += kTwoPi;
    }
    return w;
}

enum class ErrorKind {
    DegenerateAtEP,
    NoConvergence,
    AmbiguousMatching,
    NonFinite,
    LostSignal,
    OutOfRange,
    DegenerateSweep,
    NonPhysical,
    InvalidArgument,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DegenerateAtEP: return "DegenerateAtEP";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::AmbiguousMatching: return "AmbiguousMatching";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::LostSignal: return "LostSignal";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::DegenerateSweep: return "DegenerateSweep";
        case ErrorKind::NonPhysical: return "NonPhysical";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Config: return "Config";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace eptrack
