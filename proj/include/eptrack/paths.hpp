#pragma once

// Parameter loops in the (Vp, delta_p) plane and the phase-shift schedules
// that make the phase-locked drive follow one eigenvalue branch around them.
//
// Detuning is stored in Hz so that the values round-trip exactly through
// the schedule CSV; `delta_p()` accessors return rad/s.

#include "eptrack/common.hpp"
#include "eptrack/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace eptrack::paths {

struct ParamSample {
    double t = 0.0;           ///< s
    double v_p = 0.0;         ///< V
    double delta_p_hz = 0.0;  ///< Hz

    [[nodiscard]] double delta_p() const { return hz_to_rad(delta_p_hz); }
};

struct ParamPath {
    std::vector<ParamSample> samples;  ///< strictly increasing t
    bool closed = false;

    [[nodiscard]] double start_time() const { return samples.front().t; }
    [[nodiscard]] double end_time() const { return samples.back().t; }
    [[nodiscard]] double duration() const { return end_time() - start_time(); }
    /// Piecewise-linear value; exact at sample times. Throws OutOfRange.
    [[nodiscard]] ParamSample at(double t) const;
    /// Throws InvalidArgument on non-monotone time or non-finite values.
    void validate() const;
};

enum class Direction { Clockwise, CounterClockwise };

const char* to_string(Direction d);

struct Corner {
    double v_p = 0.0;
    double delta_p_hz = 0.0;
};

inline constexpr std::size_t kDefaultPinpoints = 2001;

/// Polygonal loop through `corners` (first == last) with the given time per
/// edge, sampled at `samples` uniform times. Counter-clockwise is the exact
/// time reversal of the clockwise parameters.
ParamPath rectangular_loop(std::span<const Corner> corners, std::span<const double> edge_durations,
                           Direction direction, std::size_t samples = kDefaultPinpoints);

/// Vp = c + rv cos(2 pi t / T), delta_p = +/- rd sin(2 pi t / T) (Hz);
/// the + sign is clockwise.
ParamPath circular_loop(double center_v, double radius_v, double radius_hz, double period,
                        Direction direction, std::size_t samples = kDefaultPinpoints);

/// Loop enclosing the EP, starting at (0.5 V, 0.3 Hz) in the PT-symmetric phase.
ParamPath pt_symmetric_rectangle(Direction direction, double edge_duration = 15.0,
                                 std::size_t samples = kDefaultPinpoints);
/// Loop enclosing the EP, starting at (0.1 V, 0.3 Hz) in the PT-broken phase.
ParamPath pt_broken_rectangle(Direction direction, double edge_duration = 15.0,
                              std::size_t samples = kDefaultPinpoints);
/// Circle about (0.3 V, 0 Hz) with radii 0.2 V and 0.2 Hz, period 60 s.
ParamPath reference_circle(Direction direction, double period = 60.0,
                           std::size_t samples = kDefaultPinpoints);

/// switch_flag column of the schedule.
enum class SwitchKind : int { None = 0, BranchCut = 1, Deliberate = 2 };

struct LoopSchedule {
    ParamPath path;                 ///< one sample per pinpoint
    std::vector<double> phi;        ///< phase offset relative to theta0 (rad)
    std::vector<SwitchKind> flags;  ///< per pinpoint
    model::SheetLabel start_sheet = model::SheetLabel::High;
    double theta0 = 0.0;  ///< theta at Re of the starting eigenvalue (rad)

    [[nodiscard]] std::size_t size() const { return path.samples.size(); }
    [[nodiscard]] std::vector<std::size_t> switch_indices() const;
    [[nodiscard]] std::vector<std::size_t> switch_indices(SwitchKind kind) const;
    /// Throws InvalidArgument when the columns disagree in length or time is not increasing.
    void validate() const;
};

struct SheetSwitch {
    double t = 0.0;                              ///< s
    model::SheetLabel target = model::SheetLabel::Low;  ///< instantaneous label to jump to
};

/// Schedule that keeps the drive on the continuity branch starting at
/// `start`. `pinpoints` uniform samples of `path`.
LoopSchedule schedule_phase_shifts(const ParamPath& path, const model::Device& device,
                                   model::SheetLabel start,
                                   std::size_t pinpoints = kDefaultPinpoints);

/// As schedule_phase_shifts, with forced jumps onto the instantaneous sheet
/// `target` at the first pinpoint at or after each switch time. A switch
/// onto the sheet already occupied is a no-op.
LoopSchedule transition_schedule(const ParamPath& path, const model::Device& device,
                                 model::SheetLabel start, std::span<const SheetSwitch> switches,
                                 std::size_t pinpoints = kDefaultPinpoints);

struct ScheduleSample {
    double v_p = 0.0;      ///< V
    double delta_p = 0.0;  ///< rad/s
    double phi = 0.0;      ///< rad
};

/// Linear interpolation between pinpoints; phi is held at the previous
/// value up to a deliberate switch pinpoint. Throws OutOfRange.
ScheduleSample interpolate(const LoopSchedule& schedule, double t);

/// Pump settings at every pinpoint.
std::vector<model::PumpSettings> pump_path(const ParamPath& path, const model::Device& device);

}  // namespace eptrack::paths
