#pragma once

// Phase-locked drive: phase detector, PID frequency update and the
// closed-loop runner that carries the resonator around a schedule.
//
// Phases follow the theta = -Arg(A0) convention. The measurement circuit is
// modelled as a constant extra delay `circuit_phase` on theta, removed again
// by `compensation` in the detector.

#include "eptrack/common.hpp"
#include "eptrack/model.hpp"
#include "eptrack/parallel.hpp"
#include "eptrack/paths.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace eptrack::lockin {

struct PidConfig {
    double kp = kTwoPi * 0.5;          ///< rad/s per rad
    double ki = kTwoPi * 3.0;          ///< rad/s^2 per rad
    double kd = 0.0;                   ///< rad per rad
    double clamp = kTwoPi * 5.0;       ///< max |w_d - w_center| (rad/s)
    double sample_interval = 1e-3;     ///< s

    void validate() const;
};

struct PllState {
    double omega_d = 0.0;       ///< rad/s
    double omega_center = 0.0;  ///< clamp reference (rad/s)
    double theta0 = 0.0;        ///< setpoint (rad)
    double integrator = 0.0;    ///< running sum of e dt (rad s)
    double prev_error = 0.0;
    double prev_error2 = 0.0;
    bool primed = false;        ///< false until the first error sample
};

/// theta = -Arg(envelope) - compensation, wrapped. Throws LostSignal when
/// |envelope| < floor.
double phase_detect(Complex envelope, double compensation, double floor);

/// Velocity-form PID on e = wrap(rel_phase - theta0):
/// w_d += kp de + ki e dt + kd d2e / dt, then clamped.
PllState pid_step(PllState state, double rel_phase, const PidConfig& config);

struct TrajectoryRecord {
    double t = 0.0;          ///< s
    double omega_d = 0.0;    ///< rad/s
    double theta = 0.0;      ///< measured, compensated (rad)
    double rel_phase = 0.0;  ///< wrap(theta - phi) (rad)
    double v_p = 0.0;        ///< V
    double delta_p = 0.0;    ///< rad/s
    double amplitude = 0.0;  ///< |A0|
    model::SheetLabel sheet = model::SheetLabel::High;  ///< nearest Re eigenvalue to w_d
};

struct ClosedLoopConfig {
    model::Device device;
    PidConfig pid;
    double drive_f = 1.0;
    double circuit_phase = 0.0;       ///< rad, added to theta by the circuit
    double compensation = 0.0;        ///< rad, removed by the detector
    double record_interval = 0.01;    ///< s; 0 records every tick
    double settle_time = -1.0;        ///< s; < 0 selects 10 / gamma1
    double lost_signal_floor = -1.0;  ///< < 0 selects 1e-6 f / gamma2
    double noise_std = 0.0;           ///< force noise per tick, same units as f
    std::uint64_t noise_seed = 0;
    double initial_offset = 0.0;      ///< start w_d offset from the eigenvalue (rad/s)

    void validate() const;
};

/// Settles at the first pinpoint with the schedule frozen, then runs the
/// loop. Records start at the schedule start time.
std::vector<TrajectoryRecord> run_closed_loop(const paths::LoopSchedule& schedule,
                                              const ClosedLoopConfig& config);

/// Independent runs, one per schedule; identical results for both policies.
std::vector<std::vector<TrajectoryRecord>> run_closed_loop_batch(
    std::span<const paths::LoopSchedule> schedules, const ClosedLoopConfig& config,
    exec::Policy policy);

/// Centered moving average with a symmetric window that shrinks at the ends.
std::vector<double> moving_average(std::span<const double> values, std::size_t half_width);

/// Re of the followed branch at each record time, including deliberate switches.
std::vector<double> expected_frequency(const paths::LoopSchedule& schedule,
                                       const model::Device& device,
                                       std::span<const TrajectoryRecord> records);

struct TrackingReport {
    std::vector<double> averaged;  ///< moving-average w_d (rad/s)
    std::vector<double> expected;  ///< followed-branch Re lambda (rad/s)
    double max_error = 0.0;        ///< rad/s over the whole run
};

TrackingReport tracking_report(const paths::LoopSchedule& schedule, const model::Device& device,
                               std::span<const TrajectoryRecord> records,
                               double window = 1.0);

struct LoopOutcome {
    double final_omega = 0.0;
    double re_high = 0.0;  ///< Re of the high sheet at the final parameters
    double re_low = 0.0;
    model::SheetLabel final_sheet = model::SheetLabel::High;
    double distance = 0.0;  ///< |w_d - Re| on final_sheet
    bool switched = false;  ///< final sheet differs from the start sheet
};

LoopOutcome evaluate_outcome(const paths::LoopSchedule& schedule, const model::Device& device,
                             std::span<const TrajectoryRecord> records);

}  // namespace eptrack::lockin
