#include "eptrack/lockin.hpp"

#include "eptrack/plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eptrack::lockin {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw Error(ErrorKind::InvalidArgument, what);
    }
}

model::SheetLabel nearest_sheet(const model::EigenPair& e, double omega) {
    return std::abs(omega - e.plus.real()) <= std::abs(omega - e.minus.real())
               ? model::SheetLabel::High
               : model::SheetLabel::Low;
}

}  // namespace

void PidConfig::validate() const {
    require(std::isfinite(kp) && std::isfinite(ki) && std::isfinite(kd), "PID gains must be finite");
    require(kp >= 0.0 && ki >= 0.0 && kd >= 0.0, "PID gains must be non-negative");
    require(kp > 0.0 || ki > 0.0, "PID needs a proportional or integral gain");
    require(clamp > 0.0, "frequency clamp must be positive");
    require(sample_interval > 0.0, "PID sample interval must be positive");
}

void ClosedLoopConfig::validate() const {
    device.modes.validate();
    pid.validate();
    require(drive_f > 0.0 && std::isfinite(drive_f), "drive amplitude must be positive");
    require(std::isfinite(circuit_phase) && std::isfinite(compensation), "phases must be finite");
    require(record_interval >= 0.0, "record interval must be non-negative");
    require(noise_std >= 0.0, "noise level must be non-negative");
    require(pid.sample_interval <= plant::kMaxEnvelopeStep, "PID tick exceeds the envelope step limit");
}

double phase_detect(Complex envelope, double compensation, double floor) {
    const double amp = std::abs(envelope);
    if (!(amp >= floor) || amp == 0.0) {
        std::ostringstream msg;
        msg << "response amplitude " << amp << " below detector floor " << floor;
        throw Error(ErrorKind::LostSignal, msg.str());
    }
    return wrap_phase(-std::arg(envelope) - compensation);
}

PllState pid_step(PllState state, double rel_phase, const PidConfig& config) {
    const double dt = config.sample_interval;
    const double e = wrap_phase(rel_phase - state.theta0);
    if (!state.primed) {
        state.prev_error = e;
        state.prev_error2 = e;
        state.primed = true;
    }
    const double de = wrap_phase(e - state.prev_error);
    const double de_prev = wrap_phase(state.prev_error - state.prev_error2);
    double omega = state.omega_d + config.kp * de + config.ki * e * dt +
                   config.kd * (de - de_prev) / dt;
    omega = std::clamp(omega, state.omega_center - config.clamp, state.omega_center + config.clamp);
    state.omega_d = omega;
    state.integrator += e * dt;
    state.prev_error2 = state.prev_error;
    state.prev_error = e;
    return state;
}

std::vector<TrajectoryRecord> run_closed_loop(const paths::LoopSchedule& schedule,
                                              const ClosedLoopConfig& config) {
    config.validate();
    schedule.validate();
    const auto& modes = config.device.modes;
    const double dt = config.pid.sample_interval;
    const double t_start = schedule.path.start_time();
    const double t_end = schedule.path.end_time();
    const double floor =
        config.lost_signal_floor >= 0.0 ? config.lost_signal_floor : 1e-6 * config.drive_f / modes.gamma2;
    const double settle = config.settle_time >= 0.0 ? config.settle_time : 10.0 / modes.gamma1;

    auto hamiltonian_at = [&](const paths::ScheduleSample& s) {
        return model::build_hamiltonian(modes, config.device.pump(s.v_p, s.delta_p));
    };

    const paths::ScheduleSample first = paths::interpolate(schedule, t_start);
    const auto h0 = hamiltonian_at(first);
    const auto e0 = model::eigenvalues(h0);
    const double omega_start =
        (schedule.start_sheet == model::SheetLabel::High ? e0.plus : e0.minus).real();

    PllState pll;
    pll.omega_d = omega_start + config.initial_offset;
    pll.omega_center = omega_start;
    pll.theta0 = schedule.theta0;

    const auto ss = model::steady_state(h0, omega_start, config.drive_f);
    plant::EnvelopeState env{ss.a0, ss.b1, t_start};
    plant::ForceNoise noise(config.noise_std, config.noise_seed);
    const Complex circuit = std::polar(1.0, -config.circuit_phase);

    auto tick = [&](const model::EffectiveHamiltonian& h, double phi) {
        const Complex drive = config.drive_f + noise.draw();
        env = plant::envelope_step(env, h, pll.omega_d, drive, dt);
        const double theta = phase_detect(env.a0 * circuit, config.compensation, floor);
        const double rel = wrap_phase(theta - phi);
        pll = pid_step(pll, rel, config.pid);
        return std::pair<double, double>{theta, rel};
    };

    const auto settle_ticks = static_cast<std::size_t>(std::llround(settle / dt));
    for (std::size_t k = 0; k < settle_ticks; ++k) {
        tick(h0, first.phi);
    }
    env.t = t_start;

    const auto ticks = static_cast<std::size_t>(std::llround((t_end - t_start) / dt));
    const std::size_t every =
        config.record_interval <= 0.0
            ? 1
            : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.record_interval / dt)));

    std::vector<TrajectoryRecord> out;
    out.reserve(ticks / every + 2);
    auto record = [&](double t, const paths::ScheduleSample& s, double theta, double rel) {
        const auto e = model::eigenvalues(hamiltonian_at(s));
        TrajectoryRecord r;
        r.t = t;
        r.omega_d = pll.omega_d;
        r.theta = theta;
        r.rel_phase = rel;
        r.v_p = s.v_p;
        r.delta_p = s.delta_p;
        r.amplitude = std::abs(env.a0);
        r.sheet = nearest_sheet(e, pll.omega_d);
        out.push_back(r);
    };

    {
        const double theta = phase_detect(env.a0 * circuit, config.compensation, floor);
        record(t_start, first, theta, wrap_phase(theta - first.phi));
    }
    for (std::size_t k = 0; k < ticks; ++k) {
        const double t0 = t_start + static_cast<double>(k) * dt;
        const double t1 = std::min(t_end, t_start + static_cast<double>(k + 1) * dt);
        const auto mid = paths::interpolate(schedule, 0.5 * (t0 + t1));
        const auto [theta, rel] = tick(hamiltonian_at(mid), mid.phi);
        if ((k + 1) % every == 0 || k + 1 == ticks) {
            record(t1, paths::interpolate(schedule, t1), theta, rel);
        }
    }
    return out;
}

std::vector<std::vector<TrajectoryRecord>> run_closed_loop_batch(
    std::span<const paths::LoopSchedule> schedules, const ClosedLoopConfig& config,
    exec::Policy policy) {
    std::vector<std::vector<TrajectoryRecord>> out(schedules.size());
    exec::for_each_index(schedules.size(), policy,
                         [&](std::size_t i) { out[i] = run_closed_loop(schedules[i], config); });
    return out;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t half_width) {
    const std::size_t n = values.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + values[i];
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half_width, i, n - 1 - i});
        out[i] = (prefix[i + h + 1] - prefix[i - h]) / static_cast<double>(2 * h + 1);
    }
    return out;
}

std::vector<double> expected_frequency(const paths::LoopSchedule& schedule,
                                       const model::Device& device,
                                       std::span<const TrajectoryRecord> records) {
    if (records.empty()) {
        return {};
    }
    std::vector<model::PumpSettings> pumps;
    pumps.reserve(records.size());
    for (const auto& r : records) {
        pumps.push_back(device.pump(r.v_p, r.delta_p));
    }
    std::vector<double> switch_times;
    for (std::size_t k : schedule.switch_indices(paths::SwitchKind::Deliberate)) {
        switch_times.push_back(schedule.path.samples[k].t);
    }

    std::vector<double> out(records.size());
    if (pumps.size() == 1) {
        const auto e = model::eigenvalues(model::build_hamiltonian(device.modes, pumps[0]));
        out[0] = (schedule.start_sheet == model::SheetLabel::High ? e.plus : e.minus).real();
        return out;
    }
    const auto tracked = model::sheet_track(pumps, device.modes);
    model::SheetLabel branch = schedule.start_sheet;
    std::size_t next = 0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        // A deliberate switch lands between the previous pinpoint and its own.
        while (next < switch_times.size() && records[k].t >= switch_times[next]) {
            branch = model::opposite(branch);
            ++next;
        }
        out[k] = tracked.branch(branch, k).real();
    }
    return out;
}

TrackingReport tracking_report(const paths::LoopSchedule& schedule, const model::Device& device,
                               std::span<const TrajectoryRecord> records, double window) {
    TrackingReport rep;
    if (records.size() < 2) {
        return rep;
    }
    std::vector<double> omega(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        omega[k] = records[k].omega_d;
    }
    const double spacing = (records.back().t - records.front().t) / static_cast<double>(records.size() - 1);
    const auto half = static_cast<std::size_t>(std::llround(0.5 * window / spacing));
    rep.averaged = moving_average(omega, half);
    rep.expected = expected_frequency(schedule, device, records);
    for (std::size_t k = 0; k < records.size(); ++k) {
        rep.max_error = std::max(rep.max_error, std::abs(rep.averaged[k] - rep.expected[k]));
    }
    return rep;
}

LoopOutcome evaluate_outcome(const paths::LoopSchedule& schedule, const model::Device& device,
                             std::span<const TrajectoryRecord> records) {
    if (records.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty trajectory");
    }
    const auto& last = records.back();
    const auto e =
        model::eigenvalues(model::build_hamiltonian(device.modes, device.pump(last.v_p, last.delta_p)));
    LoopOutcome out;
    out.final_omega = last.omega_d;
    out.re_high = e.plus.real();
    out.re_low = e.minus.real();
    out.final_sheet = nearest_sheet(e, last.omega_d);
    out.distance = std::abs(last.omega_d -
                            (out.final_sheet == model::SheetLabel::High ? out.re_high : out.re_low));
    out.switched = out.final_sheet != schedule.start_sheet;
    return out;
}

}  // namespace eptrack::lockin
