#include "eptrack/paths.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eptrack::paths {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw Error(ErrorKind::InvalidArgument, what);
    }
}

double uniform_time(double t0, double span, std::size_t k, std::size_t n) {
    return t0 + span * static_cast<double>(k) / static_cast<double>(n - 1);
}

ParamPath reversed(const ParamPath& forward) {
    ParamPath out = forward;
    const std::size_t n = forward.samples.size();
    for (std::size_t k = 0; k < n; ++k) {
        out.samples[k].v_p = forward.samples[n - 1 - k].v_p;
        out.samples[k].delta_p_hz = forward.samples[n - 1 - k].delta_p_hz;
    }
    return out;
}

ParamPath resample(const ParamPath& path, std::size_t n) {
    if (path.samples.size() == n) {
        return path;
    }
    ParamPath out;
    out.closed = path.closed;
    out.samples.reserve(n);
    const double t0 = path.start_time();
    const double span = path.duration();
    for (std::size_t k = 0; k < n; ++k) {
        out.samples.push_back(path.at(uniform_time(t0, span, k, n)));
    }
    if (path.closed) {
        out.samples.back().v_p = out.samples.front().v_p;
        out.samples.back().delta_p_hz = out.samples.front().delta_p_hz;
    }
    return out;
}

}  // namespace

const char* to_string(Direction d) {
    return d == Direction::Clockwise ? "cw" : "ccw";
}

void ParamPath::validate() const {
    require(samples.size() >= 2, "a path needs at least two samples");
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        require(std::isfinite(s.t) && std::isfinite(s.v_p) && std::isfinite(s.delta_p_hz),
                "path samples must be finite");
        require(s.v_p >= 0.0, "pump amplitude must be non-negative");
        if (k > 0) {
            require(s.t > samples[k - 1].t, "path time must be strictly increasing");
        }
    }
}

ParamSample ParamPath::at(double t) const {
    const double t0 = start_time();
    const double t1 = end_time();
    const double slack = 1e-9 * std::max(1.0, std::abs(t1 - t0));
    if (!(t >= t0 - slack && t <= t1 + slack)) {
        std::ostringstream msg;
        msg << "time " << t << " s outside path span [" << t0 << ", " << t1 << "]";
        throw Error(ErrorKind::OutOfRange, msg.str());
    }
    t = std::clamp(t, t0, t1);
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const ParamSample& s) { return v < s.t; });
    if (it == samples.begin()) {
        return samples.front();
    }
    const auto& a = *(it - 1);
    if (it == samples.end() || a.t == t) {
        ParamSample out = a;
        out.t = t;
        return out;
    }
    const auto& b = *it;
    const double u = (t - a.t) / (b.t - a.t);
    return {t, a.v_p + u * (b.v_p - a.v_p), a.delta_p_hz + u * (b.delta_p_hz - a.delta_p_hz)};
}

ParamPath rectangular_loop(std::span<const Corner> corners, std::span<const double> edge_durations,
                           Direction direction, std::size_t samples) {
    require(corners.size() >= 3, "a loop needs at least two edges");
    require(edge_durations.size() == corners.size() - 1, "one duration per edge");
    require(samples >= 2, "a loop needs at least two samples");
    require(corners.front().v_p == corners.back().v_p &&
                corners.front().delta_p_hz == corners.back().delta_p_hz,
            "loop corners must close");

    std::vector<double> edge_start(edge_durations.size() + 1, 0.0);
    for (std::size_t e = 0; e < edge_durations.size(); ++e) {
        require(edge_durations[e] > 0.0, "edge durations must be positive");
        edge_start[e + 1] = edge_start[e] + edge_durations[e];
    }
    const double total = edge_start.back();

    ParamPath fwd;
    fwd.closed = true;
    fwd.samples.reserve(samples);
    std::size_t edge = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = uniform_time(0.0, total, k, samples);
        while (edge + 1 < edge_durations.size() && t >= edge_start[edge + 1]) {
            ++edge;
        }
        const double u = std::clamp((t - edge_start[edge]) / edge_durations[edge], 0.0, 1.0);
        const Corner& a = corners[edge];
        const Corner& b = corners[edge + 1];
        fwd.samples.push_back(
            {t, a.v_p + u * (b.v_p - a.v_p), a.delta_p_hz + u * (b.delta_p_hz - a.delta_p_hz)});
    }
    fwd.samples.back().v_p = corners.front().v_p;
    fwd.samples.back().delta_p_hz = corners.front().delta_p_hz;
    fwd.validate();
    if (direction == Direction::Clockwise) {
        return fwd;
    }
    return reversed(fwd);
}

ParamPath circular_loop(double center_v, double radius_v, double radius_hz, double period,
                        Direction direction, std::size_t samples) {
    require(period > 0.0, "period must be positive");
    require(samples >= 2, "a loop needs at least two samples");
    require(center_v - std::abs(radius_v) >= 0.0, "circle reaches negative pump amplitude");
    const double sign = direction == Direction::Clockwise ? 1.0 : -1.0;
    ParamPath out;
    out.closed = true;
    out.samples.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = uniform_time(0.0, period, k, samples);
        const double a = kTwoPi * t / period;
        out.samples.push_back({t, center_v + radius_v * std::cos(a), sign * radius_hz * std::sin(a)});
    }
    out.samples.back().v_p = out.samples.front().v_p;
    out.samples.back().delta_p_hz = out.samples.front().delta_p_hz;
    out.validate();
    return out;
}

ParamPath pt_symmetric_rectangle(Direction direction, double edge_duration, std::size_t samples) {
    const Corner corners[] = {{0.5, 0.3}, {0.1, 0.3}, {0.1, -0.3}, {0.5, -0.3}, {0.5, 0.3}};
    const double edges[] = {edge_duration, edge_duration, edge_duration, edge_duration};
    return rectangular_loop(corners, edges, direction, samples);
}

ParamPath pt_broken_rectangle(Direction direction, double edge_duration, std::size_t samples) {
    const Corner corners[] = {{0.1, 0.3}, {0.1, -0.3}, {0.5, -0.3}, {0.5, 0.3}, {0.1, 0.3}};
    const double edges[] = {edge_duration, edge_duration, edge_duration, edge_duration};
    return rectangular_loop(corners, edges, direction, samples);
}

ParamPath reference_circle(Direction direction, double period, std::size_t samples) {
    return circular_loop(0.3, 0.2, 0.2, period, direction, samples);
}

std::vector<std::size_t> LoopSchedule::switch_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < flags.size(); ++k) {
        if (flags[k] != SwitchKind::None) {
            out.push_back(k);
        }
    }
    return out;
}

std::vector<std::size_t> LoopSchedule::switch_indices(SwitchKind kind) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < flags.size(); ++k) {
        if (flags[k] == kind) {
            out.push_back(k);
        }
    }
    return out;
}

void LoopSchedule::validate() const {
    path.validate();
    require(phi.size() == path.samples.size() && flags.size() == path.samples.size(),
            "schedule columns differ in length");
    for (double p : phi) {
        require(std::isfinite(p), "schedule phase must be finite");
    }
    require(std::isfinite(theta0), "schedule theta0 must be finite");
}

std::vector<model::PumpSettings> pump_path(const ParamPath& path, const model::Device& device) {
    std::vector<model::PumpSettings> out;
    out.reserve(path.samples.size());
    for (const auto& s : path.samples) {
        out.push_back(device.pump(s.v_p, s.delta_p()));
    }
    return out;
}

LoopSchedule schedule_phase_shifts(const ParamPath& path, const model::Device& device,
                                   model::SheetLabel start, std::size_t pinpoints) {
    return transition_schedule(path, device, start, {}, pinpoints);
}

LoopSchedule transition_schedule(const ParamPath& path, const model::Device& device,
                                 model::SheetLabel start, std::span<const SheetSwitch> switches,
                                 std::size_t pinpoints) {
    path.validate();
    require(pinpoints >= 2, "a schedule needs at least two pinpoints");
    for (const auto& sw : switches) {
        if (!(sw.t >= path.start_time() && sw.t <= path.end_time())) {
            std::ostringstream msg;
            msg << "switch time " << sw.t << " s outside loop span [" << path.start_time() << ", "
                << path.end_time() << "]";
            throw Error(ErrorKind::OutOfRange, msg.str());
        }
    }

    LoopSchedule out;
    out.path = resample(path, pinpoints);
    out.start_sheet = start;
    const auto pumps = pump_path(out.path, device);
    const model::TrackedPath tracked = model::sheet_track(pumps, device.modes);

    const std::size_t n = out.size();
    out.flags.assign(n, SwitchKind::None);
    for (std::size_t k : tracked.cut_crossings) {
        out.flags[k] = SwitchKind::BranchCut;
    }

    std::vector<std::size_t> switch_at;
    std::vector<model::SheetLabel> switch_target;
    {
        std::vector<SheetSwitch> sorted(switches.begin(), switches.end());
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const SheetSwitch& a, const SheetSwitch& b) { return a.t < b.t; });
        for (const auto& sw : sorted) {
            std::size_t k = 0;
            while (k + 1 < n && out.path.samples[k].t < sw.t) {
                ++k;
            }
            switch_at.push_back(k);
            switch_target.push_back(sw.target);
        }
    }

    out.phi.resize(n);
    model::SheetLabel branch = start;  // continuity branch currently followed
    std::size_t next_switch = 0;
    double theta_prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        bool jumped = false;
        while (next_switch < switch_at.size() && switch_at[next_switch] == k) {
            if (tracked.label(branch, k) != switch_target[next_switch]) {
                branch = model::opposite(branch);
                jumped = true;
            }
            ++next_switch;
        }
        if (jumped) {
            out.flags[k] = SwitchKind::Deliberate;
        }
        const auto h = model::build_hamiltonian(device.modes, pumps[k]);
        const double theta = model::response_phase(h, tracked.branch(branch, k).real());
        if (k == 0) {
            out.theta0 = theta;
            out.phi[0] = 0.0;
        } else {
            out.phi[k] = out.phi[k - 1] + wrap_phase(theta - theta_prev);
        }
        theta_prev = theta;
    }
    return out;
}

ScheduleSample interpolate(const LoopSchedule& schedule, double t) {
    const auto& s = schedule.path.samples;
    const double t0 = s.front().t;
    const double t1 = s.back().t;
    const double slack = 1e-9 * std::max(1.0, std::abs(t1 - t0));
    if (!(t >= t0 - slack && t <= t1 + slack)) {
        std::ostringstream msg;
        msg << "time " << t << " s outside schedule span [" << t0 << ", " << t1 << "]";
        throw Error(ErrorKind::OutOfRange, msg.str());
    }
    t = std::clamp(t, t0, t1);
    auto it = std::upper_bound(s.begin(), s.end(), t,
                               [](double v, const ParamSample& p) { return v < p.t; });
    std::size_t k = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
    if (k + 1 >= s.size() || s[k].t == t) {
        return {s[k].v_p, s[k].delta_p(), schedule.phi[k]};
    }
    const auto& a = s[k];
    const auto& b = s[k + 1];
    const double u = (t - a.t) / (b.t - a.t);
    ScheduleSample out;
    out.v_p = a.v_p + u * (b.v_p - a.v_p);
    out.delta_p = hz_to_rad(a.delta_p_hz + u * (b.delta_p_hz - a.delta_p_hz));
    out.phi = schedule.flags[k + 1] == SwitchKind::Deliberate
                  ? schedule.phi[k]
                  : schedule.phi[k] + u * (schedule.phi[k + 1] - schedule.phi[k]);
    return out;
}

}  // namespace eptrack::paths
