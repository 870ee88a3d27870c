#include "eptrack/config.hpp"

#include "eptrack/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace eptrack::config {

namespace {

struct Context {
    std::string_view source;
    std::size_t line = 0;
    std::string block;
    std::string key;

    [[noreturn]] void fail(std::string_view what) const {
        std::ostringstream msg;
        msg << source << ":" << line << ": [" << block << "] " << key << ": " << what;
        throw Error(ErrorKind::Config, msg.str());
    }
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t pos = s.find(sep, start);
        const auto item = trim(s.substr(start, pos == s.npos ? s.npos : pos - start));
        if (!item.empty()) out.push_back(item);
        if (pos == s.npos) break;
        start = pos + 1;
    }
    return out;
}

double number(std::string_view v, const Context& c) {
    try {
        const double x = io::parse_double(trim(v), "value");
        if (!std::isfinite(x)) c.fail("value must be finite");
        return x;
    } catch (const Error&) {
        c.fail("'" + std::string(v) + "' is not a number");
    }
}

double positive(std::string_view v, const Context& c) {
    const double x = number(v, c);
    if (!(x > 0.0)) c.fail("must be positive");
    return x;
}

std::uint64_t unsigned_int(std::string_view v, const Context& c) {
    try {
        const auto x = io::parse_integer(trim(v), "value");
        if (x < 0) c.fail("must be non-negative");
        return static_cast<std::uint64_t>(x);
    } catch (const Error&) {
        c.fail("'" + std::string(v) + "' is not a non-negative integer");
    }
}

bool boolean(std::string_view v, const Context& c) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    c.fail("expected true or false");
}

template <typename T>
T choice(std::string_view v, const Context& c, std::initializer_list<std::pair<const char*, T>> opts) {
    std::string names;
    for (const auto& [name, value] : opts) {
        if (v == name) return value;
        names += names.empty() ? "" : ", ";
        names += name;
    }
    c.fail("'" + std::string(v) + "' is not one of " + names);
}

std::pair<double, double> pair_of(std::string_view item, const Context& c) {
    const auto colon = item.find(':');
    if (colon == item.npos) c.fail("expected a:b pair, got '" + std::string(item) + "'");
    return {number(item.substr(0, colon), c), number(item.substr(colon + 1), c)};
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::Config, what);
}

using Handler = std::function<void(std::string_view, const Context&)>;

}  // namespace

const char* to_string(LoopKind k) {
    switch (k) {
        case LoopKind::Rectangle: return "rectangle";
        case LoopKind::Circle: return "circle";
        case LoopKind::Transition: return "transition";
    }
    return "unknown";
}

paths::ParamPath LoopBlock::build(paths::Direction direction) const {
    if (kind == LoopKind::Circle) {
        return paths::circular_loop(center_v, radius_v, radius_hz, period_s, direction, pinpoints);
    }
    if (corners.empty()) {
        return paths::pt_symmetric_rectangle(direction, edge_s, pinpoints);
    }
    const std::vector<double> edges(corners.size() - 1, edge_s);
    return paths::rectangular_loop(corners, edges, direction, pinpoints);
}

lockin::ClosedLoopConfig ExperimentConfig::closed_loop() const {
    lockin::ClosedLoopConfig c;
    c.device = device;
    c.pid = pll.pid;
    c.drive_f = pll.drive_f;
    c.circuit_phase = pll.circuit_phase;
    c.compensation = pll.compensation;
    c.record_interval = output.full_rate ? 0.0 : output.decimation_s;
    c.settle_time = pll.settle_s;
    c.noise_std = pll.noise_std;
    c.noise_seed = pll.noise_seed;
    return c;
}

spectra::SweepConfig ExperimentConfig::sweep_config() const {
    spectra::SweepConfig c;
    c.source = sweep.source;
    c.f = sweep.drive_f;
    c.varphi = sweep.varphi;
    c.feedthrough = sweep.feedthrough;
    c.seed = sweep.seed;
    c.settle_factor = sweep.settle_factor;
    return c;
}

ExperimentConfig parse(std::string_view text, std::string_view source_name) {
    ExperimentConfig cfg;
    cfg.source_text = std::string(text);
    cfg.source_name = std::string(source_name);

    double f1 = rad_to_hz(cfg.device.modes.omega1);
    double f2 = rad_to_hz(cfg.device.modes.omega2);
    double q1 = 74'658.0, q2 = 56'424.0;
    double gamma1_hz = -1.0, gamma2_hz = -1.0;
    bool corners_set = false;

    auto& pll = cfg.pll;
    auto& loop = cfg.loop;
    auto& sw = cfg.sweep;
    auto& sf = cfg.surface;
    auto& out = cfg.output;

    std::map<std::string, std::map<std::string, Handler>> table;
    table["device"] = {
        {"f1_hz", [&](auto v, auto& c) { f1 = positive(v, c); }},
        {"f2_hz", [&](auto v, auto& c) { f2 = positive(v, c); }},
        {"q1", [&](auto v, auto& c) { q1 = positive(v, c); }},
        {"q2", [&](auto v, auto& c) { q2 = positive(v, c); }},
        {"gamma1_hz", [&](auto v, auto& c) { gamma1_hz = positive(v, c); }},
        {"gamma2_hz", [&](auto v, auto& c) { gamma2_hz = positive(v, c); }},
        {"kappa", [&](auto v, auto& c) { cfg.device.kappa = positive(v, c); }},
        {"v0_v", [&](auto v, auto& c) { cfg.device.v_0 = positive(v, c); }},
    };
    table["pll"] = {
        {"kp_hz_per_rad", [&](auto v, auto& c) { pll.pid.kp = hz_to_rad(number(v, c)); }},
        {"ki_hz_per_rad_s", [&](auto v, auto& c) { pll.pid.ki = hz_to_rad(number(v, c)); }},
        {"kd", [&](auto v, auto& c) { pll.pid.kd = number(v, c); }},
        {"clamp_hz", [&](auto v, auto& c) { pll.pid.clamp = hz_to_rad(positive(v, c)); }},
        {"tick_s", [&](auto v, auto& c) { pll.pid.sample_interval = positive(v, c); }},
        {"compensation_deg", [&](auto v, auto& c) { pll.compensation = deg_to_rad(number(v, c)); }},
        {"circuit_phase_deg", [&](auto v, auto& c) { pll.circuit_phase = deg_to_rad(number(v, c)); }},
        {"drive_f", [&](auto v, auto& c) { pll.drive_f = positive(v, c); }},
        {"settle_s", [&](auto v, auto& c) {
             pll.settle_s = number(v, c);
             if (pll.settle_s < 0.0) c.fail("must be non-negative");
         }},
        {"noise_std", [&](auto v, auto& c) {
             pll.noise_std = number(v, c);
             if (pll.noise_std < 0.0) c.fail("must be non-negative");
         }},
        {"noise_seed", [&](auto v, auto& c) { pll.noise_seed = unsigned_int(v, c); }},
    };
    table["loop"] = {
        {"kind", [&](auto v, auto& c) {
             loop.kind = choice<LoopKind>(v, c, {{"rectangle", LoopKind::Rectangle},
                                                 {"circle", LoopKind::Circle},
                                                 {"transition", LoopKind::Transition}});
         }},
        {"preset", [&](auto v, auto& c) {
             if (corners_set) c.fail("preset and corners are exclusive");
             corners_set = true;
             const int which = choice<int>(v, c, {{"pt_symmetric", 0}, {"pt_broken", 1}});
             loop.corners = which == 0 ? std::vector<paths::Corner>{{0.5, 0.3}, {0.1, 0.3}, {0.1, -0.3}, {0.5, -0.3}, {0.5, 0.3}}
                                       : std::vector<paths::Corner>{{0.1, 0.3}, {0.1, -0.3}, {0.5, -0.3}, {0.5, 0.3}, {0.1, 0.3}};
         }},
        {"corners", [&](auto v, auto& c) {
             if (corners_set) c.fail("preset and corners are exclusive");
             corners_set = true;
             loop.corners.clear();
             for (auto item : split_list(v, ',')) {
                 const auto [vp, hz] = pair_of(item, c);
                 if (vp < 0.0) c.fail("pump amplitude must be non-negative");
                 loop.corners.push_back({vp, hz});
             }
             if (loop.corners.size() < 3) c.fail("need at least three corners");
             if (loop.corners.front().v_p != loop.corners.back().v_p ||
                 loop.corners.front().delta_p_hz != loop.corners.back().delta_p_hz) {
                 c.fail("last corner must repeat the first");
             }
         }},
        {"edge_s", [&](auto v, auto& c) { loop.edge_s = positive(v, c); }},
        {"center_v", [&](auto v, auto& c) { loop.center_v = positive(v, c); }},
        {"radius_v", [&](auto v, auto& c) { loop.radius_v = positive(v, c); }},
        {"radius_hz", [&](auto v, auto& c) { loop.radius_hz = positive(v, c); }},
        {"period_s", [&](auto v, auto& c) { loop.period_s = positive(v, c); }},
        {"direction", [&](auto v, auto& c) {
             using D = paths::Direction;
             const int d = choice<int>(v, c, {{"cw", 0}, {"ccw", 1}, {"both", 2}});
             loop.directions = d == 0 ? std::vector<D>{D::Clockwise}
                               : d == 1 ? std::vector<D>{D::CounterClockwise}
                                        : std::vector<D>{D::Clockwise, D::CounterClockwise};
         }},
        {"start_sheet", [&](auto v, auto& c) {
             using S = model::SheetLabel;
             const int s = choice<int>(v, c, {{"high", 0}, {"low", 1}, {"both", 2}});
             loop.start_sheets = s == 0 ? std::vector<S>{S::High}
                                 : s == 1 ? std::vector<S>{S::Low}
                                          : std::vector<S>{S::High, S::Low};
         }},
        {"pinpoints", [&](auto v, auto& c) {
             loop.pinpoints = unsigned_int(v, c);
             if (loop.pinpoints < 2) c.fail("need at least two pinpoints");
         }},
        {"switches", [&](auto v, auto& c) {
             loop.switches.clear();
             for (auto item : split_list(v, ',')) {
                 const auto colon = item.find(':');
                 if (colon == item.npos) c.fail("expected time_s:sheet, got '" + std::string(item) + "'");
                 paths::SheetSwitch s;
                 s.t = number(item.substr(0, colon), c);
                 s.target = choice<model::SheetLabel>(trim(item.substr(colon + 1)), c,
                                                      {{"high", model::SheetLabel::High},
                                                       {"low", model::SheetLabel::Low}});
                 loop.switches.push_back(s);
             }
         }},
    };
    table["sweep"] = {
        {"source", [&](auto v, auto& c) {
             sw.source = choice<spectra::SweepSource>(v, c, {{"analytic", spectra::SweepSource::Analytic},
                                                             {"simulated", spectra::SweepSource::Simulated}});
         }},
        {"points", [&](auto v, auto& c) {
             sw.points = unsigned_int(v, c);
             if (sw.points < 50) c.fail("need at least 50 points");
         }},
        {"snr_db", [&](auto v, auto& c) {
             sw.snr_db = number(v, c);
             if (sw.snr_db < 0.0) c.fail("must be non-negative (0 disables noise)");
         }},
        {"seed", [&](auto v, auto& c) { sw.seed = unsigned_int(v, c); }},
        {"varphi_deg", [&](auto v, auto& c) { sw.varphi = deg_to_rad(number(v, c)); }},
        {"feedthrough", [&](auto v, auto& c) {
             const auto parts = split_list(v, ',');
             if (parts.size() != 2) c.fail("expected 're, im'");
             sw.feedthrough = {number(parts[0], c), number(parts[1], c)};
         }},
        {"drive_f", [&](auto v, auto& c) { sw.drive_f = positive(v, c); }},
        {"v_p_v", [&](auto v, auto& c) {
             sw.v_p = number(v, c);
             if (sw.v_p < 0.0) c.fail("must be non-negative");
         }},
        {"delta_p_hz", [&](auto v, auto& c) { sw.delta_p_hz = number(v, c); }},
        {"settle_factor", [&](auto v, auto& c) {
             sw.settle_factor = number(v, c);
             if (sw.settle_factor < 10.0) c.fail("must be at least 10");
         }},
    };
    table["surface"] = {
        {"v_p_min_v", [&](auto v, auto& c) { sf.v_p_min = number(v, c); }},
        {"v_p_max_v", [&](auto v, auto& c) { sf.v_p_max = number(v, c); }},
        {"v_p_steps", [&](auto v, auto& c) { sf.v_p_steps = unsigned_int(v, c); }},
        {"delta_p_min_hz", [&](auto v, auto& c) { sf.delta_p_min_hz = number(v, c); }},
        {"delta_p_max_hz", [&](auto v, auto& c) { sf.delta_p_max_hz = number(v, c); }},
        {"delta_p_steps", [&](auto v, auto& c) { sf.delta_p_steps = unsigned_int(v, c); }},
        {"analytic", [&](auto v, auto& c) { sf.analytic = boolean(v, c); }},
        {"workers", [&](auto v, auto& c) { sf.workers = static_cast<int>(unsigned_int(v, c)); }},
    };
    table["output"] = {
        {"dir", [&](auto v, auto& c) {
             if (v.empty()) c.fail("must not be empty");
             out.dir = std::string(v);
         }},
        {"prefix", [&](auto v, auto& c) {
             if (v.empty() || v.find('/') != v.npos) c.fail("must be a plain file-name prefix");
             out.prefix = std::string(v);
         }},
        {"decimation_s", [&](auto v, auto& c) { out.decimation_s = positive(v, c); }},
        {"full_rate", [&](auto v, auto& c) { out.full_rate = boolean(v, c); }},
        {"moving_average_s", [&](auto v, auto& c) {
             out.moving_average_s = number(v, c);
             if (out.moving_average_s < 0.0) c.fail("must be non-negative");
         }},
    };

    Context ctx;
    ctx.source = source_name;
    std::set<std::string> seen;
    std::size_t start = 0;
    while (start < text.size() || ctx.line == 0) {
        const std::size_t end = text.find('\n', start);
        std::string_view raw = text.substr(start, end == text.npos ? text.npos : end - start);
        ++ctx.line;
        start = end == text.npos ? text.size() : end + 1;
        if (const auto hash = raw.find('#'); hash != raw.npos) raw = raw.substr(0, hash);
        const auto line = trim(raw);
        if (line.empty()) {
            if (end == text.npos) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                ctx.key.clear();
                ctx.fail("malformed block header '" + std::string(line) + "'");
            }
            ctx.block = std::string(trim(line.substr(1, line.size() - 2)));
            ctx.key.clear();
            if (!table.contains(ctx.block)) ctx.fail("unknown block");
        } else {
            const auto eq = line.find('=');
            ctx.key = std::string(trim(line.substr(0, eq)));
            if (eq == line.npos) ctx.fail("expected key = value");
            if (ctx.block.empty()) ctx.fail("key outside any block");
            const auto& keys = table.at(ctx.block);
            const auto it = keys.find(ctx.key);
            if (it == keys.end()) ctx.fail("unknown key");
            if (!seen.insert(ctx.block + "." + ctx.key).second) ctx.fail("duplicate key");
            it->second(trim(line.substr(eq + 1)), ctx);
        }
        if (end == text.npos) break;
    }

    // Cross-field checks and derived values.
    ctx.block = "device";
    ctx.key = "";
    if ((gamma1_hz > 0.0 && seen.contains("device.q1")) || (gamma2_hz > 0.0 && seen.contains("device.q2"))) {
        ctx.fail("give either q or gamma_hz per mode, not both");
    }
    cfg.device.modes.omega1 = hz_to_rad(f1);
    cfg.device.modes.omega2 = hz_to_rad(f2);
    cfg.device.modes.gamma1 = gamma1_hz > 0.0 ? hz_to_rad(gamma1_hz) : cfg.device.modes.omega1 / q1;
    cfg.device.modes.gamma2 = gamma2_hz > 0.0 ? hz_to_rad(gamma2_hz) : cfg.device.modes.omega2 / q2;
    try {
        cfg.device.modes.validate();
        cfg.pll.pid.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, std::string(source_name) + ": " + e.what());
    }
    if (loop.kind == LoopKind::Transition && !corners_set) {
        loop.corners = {{0.1, 0.3}, {0.1, -0.3}, {0.5, -0.3}, {0.5, 0.3}, {0.1, 0.3}};
    }
    if (loop.kind == LoopKind::Circle) {
        require(loop.center_v > loop.radius_v, "circle reaches non-positive pump amplitude");
    }
    return cfg;
}

std::filesystem::path resolve(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (path.is_absolute() || fs::exists(path)) {
        return path;
    }
    if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir) {
        const fs::path candidate = fs::path(dir) / path;
        if (fs::exists(candidate)) {
            return candidate;
        }
    }
    throw Error(ErrorKind::Config, "config file '" + path.string() + "' not found (also searched $" +
                                       kConfigDirEnv + ")");
}

ExperimentConfig load(const std::filesystem::path& path) {
    const auto resolved = resolve(path);
    std::string text;
    try {
        text = io::read_file(resolved);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    return parse(text, resolved.string());
}

}  // namespace eptrack::config
