#include "eptrack/cli.hpp"

#include "eptrack/config.hpp"
#include "eptrack/io.hpp"
#include "eptrack/manifest.hpp"
#include "eptrack/ted.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace eptrack::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Common {
    std::string config_path;
    std::string out_dir;
};

config::ExperimentConfig load_config(const Common& common) {
    config::ExperimentConfig cfg;
    if (!common.config_path.empty()) {
        cfg = config::load(common.config_path);
    } else if (const char* dir = std::getenv(config::kConfigDirEnv); dir && *dir) {
        const fs::path fallback = fs::path(dir) / "eptrack.conf";
        cfg = fs::exists(fallback) ? config::load(fallback) : config::parse("", "<defaults>");
    } else {
        cfg = config::parse("", "<defaults>");
    }
    if (!common.out_dir.empty()) {
        cfg.output.dir = common.out_dir;
    }
    return cfg;
}

fs::path output_path(const config::ExperimentConfig& cfg, const std::string& stem) {
    return fs::path(cfg.output.dir) / (cfg.output.prefix + "_" + stem);
}

io::RunManifest start_manifest(const config::ExperimentConfig& cfg, std::string command,
                               std::uint64_t seed) {
    io::RunManifest m;
    m.command = std::move(command);
    m.config_hash = io::sha256_hex(cfg.source_text);
    m.seed = seed;
    m.code_version = io::code_version();
    return m;
}

void finish_manifest(io::RunManifest& m, const config::ExperimentConfig& cfg,
                     const std::vector<fs::path>& files, Clock::time_point started) {
    for (const auto& f : files) {
        m.add_output(f, cfg.output.dir);
    }
    m.wall_clock_s = std::chrono::duration<double>(Clock::now() - started).count();
    const auto path = output_path(cfg, m.command + "_manifest.json");
    io::write_manifest(path, m);
    std::cout << "manifest " << path.string() << "\n";
}

int cmd_ep(const Common& common) {
    const auto cfg = load_config(common);
    const auto ep = model::locate_ep(cfg.device.modes, cfg.device.pump(0.0, 0.0));
    std::printf("v_p_star_v=%.9g delta_p_star_hz=%.9g iterations=%d residual=%.3g\n", ep.v_p,
                rad_to_hz(ep.delta_p), ep.iterations, ep.residual);
    return kExitOk;
}

int cmd_surface(const Common& common, int workers_flag) {
    const auto started = Clock::now();
    const auto cfg = load_config(common);
    const auto& s = cfg.surface;
    if (s.v_p_steps == 0 || s.delta_p_steps == 0) {
        throw Error(ErrorKind::Config, "surface grid is empty (v_p_steps and delta_p_steps must be >= 1)");
    }
    if (s.v_p_min < 0.0 || s.v_p_max < s.v_p_min || s.delta_p_max_hz < s.delta_p_min_hz) {
        throw Error(ErrorKind::Config, "surface grid bounds are inverted or negative");
    }
    const int workers = workers_flag >= 0 ? workers_flag : s.workers;
    if (workers > 0) {
        exec::set_threads(workers);
    }
    const auto policy = workers == 1 ? exec::Policy::Serial : exec::Policy::Parallel;

    spectra::SurfaceOptions opt;
    opt.sweep = cfg.sweep_config();
    opt.points = cfg.sweep.points;
    opt.analytic = s.analytic;
    opt.snr_db = cfg.sweep.snr_db;
    const auto v = spectra::linspace(s.v_p_min, s.v_p_max, s.v_p_steps);
    const auto d = spectra::linspace(s.delta_p_min_hz, s.delta_p_max_hz, s.delta_p_steps);
    const auto grid = spectra::build_surfaces(cfg.device, v, d, opt, policy);

    const auto path = output_path(cfg, "surface.csv");
    io::write_surface(path, grid);
    std::size_t failed = 0;
    for (const auto& c : grid.cells) {
        if (!c.eigen) ++failed;
    }
    std::cout << "surface " << path.string() << " cells=" << grid.cells.size() << " failed=" << failed;
    if (failed < grid.cells.size()) {
        const auto bp = spectra::estimate_branch_point(grid);
        std::cout << " branch_point_v=" << bp.v_p << " branch_point_hz=" << bp.delta_p_hz;
    }
    std::cout << "\n";
    auto m = start_manifest(cfg, "surface", cfg.sweep.seed);
    finish_manifest(m, cfg, {path}, started);
    return kExitOk;
}

int cmd_sweep(const Common& common) {
    const auto started = Clock::now();
    const auto cfg = load_config(common);
    const auto h = model::build_hamiltonian(
        cfg.device.modes, cfg.device.pump(cfg.sweep.v_p, hz_to_rad(cfg.sweep.delta_p_hz)));
    const auto grid = spectra::default_grid(h, cfg.sweep.points);
    auto sc = cfg.sweep_config();
    if (cfg.sweep.snr_db > 0.0) {
        sc.noise_std = spectra::noise_for_snr(h, grid, sc, cfg.sweep.snr_db);
    }
    const auto points = spectra::sweep(h, grid, sc);
    const auto path = output_path(cfg, "sweep.csv");
    io::write_sweep(path, points);
    std::cout << "sweep " << path.string() << " points=" << points.size() << "\n";
    auto m = start_manifest(cfg, "sweep", cfg.sweep.seed);
    finish_manifest(m, cfg, {path}, started);
    return kExitOk;
}

int cmd_fit(const Common& common, const std::string& input) {
    const auto started = Clock::now();
    const auto cfg = load_config(common);
    const auto data = io::read_sweep(input);
    const auto r = spectra::fit_sweep(data);
    const auto path = output_path(cfg, "fit.json");
    io::write_fit(path, r);
    std::printf("fit %s status=%s residual=%.3g re_lambda_plus_hz=%.9f re_lambda_minus_hz=%.9f\n",
                path.string().c_str(), spectra::to_string(r.status), r.residual,
                rad_to_hz(r.eigen.plus.real()), rad_to_hz(r.eigen.minus.real()));
    auto m = start_manifest(cfg, "fit", 0);
    finish_manifest(m, cfg, {path}, started);
    return r.status == spectra::FitStatus::Converged ? kExitOk : kExitNumeric;
}

int run_loops(const Common& common, const std::string& command) {
    const auto started = Clock::now();
    const auto cfg = load_config(common);
    const bool transition = command == "transition";
    if (!transition && !cfg.loop.switches.empty()) {
        throw Error(ErrorKind::Config, "[loop] switches apply to the transition command only");
    }

    struct Run {
        paths::Direction direction;
        model::SheetLabel start;
        std::string stem;
    };
    std::vector<Run> runs;
    std::vector<paths::LoopSchedule> schedules;
    for (auto dir : cfg.loop.directions) {
        for (auto sheet : cfg.loop.start_sheets) {
            const auto path = cfg.loop.build(dir);
            if (transition) {
                schedules.push_back(paths::transition_schedule(path, cfg.device, sheet,
                                                               cfg.loop.switches, cfg.loop.pinpoints));
            } else {
                schedules.push_back(paths::schedule_phase_shifts(path, cfg.device, sheet, cfg.loop.pinpoints));
            }
            runs.push_back({dir, sheet, command + "_" + paths::to_string(dir) + "_" + model::to_string(sheet)});
        }
    }

    const auto closed = cfg.closed_loop();
    const auto results = lockin::run_closed_loop_batch(schedules, closed, exec::Policy::Parallel);

    std::vector<fs::path> files;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& rec = results[i];
        const auto report = lockin::tracking_report(schedules[i], cfg.device, rec, cfg.output.moving_average_s);
        const auto outcome = lockin::evaluate_outcome(schedules[i], cfg.device, rec);
        const auto traj = output_path(cfg, runs[i].stem + "_trajectory.csv");
        const auto sched = output_path(cfg, runs[i].stem + "_schedule.csv");
        io::write_trajectory(traj, rec, report.averaged);
        io::write_schedule(sched, schedules[i]);
        files.push_back(traj);
        files.push_back(sched);
        files.push_back(io::schedule_header_path(sched));
        std::printf("%s %s start=%s final=%s switched=%s endpoint_error_mhz=%.3f tracking_max_mhz=%.3f\n",
                    command.c_str(), paths::to_string(runs[i].direction),
                    model::to_string(runs[i].start), model::to_string(outcome.final_sheet),
                    outcome.switched ? "yes" : "no", 1e3 * rad_to_hz(outcome.distance),
                    1e3 * rad_to_hz(report.max_error));
    }
    auto m = start_manifest(cfg, command, cfg.pll.noise_seed);
    finish_manifest(m, cfg, files, started);
    return kExitOk;
}

int cmd_ted(const std::string& material, const std::vector<double>& widths_um, double omega_hz) {
    const auto mat = ted::material(material);
    const double omega = hz_to_rad(omega_hz);
    std::printf("width_um,tau_z_s,q_ted,gamma_rad_s\n");
    for (double w : widths_um) {
        const ted::BeamSpec beam{w * 1e-6, omega};
        const double tau = ted::thermal_relaxation_time(beam, mat);
        const double q = ted::q_ted(beam, mat);
        std::printf("%g,%.6e,%.6e,%.6e\n", w, tau, q, ted::damping_rate(omega, q));
    }
    return kExitOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::InvalidArgument:
        case ErrorKind::OutOfRange:
        case ErrorKind::Io:
            return kExitConfig;
        case ErrorKind::LostSignal:
            return kExitLostLock;
        default:
            return kExitNumeric;
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Phase-tracked encircling of an exceptional point in a two-mode resonator"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("-c,--config", common.config_path, "experiment config file");
        sub->add_option("-o,--out-dir", common.out_dir, "override [output] dir");
    };

    auto* ep = app.add_subcommand("ep", "locate the exceptional point");
    add_common(ep);
    auto* surface = app.add_subcommand("surface", "fitted eigenvalue surfaces over the pump grid");
    add_common(surface);
    int workers = -1;
    surface->add_option("--workers", workers, "worker threads (1 = serial)")->check(CLI::NonNegativeNumber);
    auto* sweep = app.add_subcommand("sweep", "open-loop frequency sweep");
    add_common(sweep);
    auto* fit = app.add_subcommand("fit", "fit a sweep CSV");
    add_common(fit);
    std::string input;
    fit->add_option("-i,--input", input, "sweep CSV")->required();
    auto* encircle = app.add_subcommand("encircle", "closed-loop encircling runs");
    add_common(encircle);
    auto* transition = app.add_subcommand("transition", "closed-loop runs with deliberate sheet switches");
    add_common(transition);
    auto* tedc = app.add_subcommand("ted", "Zener thermoelastic damping table");
    std::string material = "silicon";
    std::vector<double> widths{9.0, 13.0};
    double omega_hz = 50'468.68;
    tedc->add_option("--material", material, "material name");
    tedc->add_option("--width-um", widths, "beam widths (um)")->check(CLI::PositiveNumber);
    tedc->add_option("--omega-hz", omega_hz, "mode frequency (Hz)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (ep->parsed()) return cmd_ep(common);
        if (surface->parsed()) return cmd_surface(common, workers);
        if (sweep->parsed()) return cmd_sweep(common);
        if (fit->parsed()) return cmd_fit(common, input);
        if (encircle->parsed()) return run_loops(common, "encircle");
        if (transition->parsed()) return run_loops(common, "transition");
        if (tedc->parsed()) return cmd_ted(material, widths, omega_hz);
    } catch (const Error& e) {
        std::cerr << "eptrack: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "eptrack: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}

}  // namespace eptrack::cli
