#include "eptrack/io.hpp"

#include "eptrack/common.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace eptrack::io {

namespace {

using nlohmann::json;

Column real(std::string name, bool nullable = false) {
    return {std::move(name), ColumnKind::Real, nullable};
}

std::string sheet_text(model::SheetLabel s) { return model::to_string(s); }

model::SheetLabel sheet_from(std::string_view s, std::string_view context) {
    if (s == "high") return model::SheetLabel::High;
    if (s == "low") return model::SheetLabel::Low;
    throw Error(ErrorKind::Io, std::string(context) + ": unknown sheet '" + std::string(s) + "'");
}

double cell(const Row& row, std::size_t i) { return parse_double(row[i], "cell"); }

}  // namespace

const Schema& trajectory_schema() {
    static const Schema s{"trajectory",
                          {real("t_s"), real("omega_d_hz"), real("theta_rad"), real("rel_phase_rad"),
                           real("v_p_v"), real("delta_p_hz"), {"sheet", ColumnKind::Sheet, false},
                           real("amplitude"), real("omega_d_avg_hz")}};
    return s;
}

const Schema& schedule_schema() {
    static const Schema s{"schedule",
                          {real("t"), real("v_p"), real("delta_p_hz"), real("phi_rad"),
                           {"switch_flag", ColumnKind::Integer, false}}};
    return s;
}

const Schema& sweep_schema() {
    static const Schema s{"sweep", {real("omega_d_hz"), real("in_phase"), real("quadrature")}};
    return s;
}

const Schema& surface_schema() {
    static const Schema s{"surface",
                          {real("v_p"), real("delta_p_hz"), real("re_lambda_plus_hz", true),
                           real("re_lambda_minus_hz", true), real("linewidth_plus_hz", true),
                           real("linewidth_minus_hz", true), real("residual", true)}};
    return s;
}

std::vector<Row> trajectory_rows(const std::vector<lockin::TrajectoryRecord>& records,
                                 const std::vector<double>& averaged) {
    std::vector<Row> rows;
    rows.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        const double avg = averaged.empty() ? r.omega_d : averaged.at(k);
        rows.push_back({format_double(r.t), format_double(rad_to_hz(r.omega_d)),
                        format_double(r.theta), format_double(r.rel_phase), format_double(r.v_p),
                        format_double(rad_to_hz(r.delta_p)), sheet_text(r.sheet),
                        format_double(r.amplitude), format_double(rad_to_hz(avg))});
    }
    return rows;
}

void write_trajectory(const std::filesystem::path& path,
                      const std::vector<lockin::TrajectoryRecord>& records,
                      const std::vector<double>& averaged) {
    write_table_file(path, trajectory_schema(), trajectory_rows(records, averaged));
}

std::vector<lockin::TrajectoryRecord> read_trajectory(const std::filesystem::path& path) {
    const auto rows = read_table_file(path, trajectory_schema());
    std::vector<lockin::TrajectoryRecord> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        lockin::TrajectoryRecord r;
        r.t = cell(row, 0);
        r.omega_d = hz_to_rad(cell(row, 1));
        r.theta = cell(row, 2);
        r.rel_phase = cell(row, 3);
        r.v_p = cell(row, 4);
        r.delta_p = hz_to_rad(cell(row, 5));
        r.sheet = sheet_from(row[6], path.string());
        r.amplitude = cell(row, 7);
        out.push_back(r);
    }
    return out;
}

std::filesystem::path schedule_header_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    return p;
}

void write_schedule(const std::filesystem::path& csv_path, const paths::LoopSchedule& schedule) {
    schedule.validate();
    std::vector<Row> rows;
    rows.reserve(schedule.size());
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const auto& s = schedule.path.samples[k];
        rows.push_back({format_double(s.t), format_double(s.v_p), format_double(s.delta_p_hz),
                        format_double(schedule.phi[k]),
                        format_integer(static_cast<int>(schedule.flags[k]))});
    }
    json header;
    header["format"] = "eptrack-schedule";
    header["version"] = 1;
    header["start_sheet"] = sheet_text(schedule.start_sheet);
    header["theta0_rad"] = format_double(schedule.theta0);
    header["closed"] = schedule.path.closed;
    header["base_v_p"] = format_double(schedule.path.samples.front().v_p);
    header["base_delta_p_hz"] = format_double(schedule.path.samples.front().delta_p_hz);
    header["pinpoints"] = schedule.size();
    write_table_file(csv_path, schedule_schema(), rows);
    write_file_atomic(schedule_header_path(csv_path), header.dump(2) + "\n");
}

paths::LoopSchedule read_schedule(const std::filesystem::path& csv_path) {
    const auto header_path = schedule_header_path(csv_path);
    json header;
    try {
        header = json::parse(read_file(header_path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, header_path.string() + ": " + e.what());
    }
    const auto rows = read_table_file(csv_path, schedule_schema());
    paths::LoopSchedule out;
    try {
        if (header.at("format").get<std::string>() != "eptrack-schedule") {
            throw Error(ErrorKind::Io, header_path.string() + ": not a schedule header");
        }
        out.start_sheet = sheet_from(header.at("start_sheet").get<std::string>(), header_path.string());
        out.theta0 = parse_double(header.at("theta0_rad").get<std::string>(), "theta0_rad");
        out.path.closed = header.at("closed").get<bool>();
        if (header.at("pinpoints").get<std::size_t>() != rows.size()) {
            throw Error(ErrorKind::Io, header_path.string() + ": pinpoint count disagrees with " +
                                           csv_path.string());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, header_path.string() + ": " + e.what());
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& row = rows[k];
        out.path.samples.push_back({cell(row, 0), cell(row, 1), cell(row, 2)});
        out.phi.push_back(cell(row, 3));
        const auto flag = parse_integer(row[4], "switch_flag");
        if (flag < 0 || flag > 2) {
            std::ostringstream msg;
            msg << csv_path.string() << ":" << k + 2 << ": switch_flag must be 0, 1 or 2";
            throw Error(ErrorKind::Io, msg.str());
        }
        out.flags.push_back(static_cast<paths::SwitchKind>(flag));
    }
    try {
        out.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Io, csv_path.string() + ": " + e.what());
    }
    return out;
}

void write_sweep(const std::filesystem::path& path, const std::vector<spectra::SweepPoint>& points) {
    std::vector<Row> rows;
    rows.reserve(points.size());
    for (const auto& p : points) {
        rows.push_back({format_double(rad_to_hz(p.omega_d)), format_double(p.in_phase),
                        format_double(p.quadrature)});
    }
    write_table_file(path, sweep_schema(), rows);
}

std::vector<spectra::SweepPoint> read_sweep(const std::filesystem::path& path) {
    const auto rows = read_table_file(path, sweep_schema());
    std::vector<spectra::SweepPoint> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back({hz_to_rad(cell(row, 0)), cell(row, 1), cell(row, 2)});
    }
    return out;
}

void write_surface(const std::filesystem::path& path, const spectra::SurfaceGrid& grid) {
    const double nan = std::nan("");
    std::vector<Row> rows;
    rows.reserve(grid.cells.size());
    for (const auto& c : grid.cells) {
        double rp = nan, rm = nan, lp = nan, lm = nan, res = nan;
        if (c.eigen) {
            rp = rad_to_hz(c.eigen->plus.real());
            rm = rad_to_hz(c.eigen->minus.real());
            lp = rad_to_hz(-2.0 * c.eigen->plus.imag());
            lm = rad_to_hz(-2.0 * c.eigen->minus.imag());
            res = c.residual;
        }
        rows.push_back({format_double(c.v_p), format_double(c.delta_p_hz), format_double(rp),
                        format_double(rm), format_double(lp), format_double(lm),
                        format_double(res)});
    }
    write_table_file(path, surface_schema(), rows);
}

std::string fit_to_json(const spectra::FitResult& fit) {
    const auto& p = fit.params;
    json j;
    j["format"] = "eptrack-fit";
    j["version"] = 1;
    j["status"] = spectra::to_string(fit.status);
    j["iterations"] = fit.iterations;
    j["seed"] = fit.seed_name;
    j["residual"] = fit.residual;
    j["omega1_hz"] = rad_to_hz(p.omega1);
    j["omega2_hz"] = rad_to_hz(p.omega2);
    j["gamma1_hz"] = rad_to_hz(p.gamma1);
    j["gamma2_hz"] = rad_to_hz(p.gamma2);
    j["g_hz"] = rad_to_hz(p.g);
    j["f"] = p.f;
    j["varphi_deg"] = rad_to_deg(p.varphi);
    j["feedthrough"] = {p.b.real(), p.b.imag()};
    j["lambda_plus_hz"] = {rad_to_hz(fit.eigen.plus.real()), rad_to_hz(fit.eigen.plus.imag())};
    j["lambda_minus_hz"] = {rad_to_hz(fit.eigen.minus.real()), rad_to_hz(fit.eigen.minus.imag())};
    return j.dump(2) + "\n";
}

void write_fit(const std::filesystem::path& path, const spectra::FitResult& fit) {
    write_file_atomic(path, fit_to_json(fit));
}

}  // namespace eptrack::io
