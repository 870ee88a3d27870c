#pragma once

// Typed readers and writers for the file formats documented in docs/formats.md.

#include "eptrack/csv.hpp"
#include "eptrack/lockin.hpp"
#include "eptrack/paths.hpp"
#include "eptrack/spectra.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace eptrack::io {

const Schema& trajectory_schema();
const Schema& schedule_schema();
const Schema& sweep_schema();
const Schema& surface_schema();

/// `averaged` (rad/s) fills omega_d_avg_hz; pass empty to repeat omega_d.
std::vector<Row> trajectory_rows(const std::vector<lockin::TrajectoryRecord>& records,
                                 const std::vector<double>& averaged);
void write_trajectory(const std::filesystem::path& path,
                      const std::vector<lockin::TrajectoryRecord>& records,
                      const std::vector<double>& averaged);
std::vector<lockin::TrajectoryRecord> read_trajectory(const std::filesystem::path& path);

/// CSV plus a JSON header next to it (path with extension .json).
void write_schedule(const std::filesystem::path& csv_path, const paths::LoopSchedule& schedule);
paths::LoopSchedule read_schedule(const std::filesystem::path& csv_path);
std::filesystem::path schedule_header_path(const std::filesystem::path& csv_path);

void write_sweep(const std::filesystem::path& path, const std::vector<spectra::SweepPoint>& points);
std::vector<spectra::SweepPoint> read_sweep(const std::filesystem::path& path);

void write_surface(const std::filesystem::path& path, const spectra::SurfaceGrid& grid);

std::string fit_to_json(const spectra::FitResult& fit);
void write_fit(const std::filesystem::path& path, const spectra::FitResult& fit);

}  // namespace eptrack::io
