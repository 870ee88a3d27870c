#pragma once

// Experiment configuration: a plain-text file of [block] headers and
// `key = value` lines. Key names carry their units. Unknown blocks or keys,
// duplicates and malformed values fail with a file:line diagnostic.

#include "eptrack/lockin.hpp"
#include "eptrack/model.hpp"
#include "eptrack/paths.hpp"
#include "eptrack/spectra.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace eptrack::config {

struct PllBlock {
    lockin::PidConfig pid;
    double compensation = deg_to_rad(-65.0);   ///< rad
    double circuit_phase = deg_to_rad(-65.0);  ///< rad
    double drive_f = 1.0;
    double settle_s = -1.0;  ///< < 0: 10 / gamma1
    double noise_std = 0.0;
    std::uint64_t noise_seed = 0;
};

enum class LoopKind { Rectangle, Circle, Transition };
const char* to_string(LoopKind k);

struct LoopBlock {
    LoopKind kind = LoopKind::Rectangle;
    std::vector<paths::Corner> corners;  ///< defaults to the PT-symmetric rectangle
    double edge_s = 15.0;
    double center_v = 0.3;
    double radius_v = 0.2;
    double radius_hz = 0.2;
    double period_s = 60.0;
    std::vector<paths::Direction> directions{paths::Direction::Clockwise};
    std::vector<model::SheetLabel> start_sheets{model::SheetLabel::High};
    std::size_t pinpoints = paths::kDefaultPinpoints;
    std::vector<paths::SheetSwitch> switches;

    [[nodiscard]] paths::ParamPath build(paths::Direction direction) const;
};

struct SweepBlock {
    spectra::SweepSource source = spectra::SweepSource::Analytic;
    std::size_t points = spectra::kDefaultSweepPoints;
    double snr_db = 0.0;  ///< 0: noiseless
    std::uint64_t seed = 1;
    double varphi = 0.0;  ///< rad
    Complex feedthrough{};
    double drive_f = 1.0;
    double v_p = 0.5;
    double delta_p_hz = 0.3;
    double settle_factor = 30.0;
};

struct SurfaceBlock {
    double v_p_min = 0.05;
    double v_p_max = 0.5;
    std::size_t v_p_steps = 21;
    double delta_p_min_hz = -0.5;
    double delta_p_max_hz = 0.5;
    std::size_t delta_p_steps = 21;
    bool analytic = false;
    int workers = 0;  ///< 0: OpenMP default
};

struct OutputBlock {
    std::string dir = ".";
    std::string prefix = "eptrack";
    double decimation_s = 0.01;
    bool full_rate = false;
    double moving_average_s = 1.0;
};

struct ExperimentConfig {
    model::Device device = model::default_device();
    PllBlock pll;
    LoopBlock loop;
    SweepBlock sweep;
    SurfaceBlock surface;
    OutputBlock output;
    std::string source_text;  ///< raw file content, hashed into the manifest
    std::string source_name;

    [[nodiscard]] lockin::ClosedLoopConfig closed_loop() const;
    [[nodiscard]] spectra::SweepConfig sweep_config() const;
};

ExperimentConfig parse(std::string_view text, std::string_view source_name);

/// Environment variable naming the directory searched for relative config paths.
inline constexpr const char* kConfigDirEnv = "EPTRACK_CONFIG_DIR";

/// Resolves `path` against the working directory, then kConfigDirEnv.
std::filesystem::path resolve(const std::filesystem::path& path);
ExperimentConfig load(const std::filesystem::path& path);

}  // namespace eptrack::config
