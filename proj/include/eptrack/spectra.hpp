#pragma once

// Open-loop frequency sweeps, the complex Lorentzian-pair fit that recovers
// the effective Hamiltonian from a sweep, and eigenvalue surfaces over the
// (Vp, delta_p) plane.
//
// Fit model: F(w) = f chi_1(w) e^{i varphi} + b, compared with the data as
// in_phase ~ Re F and quadrature ~ -Im F.

#include "eptrack/common.hpp"
#include "eptrack/model.hpp"
#include "eptrack/parallel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eptrack::spectra {

struct SweepPoint {
    double omega_d = 0.0;     ///< rad/s
    double in_phase = 0.0;    ///< A cos(theta)
    double quadrature = 0.0;  ///< A sin(theta)

    /// A e^{-i theta}, comparable with F directly.
    [[nodiscard]] Complex value() const { return {in_phase, -quadrature}; }
};

enum class SweepSource { Analytic, Simulated };

struct SweepConfig {
    SweepSource source = SweepSource::Analytic;
    double f = 1.0;
    double varphi = 0.0;     ///< circuit phase (rad)
    Complex feedthrough{};   ///< background b
    double noise_std = 0.0;  ///< per quadrature, after the circuit
    std::uint64_t seed = 0;
    double settle_factor = 30.0;  ///< simulated: settle per point, in units of 1 / min(gamma)
    double plant_step = 1e-3;     ///< simulated: envelope step (s)

    void validate() const;
};

inline constexpr std::size_t kDefaultSweepPoints = 801;

/// [Omega1 - 6 gamma2, Omega1 + 6 gamma2 + |Omega2 - Omega1|], uniform.
std::vector<double> default_grid(const model::EffectiveHamiltonian& h,
                                 std::size_t points = kDefaultSweepPoints);

/// Ascending grid only. Simulated mode starts from rest at the first point
/// and continues the state through the sweep.
std::vector<SweepPoint> sweep(const model::EffectiveHamiltonian& h, std::span<const double> grid,
                              const SweepConfig& config);

/// Noise level giving `snr_db` relative to the largest |F| on the grid.
double noise_for_snr(const model::EffectiveHamiltonian& h, std::span<const double> grid,
                     const SweepConfig& config, double snr_db);

struct FitParams {
    double omega1 = 0.0;
    double omega2 = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double g = 0.0;
    double f = 0.0;
    double varphi = 0.0;
    Complex b{};

    [[nodiscard]] model::EffectiveHamiltonian hamiltonian() const {
        return {omega1, omega2, g, gamma1, gamma2};
    }
};

enum class FitStatus { Converged, NoConvergence, NonPhysical };

const char* to_string(FitStatus s);

struct FitResult {
    FitParams params;
    model::EigenPair eigen;  ///< eigenvalues of params.hamiltonian()
    double residual = 0.0;   ///< RMS over both quadratures
    FitStatus status = FitStatus::NoConvergence;
    int iterations = 0;
    std::string seed_name;
};

/// Model value F at one frequency.
Complex model_response(const FitParams& p, double omega_d);

/// RMS of the stacked in_phase / quadrature residual.
double rms_residual(const FitParams& p, std::span<const SweepPoint> data);

/// Peak-picking seed. Throws DegenerateSweep on a featureless sweep and
/// InvalidArgument on fewer than 50 points.
FitResult initial_guess(std::span<const SweepPoint> data);

struct FitOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;  ///< relative step size
    double jacobian_step = 1e-6;    ///< relative central-difference step
};

/// Levenberg-Marquardt refinement of all nine parameters.
FitResult fit(std::span<const SweepPoint> data, const FitParams& seed, const FitOptions& options = {});

/// Multi-start fit (peak-pick and rational-linearization seeds); returns the
/// lowest-residual converged result.
FitResult fit_sweep(std::span<const SweepPoint> data, const FitOptions& options = {});

/// Seeded fits of independent noisy sweeps of one Hamiltonian, seeds
/// base_seed + i. Identical results for both policies.
std::vector<FitResult> monte_carlo_fits(const model::EffectiveHamiltonian& h,
                                        std::span<const double> grid, const SweepConfig& config,
                                        std::size_t trials, exec::Policy policy);

struct SurfaceCell {
    double v_p = 0.0;
    double delta_p_hz = 0.0;
    std::optional<model::EigenPair> eigen;  ///< empty when the cell failed
    double residual = 0.0;
    std::string failure;
};

struct SurfaceGrid {
    std::vector<double> v_p;
    std::vector<double> delta_p_hz;
    std::vector<SurfaceCell> cells;  ///< row-major, v_p outer

    [[nodiscard]] const SurfaceCell& at(std::size_t iv, std::size_t id) const {
        return cells[iv * delta_p_hz.size() + id];
    }
};

struct SurfaceOptions {
    SweepConfig sweep;
    std::size_t points = kDefaultSweepPoints;
    bool analytic = false;         ///< closed-form eigenvalues instead of fits
    double snr_db = 0.0;           ///< > 0 overrides sweep.noise_std per cell
};

/// Cell (i, j) uses noise seed sweep.seed + i * ndelta + j.
SurfaceGrid build_surfaces(const model::Device& device, std::span<const double> v_grid,
                           std::span<const double> delta_hz_grid, const SurfaceOptions& options,
                           exec::Policy policy);

/// Grid point closest to the coalescence: argmin |l+ - l-| over valid cells.
struct BranchPoint {
    double v_p = 0.0;
    double delta_p_hz = 0.0;
    double splitting = 0.0;  ///< |l+ - l-| (rad/s)
};

BranchPoint estimate_branch_point(const SurfaceGrid& grid);

/// Uniform grid of n points on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace eptrack::spectra
