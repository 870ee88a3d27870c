#include "eptrack/spectra.hpp"

#include "eptrack/plant.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace eptrack::spectra {

namespace {

constexpr std::size_t kParams = 9;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1>;
using PVec = Eigen::Matrix<double, kParams, 1>;
using PMat = Eigen::Matrix<double, kParams, kParams>;

void require(bool ok, const char* what) {
    if (!ok) {
        throw Error(ErrorKind::InvalidArgument, what);
    }
}

// Frequencies are fitted as offsets from a reference inside the sweep so the
// relative Jacobian step stays well below a linewidth.
struct Packing {
    double omega_ref = 0.0;
    PVec scale = PVec::Ones();

    [[nodiscard]] PVec pack(const FitParams& p) const {
        PVec v;
        v << p.omega1 - omega_ref, p.omega2 - omega_ref, p.gamma1, p.gamma2, p.g, p.f, p.varphi,
            p.b.real(), p.b.imag();
        return v;
    }
    [[nodiscard]] FitParams unpack(const PVec& v) const {
        FitParams p;
        p.omega1 = omega_ref + v[0];
        p.omega2 = omega_ref + v[1];
        p.gamma1 = v[2];
        p.gamma2 = v[3];
        p.g = v[4];
        p.f = v[5];
        p.varphi = v[6];
        p.b = {v[7], v[8]};
        return p;
    }
};

// F(w) with frequencies measured from omega_ref. Uses the expanded
// characteristic polynomial so nothing is singular at the EP.
Complex response_offset(const PVec& v, double w) {
    const Complex d1 = Complex(w - v[0], 0.5 * v[2]);
    const Complex d2 = Complex(w - v[1], 0.5 * v[3]);
    const Complex chi = -d2 / (d1 * d2 - v[4] * v[4]);
    return v[5] * chi * std::polar(1.0, v[6]) + Complex(v[7], v[8]);
}

void residual_vector(const PVec& v, std::span<const double> w, std::span<const SweepPoint> data,
                     Vec& r) {
    for (std::size_t j = 0; j < data.size(); ++j) {
        const Complex fv = response_offset(v, w[j]);
        r[2 * j] = data[j].in_phase - fv.real();
        r[2 * j + 1] = data[j].quadrature + fv.imag();
    }
}

FitResult finish(const FitParams& raw, std::span<const SweepPoint> data, FitStatus status,
                 int iterations, std::string seed_name) {
    FitResult out;
    out.params = raw;
    // Gauges: g enters as g^2, f only through f e^{i varphi}.
    out.params.g = std::abs(raw.g);
    if (out.params.f < 0.0) {
        out.params.f = -out.params.f;
        out.params.varphi += kPi;
    }
    out.params.varphi = wrap_phase(out.params.varphi);
    out.eigen = model::eigenvalues(out.params.hamiltonian());
    out.residual = rms_residual(out.params, data);
    out.iterations = iterations;
    out.seed_name = std::move(seed_name);
    const auto& p = out.params;
    const bool finite = std::isfinite(p.omega1) && std::isfinite(p.omega2) &&
                        std::isfinite(p.gamma1) && std::isfinite(p.gamma2) && std::isfinite(p.g) &&
                        std::isfinite(p.f) && std::isfinite(out.residual);
    if (!finite || p.gamma1 <= 0.0 || p.gamma2 <= 0.0 || p.f == 0.0) {
        out.status = FitStatus::NonPhysical;
    } else {
        out.status = status;
    }
    return out;
}

// Best (K, b) for F = K chi + b given chi at every point.
std::pair<Complex, Complex> linear_amplitudes(const model::EffectiveHamiltonian& h,
                                              std::span<const SweepPoint> data) {
    Eigen::MatrixXcd a(static_cast<Eigen::Index>(data.size()), 2);
    Eigen::VectorXcd z(static_cast<Eigen::Index>(data.size()));
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        a(i, 0) = model::susceptibility(h, data[j].omega_d);
        a(i, 1) = 1.0;
        z(i) = data[j].value();
    }
    const Eigen::VectorXcd x = a.colPivHouseholderQr().solve(z);
    return {x(0), x(1)};
}

FitParams with_amplitudes(FitParams p, std::span<const SweepPoint> data) {
    const auto [k, b] = linear_amplitudes(p.hamiltonian(), data);
    p.f = std::abs(k);
    p.varphi = std::arg(k);
    p.b = b;
    return p;
}

double grid_reference(std::span<const SweepPoint> data) {
    return 0.5 * (data.front().omega_d + data.back().omega_d);
}

void check_data(std::span<const SweepPoint> data) {
    if (data.size() < 50) {
        throw Error(ErrorKind::InvalidArgument, "a sweep needs at least 50 points");
    }
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto& d = data[j];
        if (!std::isfinite(d.omega_d) || !std::isfinite(d.in_phase) || !std::isfinite(d.quadrature)) {
            throw Error(ErrorKind::NonFinite, "sweep contains non-finite values");
        }
        if (j > 0 && !(d.omega_d > data[j - 1].omega_d)) {
            throw Error(ErrorKind::InvalidArgument, "sweep frequencies must be strictly increasing");
        }
    }
}

// Sanathanan-Koerner iterations on F D = beta D + N with D monic quadratic
// and N linear, in scaled frequency.
std::optional<FitParams> rational_seed(std::span<const SweepPoint> data) {
    const double ref = grid_reference(data);
    const double half = 0.5 * (data.back().omega_d - data.front().omega_d);
    const auto n = static_cast<Eigen::Index>(data.size());
    std::vector<double> w(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        w[j] = (data[j].omega_d - ref) / half;
    }
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(5);
    std::vector<double> weight(data.size(), 1.0);
    for (int pass = 0; pass < 6; ++pass) {
        Eigen::MatrixXcd a(n, 5);
        Eigen::VectorXcd rhs(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(i);
            const Complex z = data[j].value();
            const double s = weight[j];
            a(i, 0) = -z * w[j] * s;
            a(i, 1) = -z * s;
            a(i, 2) = w[j] * w[j] * s;
            a(i, 3) = w[j] * s;
            a(i, 4) = s;
            rhs(i) = z * w[j] * w[j] * s;
        }
        x = a.colPivHouseholderQr().solve(rhs);
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double d = std::abs(w[j] * w[j] + x(0) * w[j] + x(1));
            weight[j] = d > 0.0 ? 1.0 / d : 1.0;
        }
    }
    const Complex d1 = x(0), d0 = x(1), beta = x(2), c1 = x(3), c0 = x(4);
    const Complex disc = std::sqrt(d1 * d1 - 4.0 * d0);
    const Complex lp = ref + half * 0.5 * (-d1 + disc);
    const Complex lm = ref + half * 0.5 * (-d1 - disc);
    const Complex n1 = c1 - beta * d1;
    const Complex n0 = c0 - beta * d0;
    if (std::abs(n1) == 0.0) {
        return std::nullopt;
    }
    const Complex h22 = ref + half * (-n0 / n1);
    const Complex h11 = lp + lm - h22;
    const Complex g2 = h11 * h22 - lp * lm;
    FitParams p;
    p.omega1 = h11.real();
    p.omega2 = h22.real();
    p.gamma1 = -2.0 * h11.imag();
    p.gamma2 = -2.0 * h22.imag();
    const double gmean = 0.5 * (std::abs(p.gamma1) + std::abs(p.gamma2));
    p.g = g2.real() > 0.0 ? std::sqrt(g2.real()) : 0.1 * gmean;
    if (!(p.gamma1 > 0.0) || !(p.gamma2 > 0.0) || !std::isfinite(p.omega1) ||
        !std::isfinite(p.omega2)) {
        return std::nullopt;
    }
    const Complex k = -half * n1;
    p.f = std::abs(k);
    p.varphi = std::arg(k);
    p.b = beta;
    return with_amplitudes(p, data);
}

struct Peaks {
    std::vector<std::size_t> index;  // at most two, by height
    double width = 0.0;              // half-power full width of the tallest (rad/s)
    Complex baseline{};
};

Peaks pick_peaks(std::span<const SweepPoint> data) {
    const std::size_t n = data.size();
    const std::size_t edge = std::max<std::size_t>(1, n / 20);
    Complex base{};
    for (std::size_t j = 0; j < edge; ++j) {
        base += data[j].value() + data[n - 1 - j].value();
    }
    base /= static_cast<double>(2 * edge);

    std::vector<double> m(n);
    for (std::size_t j = 0; j < n; ++j) {
        m[j] = std::abs(data[j].value() - base);
    }
    const auto [lo_it, hi_it] = std::minmax_element(m.begin(), m.end());
    const double top = *hi_it;
    if (!(top > 0.0) || (top - *lo_it) <= 1e-6 * top) {
        throw Error(ErrorKind::DegenerateSweep, "sweep shows no resonance");
    }
    std::vector<double> sorted = m;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(n / 2), sorted.end());
    if (top < 1.5 * sorted[n / 2]) {
        throw Error(ErrorKind::DegenerateSweep, "sweep shows no resonance above the background");
    }

    Peaks out;
    out.baseline = base;
    std::vector<std::size_t> maxima;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        if (m[j] >= m[j - 1] && m[j] > m[j + 1] && m[j] > 0.3 * top) {
            maxima.push_back(j);
        }
    }
    if (maxima.empty()) {
        maxima.push_back(static_cast<std::size_t>(hi_it - m.begin()));
    }
    std::sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return m[a] > m[b]; });
    // Keep the second peak only when a real dip separates the two.
    out.index.push_back(maxima[0]);
    for (std::size_t q = 1; q < maxima.size(); ++q) {
        const auto [a, b] = std::minmax(maxima[0], maxima[q]);
        const double dip = *std::min_element(m.begin() + static_cast<long>(a), m.begin() + static_cast<long>(b) + 1);
        if (dip < 0.9 * m[maxima[q]]) {
            out.index.push_back(maxima[q]);
            break;
        }
    }
    std::sort(out.index.begin(), out.index.end());

    const std::size_t peak = maxima[0];
    const double level = m[peak] / std::sqrt(2.0);
    std::size_t l = peak, r = peak;
    while (l > 0 && m[l] >= level) --l;
    while (r + 1 < n && m[r] >= level) ++r;
    out.width = data[r].omega_d - data[l].omega_d;
    if (!(out.width > 0.0)) {
        out.width = data[1].omega_d - data[0].omega_d;
    }
    return out;
}

FitResult peak_seed(std::span<const SweepPoint> data, const Peaks& pk, int variant) {
    FitParams p;
    const double w = pk.width;
    if (pk.index.size() == 1) {
        const double c = data[pk.index[0]].omega_d;
        // PT-broken-like seed: both eigenvalues share Re at the single peak.
        p.omega1 = c;
        p.omega2 = c;
        p.gamma1 = 0.7 * w;
        p.gamma2 = 1.3 * w;
        p.g = 0.1 * w;
    } else {
        const double lo = data[pk.index[0]].omega_d;
        const double hi = data[pk.index[1]].omega_d;
        const double half_split = 0.5 * (hi - lo);
        p.gamma1 = 0.9 * w;
        p.gamma2 = 1.1 * w;
        const double c = 0.25 * (p.gamma2 - p.gamma1);
        if (variant == 0) {
            p.omega1 = p.omega2 = 0.5 * (lo + hi);
            p.g = std::sqrt(half_split * half_split + c * c);
        } else {
            // Weakly hybridized: mode 1 on one peak, mode 2 on the other.
            p.omega1 = variant == 1 ? lo : hi;
            p.omega2 = variant == 1 ? hi : lo;
            p.g = 0.3 * half_split;
        }
    }
    p = with_amplitudes(p, data);
    FitResult out;
    out.params = p;
    out.eigen = model::eigenvalues(p.hamiltonian());
    out.residual = rms_residual(p, data);
    out.status = FitStatus::NoConvergence;
    out.seed_name = variant == 0 ? "peak" : (variant == 1 ? "peak-low" : "peak-high");
    return out;
}

}  // namespace

const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::Converged: return "converged";
        case FitStatus::NoConvergence: return "no_convergence";
        case FitStatus::NonPhysical: return "non_physical";
    }
    return "unknown";
}

void SweepConfig::validate() const {
    require(std::isfinite(f) && f > 0.0, "drive amplitude must be positive");
    require(std::isfinite(varphi), "circuit phase must be finite");
    require(std::isfinite(feedthrough.real()) && std::isfinite(feedthrough.imag()),
            "feedthrough must be finite");
    require(noise_std >= 0.0, "noise level must be non-negative");
    require(settle_factor >= 10.0, "simulated sweeps settle at least 10 / min(gamma) per point");
    require(plant_step > 0.0 && plant_step <= plant::kMaxEnvelopeStep, "envelope step out of range");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    require(n >= 1, "grid needs at least one point");
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    out.back() = hi;
    return out;
}

std::vector<double> default_grid(const model::EffectiveHamiltonian& h, std::size_t points) {
    const double lo = h.omega1 - 6.0 * h.gamma2;
    const double hi = h.omega1 + 6.0 * h.gamma2 + std::abs(h.omega2 - h.omega1);
    return linspace(lo, hi, points);
}

std::vector<SweepPoint> sweep(const model::EffectiveHamiltonian& h, std::span<const double> grid,
                              const SweepConfig& config) {
    config.validate();
    if (grid.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty sweep grid");
    }
    const Complex circuit = std::polar(1.0, config.varphi);
    std::vector<Complex> response(grid.size());

    if (config.source == SweepSource::Analytic) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            response[j] = config.f * model::susceptibility(h, grid[j]);
        }
    } else {
        for (std::size_t j = 1; j < grid.size(); ++j) {
            require(grid[j] > grid[j - 1], "simulated sweeps need an ascending grid");
        }
        const double settle = config.settle_factor / std::min(h.gamma1, h.gamma2);
        const auto steps = static_cast<std::size_t>(std::ceil(settle / config.plant_step));
        plant::EnvelopeState s{};
        for (std::size_t j = 0; j < grid.size(); ++j) {
            for (std::size_t k = 0; k < steps; ++k) {
                s = plant::envelope_step(s, h, grid[j], config.f, config.plant_step);
            }
            response[j] = s.a0;
        }
    }

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<SweepPoint> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        Complex v = response[j] * circuit + config.feedthrough;
        if (config.noise_std > 0.0) {
            const double re = normal(rng);
            const double im = normal(rng);
            v += config.noise_std * Complex(re, im);
        }
        out[j] = {grid[j], v.real(), -v.imag()};
    }
    return out;
}

double noise_for_snr(const model::EffectiveHamiltonian& h, std::span<const double> grid,
                     const SweepConfig& config, double snr_db) {
    double peak = 0.0;
    for (double w : grid) {
        peak = std::max(peak, std::abs(config.f * model::susceptibility(h, w)));
    }
    return peak * std::pow(10.0, -snr_db / 20.0);
}

Complex model_response(const FitParams& p, double omega_d) {
    return p.f * model::susceptibility(p.hamiltonian(), omega_d) * std::polar(1.0, p.varphi) + p.b;
}

double rms_residual(const FitParams& p, std::span<const SweepPoint> data) {
    if (data.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& d : data) {
        const Complex fv = model_response(p, d.omega_d);
        const double a = d.in_phase - fv.real();
        const double b = d.quadrature + fv.imag();
        sum += a * a + b * b;
    }
    return std::sqrt(sum / static_cast<double>(2 * data.size()));
}

FitResult initial_guess(std::span<const SweepPoint> data) {
    check_data(data);
    return peak_seed(data, pick_peaks(data), 0);
}

FitResult fit(std::span<const SweepPoint> data, const FitParams& seed, const FitOptions& options) {
    check_data(data);
    Packing pk;
    pk.omega_ref = grid_reference(data);
    const double gscale = std::max({std::abs(seed.gamma1), std::abs(seed.gamma2), 1e-12});
    double zscale = 0.0;
    for (const auto& d : data) {
        zscale = std::max(zscale, std::abs(d.value()));
    }
    zscale = std::max(zscale, 1e-300);
    pk.scale << gscale, gscale, gscale, gscale, gscale, std::max(std::abs(seed.f), 1e-300), 1.0,
        zscale, zscale;

    std::vector<double> w(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        w[j] = data[j].omega_d - pk.omega_ref;
    }
    const auto m = static_cast<Eigen::Index>(2 * data.size());
    Vec r(m), rp(m), rm(m), rn(m);
    Eigen::MatrixXd jac(m, static_cast<Eigen::Index>(kParams));

    PVec p = pk.pack(seed);
    residual_vector(p, w, data, r);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    FitStatus status = FitStatus::NoConvergence;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        for (std::size_t i = 0; i < kParams; ++i) {
            const double h = options.jacobian_step * std::max(std::abs(p[i]), pk.scale[i]);
            PVec q = p;
            q[i] = p[i] + h;
            residual_vector(q, w, data, rp);
            q[i] = p[i] - h;
            residual_vector(q, w, data, rm);
            jac.col(static_cast<Eigen::Index>(i)) = (rp - rm) / (2.0 * h);
        }
        const PMat a = jac.transpose() * jac;
        const PVec grad = jac.transpose() * r;

        bool accepted = false;
        PVec delta = PVec::Zero();
        while (mu < 1e16) {
            PMat damped = a;
            for (std::size_t i = 0; i < kParams; ++i) {
                damped(i, i) += mu * std::max(a(i, i), 1e-300);
            }
            delta = damped.ldlt().solve(-grad);
            if (!delta.allFinite()) {
                mu *= 4.0;
                continue;
            }
            const PVec trial = p + delta;
            residual_vector(trial, w, data, rn);
            const double trial_cost = rn.squaredNorm();
            if (std::isfinite(trial_cost) && trial_cost < cost) {
                p = trial;
                r = rn;
                cost = trial_cost;
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if (!accepted) {
            // No descent direction left at round-off level.
            status = FitStatus::Converged;
            ++it;
            break;
        }
        double rel = 0.0;
        for (std::size_t i = 0; i < kParams; ++i) {
            rel = std::max(rel, std::abs(delta[i]) / std::max(std::abs(p[i]), pk.scale[i]));
        }
        if (rel < options.step_tolerance) {
            status = FitStatus::Converged;
            ++it;
            break;
        }
    }
    return finish(pk.unpack(p), data, status, it, "");
}

FitResult fit_sweep(std::span<const SweepPoint> data, const FitOptions& options) {
    check_data(data);
    std::vector<std::pair<std::string, FitParams>> seeds;
    if (auto s = rational_seed(data)) {
        seeds.emplace_back("rational", *s);
    }
    const Peaks pk = pick_peaks(data);
    const int variants = pk.index.size() == 1 ? 1 : 3;
    for (int v = 0; v < variants; ++v) {
        const FitResult s = peak_seed(data, pk, v);
        seeds.emplace_back(s.seed_name, s.params);
    }

    std::optional<FitResult> best;
    for (const auto& [name, seed] : seeds) {
        FitResult r = fit(data, seed, options);
        r.seed_name = name;
        const auto rank = [](const FitResult& x) { return x.status == FitStatus::Converged ? 0 : 1; };
        if (!best || rank(r) < rank(*best) || (rank(r) == rank(*best) && r.residual < best->residual)) {
            best = r;
        }
    }
    return *best;
}

std::vector<FitResult> monte_carlo_fits(const model::EffectiveHamiltonian& h,
                                        std::span<const double> grid, const SweepConfig& config,
                                        std::size_t trials, exec::Policy policy) {
    std::vector<FitResult> out(trials);
    exec::for_each_index(trials, policy, [&](std::size_t i) {
        SweepConfig c = config;
        c.seed = config.seed + i;
        out[i] = fit_sweep(sweep(h, grid, c));
    });
    return out;
}

SurfaceGrid build_surfaces(const model::Device& device, std::span<const double> v_grid,
                           std::span<const double> delta_hz_grid, const SurfaceOptions& options,
                           exec::Policy policy) {
    SurfaceGrid out;
    out.v_p.assign(v_grid.begin(), v_grid.end());
    out.delta_p_hz.assign(delta_hz_grid.begin(), delta_hz_grid.end());
    const std::size_t nd = delta_hz_grid.size();
    out.cells.resize(v_grid.size() * nd);

    exec::for_each_index(out.cells.size(), policy, [&](std::size_t idx) {
        SurfaceCell& cell = out.cells[idx];
        cell.v_p = v_grid[idx / nd];
        cell.delta_p_hz = delta_hz_grid[idx % nd];
        const auto h = model::build_hamiltonian(device.modes,
                                                device.pump(cell.v_p, hz_to_rad(cell.delta_p_hz)));
        if (options.analytic) {
            cell.eigen = model::eigenvalues(h);
            return;
        }
        try {
            const auto grid = default_grid(h, options.points);
            SweepConfig c = options.sweep;
            c.seed = options.sweep.seed + idx;
            if (options.snr_db > 0.0) {
                c.noise_std = noise_for_snr(h, grid, c, options.snr_db);
            }
            const FitResult r = fit_sweep(sweep(h, grid, c));
            cell.residual = r.residual;
            if (r.status == FitStatus::Converged) {
                cell.eigen = r.eigen;
            } else {
                cell.failure = to_string(r.status);
            }
        } catch (const Error& e) {
            cell.failure = e.what();
        }
    });
    return out;
}

BranchPoint estimate_branch_point(const SurfaceGrid& grid) {
    BranchPoint best;
    best.splitting = std::numeric_limits<double>::infinity();
    for (const auto& c : grid.cells) {
        if (!c.eigen) {
            continue;
        }
        const double s = std::abs(c.eigen->plus - c.eigen->minus);
        if (s < best.splitting) {
            best = {c.v_p, c.delta_p_hz, s};
        }
    }
    if (!std::isfinite(best.splitting)) {
        throw Error(ErrorKind::DegenerateSweep, "no valid surface cells");
    }
    return best;
}

}  // namespace eptrack::spectra
