#pragma once

#include "cgdft/duality.hpp"
#include "cgdft/sampling.hpp"

#include <map>
#include <string>
#include <vector>

namespace cgdft {

/// Least-squares fit of log y = exponent * log x + log prefactor.
struct PowerFit {
    Scalar exponent = 0;
    Scalar prefactor = 0;
    Scalar r2 = 0;
    int points = 0;
};

/// Non-positive y values are skipped; fewer than two usable points leave exponent NaN.
PowerFit power_fit(const std::vector<Scalar>& x, const std::vector<Scalar>& y);

struct ScaleSweepRow {
    int n = 0;
    Scalar D_n = 0;
    Scalar F_n = 0;
    /// ||rho - embed(pi_n rho)||_p, p in {1, 2}.
    std::map<int, Scalar> dist_p;
    /// ||Lambda pi_n rho - rho||_p.
    std::map<int, Scalar> lambda_dist_p;
    /// ||Lambda pi_n rho - embed(pi_n rho)||_1.
    Scalar lambda_to_projection = 0;
    /// sup norm of the gauge-fixed representing potential.
    Scalar v_sup = 0;
    Scalar residual = 0;
    int iterations = 0;
    bool converged = false;
    Potential potential;
    FineDensity lambda_density;
};

struct ScaleSweep {
    std::vector<ScaleSweepRow> rows;
    /// Inversion at the deepest level (one grid point per cell), standing in for F[rho].
    ScaleSweepRow grid_row;
    /// Largest F_n - F_{n+1} over consecutive converged rows (0 if monotone).
    Scalar monotonicity_violation = 0;
    /// min_n (F_grid - F_n).
    Scalar deficit_floor = 0;
    /// Fit of dist_1 against D_n.
    PowerFit dist_fit;
    bool all_converged = false;
};

struct SweepOptions {
    InversionOptions inversion;
    /// Also invert at the deepest level.
    bool include_grid = true;
};

/// F^n[pi_n rho] level by level, each inversion warm-started from the previous one.
ScaleSweep scale_sweep(const Engine& engine, const FineDensity& rho, const std::vector<int>& levels,
                       const SweepOptions& opts = {});

/// Same sweep with pi_n rho replaced by pi_n rho + noise, where the noise is a
/// random sum-zero cell vector of L1 size `scale * D_n` (shrunk if needed to
/// keep every cell above half its value). F_n must still approach F_grid.
ScaleSweep perturbed_sweep(const Engine& engine, const FineDensity& rho, const std::vector<int>& levels, Scalar scale,
                           Rng& rng, const SweepOptions& opts = {});

/// Rows of F[embed(Lambda pi_n rho)] at the deepest level, one per sweep row;
/// should equal F_n within twice the inversion tolerance.
std::vector<Scalar> lambda_consistency(const Engine& engine, const ScaleSweep& sweep,
                                       const InversionOptions& opts = {});

enum class ProbeKind { representable, blowup, inconclusive };

std::string to_string(ProbeKind kind);

struct ProbeThresholds {
    /// Relative change of v_sup over the last two levels counted as stable.
    Scalar stable_change = 0.05;
    /// Growth of v_sup over the last three levels counted as blow-up.
    Scalar blowup_growth = 2.0;
    Scalar v_cap = 1e4;
    /// Interior window [lo, hi] (fractions of the box) for the cell-wise potential comparison.
    Scalar window_lo = 0.25;
    Scalar window_hi = 0.75;
};

struct ProbeVerdict {
    ProbeKind kind = ProbeKind::inconclusive;
    ScaleSweep sweep;
    std::vector<Scalar> v_sup;
    /// Windowed sup distance between consecutive levels' potentials (one fewer than levels).
    std::vector<Scalar> window_change;
    /// Windowed sup distance to a reference potential when one is supplied.
    std::vector<Scalar> reference_error;
    std::map<std::string, PowerFit> fitted_rates;
    std::string reason;
};

/// Representable if v_sup stabilizes below the cap, blow-up if it keeps
/// growing by the configured factor across the last three levels. The
/// optional reference (a fine-grid potential, gauge irrelevant) adds a
/// per-level error column.
ProbeVerdict representability_probe(const Engine& engine, const FineDensity& rho, const std::vector<int>& levels,
                                    const ProbeThresholds& thresholds = {}, const Vector* reference = nullptr,
                                    const SweepOptions& opts = {});

struct QuasiContinuityRow {
    Scalar radius = 0;
    /// max ||v[rho'] rho' - v[rho] rho||_1 over samples.
    Scalar product_distance = 0;
    /// max ||v[rho'] - v[rho]||_inf over cells in the interior window.
    Scalar window_distance = 0;
    int evaluated = 0;
    int failures = 0;
};

/// For each radius r, rho + r delta over K random directions delta with ||delta||_1 = 1 (shared by all radii).
std::vector<QuasiContinuityRow> quasi_continuity_probe(const Engine& engine, const CoarseDensity& rho,
                                                       const std::vector<Scalar>& radii, int samples, Rng& rng,
                                                       const ProbeThresholds& window = {},
                                                       const InversionOptions& opts = {});

enum class ModulusSampling {
    /// Normalized rho' = rho + r delta, delta sum-zero.
    both_halves,
    /// rho' = rho - eta with 0 <= eta <= rho, ||eta||_1 = r (mass N - r).
    lower_half
};

/// F-hat on a sub-normalized level-n density: (m / N) F^n[N rho / m].
Scalar homogeneous_functional(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts = {});

struct ModulusRow {
    Scalar radius = 0;
    Scalar modulus = 0;
    /// modulus / radius.
    Scalar slope = 0;
    int evaluated = 0;
    int failures = 0;
};

std::vector<ModulusRow> continuity_modulus(const Engine& engine, const CoarseDensity& rho,
                                           const std::vector<Scalar>& radii, int samples, Rng& rng,
                                           ModulusSampling sampling = ModulusSampling::both_halves,
                                           const InversionOptions& opts = {});

enum class BumpShape {
    /// exp(-1 / (1 - t^2)): infinitely smooth.
    smooth,
    /// cos^2 bump: one continuous derivative.
    cosine,
    /// Half sine: continuous with kinks at the ends.
    half_sine,
    /// Indicator of the support.
    box
};

std::string to_string(BumpShape shape);
BumpShape bump_shape_from_string(const std::string& name);

struct OscillationOptions {
    BumpShape shape = BumpShape::smooth;
    /// Support of eta as fractions of the box.
    Scalar support_lo = 0.25;
    Scalar support_hi = 0.75;
};

/// w_l(x) = eta(x) sin(x / l), scaled so max_i |w_l(x_i)| = 1.
Vector oscillating_potential(const Grid& grid, Scalar ell, const OscillationOptions& opts = {});

struct OscillationRow {
    Scalar ell = 0;
    /// <w_l, Lambda rho0> on the fine grid.
    Scalar pairing = 0;
    /// E[v[rho0] + M w_l].
    Scalar energy = 0;
    /// ||pi_n(rho_{v + M w_l}) - rho0||_1.
    Scalar drift = 0;
    /// ||M w_l||_inf.
    Scalar amplitude = 0;
};

struct OscillationTable {
    std::vector<OscillationRow> rows;
    PowerFit pairing_fit;
    Scalar F = 0;
    int level = 0;
};

/// Appendix-style blow-up table: inverts rho0 once, then for each l pairs
/// w_l with the minimizer and solves the ground state of v[rho0] + M w_l.
/// Throws InvalidArgument for l < 4h.
OscillationTable oscillation_blowup(const Engine& engine, const CoarseDensity& rho0, Scalar amplitude,
                                    const std::vector<Scalar>& ell_schedule, const OscillationOptions& osc = {},
                                    const InversionOptions& opts = {});

/// Fine density proportional to sin^2(pi x / L) ((x - x0)^2 + width^2): a
/// quadratic node at x0 regularized at scale `width`.
FineDensity node_density(const Grid& grid, int particles, Scalar x0, Scalar width);

}  // namespace cgdft
