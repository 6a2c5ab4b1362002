#include "cgdft/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cgdft {

namespace {

constexpr Scalar kPi = std::numbers::pi;

ScaleSweepRow sweep_row(const Engine& engine, const FineDensity& rho, const CoarseDensity& target, int level,
                        const InversionOptions& opts)
{
    const ScaleHierarchy hierarchy(rho.grid);
    const Scalar h = rho.grid.spacing();
    ScaleSweepRow row;
    row.n = level;
    row.D_n = hierarchy.cell_width(level);
    const InversionResult r = lieb_maximize(engine, target, opts);
    row.F_n = r.F_value;
    row.residual = r.residual;
    row.iterations = r.iterations;
    row.converged = r.converged;
    row.potential = r.potential;
    row.lambda_density = r.lambda_density;
    row.v_sup = r.potential.sup_norm();
    const Vector projected = embed_values(rho.grid, target.values, level);
    for (int p : {1, 2}) {
        row.dist_p[p] = lp_norm(Vector(rho.values - projected), h, p);
        row.lambda_dist_p[p] = lp_norm(Vector(r.lambda_density.values - rho.values), h, p);
    }
    row.lambda_to_projection = lp_norm(Vector(r.lambda_density.values - projected), h, 1);
    return row;
}

void summarize(ScaleSweep& sweep, bool with_grid)
{
    sweep.all_converged = std::all_of(sweep.rows.begin(), sweep.rows.end(), [](const auto& r) { return r.converged; });
    if (with_grid)
        sweep.all_converged = sweep.all_converged && sweep.grid_row.converged;
    for (std::size_t i = 1; i < sweep.rows.size(); ++i)
        if (sweep.rows[i - 1].converged && sweep.rows[i].converged)
            sweep.monotonicity_violation =
                std::max(sweep.monotonicity_violation, sweep.rows[i - 1].F_n - sweep.rows[i].F_n);
    if (with_grid) {
        sweep.deficit_floor = kInfinity;
        for (const auto& r : sweep.rows)
            sweep.deficit_floor = std::min(sweep.deficit_floor, sweep.grid_row.F_n - r.F_n);
    }
    std::vector<Scalar> d, dist;
    for (const auto& r : sweep.rows) {
        d.push_back(r.D_n);
        dist.push_back(r.dist_p.at(1));
    }
    sweep.dist_fit = power_fit(d, dist);
}

std::vector<int> sorted_levels(const Grid& grid, std::vector<int> levels)
{
    const ScaleHierarchy hierarchy(grid);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (int n : levels)
        hierarchy.require_level(n);
    return levels;
}

std::vector<bool> window_cells(const CoarseDensity& rho, const ProbeThresholds& window)
{
    const ScaleHierarchy hierarchy(rho.grid);
    std::vector<bool> inside(rho.values.size());
    const Scalar span = rho.grid.length();
    for (int c = 0; c < static_cast<int>(inside.size()); ++c) {
        const Scalar x = hierarchy.cell_center(c, rho.level) / span;
        inside[c] = x >= window.window_lo && x <= window.window_hi;
    }
    return inside;
}

Scalar window_sup(const Vector& a, const Vector& b, const std::vector<bool>& inside)
{
    Scalar out = 0;
    for (int c = 0; c < a.size(); ++c)
        if (inside[c])
            out = std::max(out, std::abs(a[c] - b[c]));
    return out;
}

/// Random interior rho + r delta with ||delta||_1 = 1, or nothing after 50 draws.
std::optional<CoarseDensity> sphere_sample(const CoarseDensity& rho, Scalar radius, Rng& rng)
{
    for (int attempt = 0; attempt < 50; ++attempt) {
        const Vector delta = random_direction(rho.grid, rho.level, rng);
        CoarseDensity candidate{rho.grid, rho.level, rho.values + radius * delta, rho.particles};
        if (candidate.is_interior())
            return candidate;
    }
    return std::nullopt;
}

}  // namespace

PowerFit power_fit(const std::vector<Scalar>& x, const std::vector<Scalar>& y)
{
    if (x.size() != y.size())
        throw InvalidArgument("power_fit: size mismatch");
    std::vector<Scalar> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0 && y[i] > 0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    PowerFit fit;
    fit.points = static_cast<int>(lx.size());
    if (fit.points < 2) {
        fit.exponent = fit.prefactor = fit.r2 = std::nan("");
        return fit;
    }
    const Scalar n = fit.points;
    Scalar mx = 0, my = 0;
    for (int i = 0; i < fit.points; ++i) {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    Scalar sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < fit.points; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    fit.exponent = sxy / sxx;
    fit.prefactor = std::exp(my - fit.exponent * mx);
    fit.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1;
    return fit;
}

ScaleSweep scale_sweep(const Engine& engine, const FineDensity& rho, const std::vector<int>& levels,
                       const SweepOptions& opts)
{
    if (!rho.is_positive())
        throw NotInteriorDensity("scale_sweep: density must be strictly positive");
    ScaleSweep sweep;
    InversionOptions inv = opts.inversion;
    for (int n : sorted_levels(rho.grid, levels)) {
        sweep.rows.push_back(sweep_row(engine, rho, project(rho, n), n, inv));
        inv.initial = sweep.rows.back().potential;
    }
    if (opts.include_grid) {
        const int deepest = ScaleHierarchy(rho.grid).deepest_level();
        sweep.grid_row = sweep_row(engine, rho, project(rho, deepest), deepest, inv);
    }
    summarize(sweep, opts.include_grid);
    return sweep;
}

ScaleSweep perturbed_sweep(const Engine& engine, const FineDensity& rho, const std::vector<int>& levels, Scalar scale,
                           Rng& rng, const SweepOptions& opts)
{
    if (!rho.is_positive())
        throw NotInteriorDensity("perturbed_sweep: density must be strictly positive");
    const ScaleHierarchy hierarchy(rho.grid);
    ScaleSweep sweep;
    InversionOptions inv = opts.inversion;
    for (int n : sorted_levels(rho.grid, levels)) {
        const CoarseDensity clean = project(rho, n);
        CoarseDensity noisy = clean;
        if (clean.values.size() > 1) {
            const Vector delta = random_direction(rho.grid, n, rng);
            Scalar size = scale * hierarchy.cell_width(n);
            const Scalar limit = 0.5 * clean.values.minCoeff() / delta.cwiseAbs().maxCoeff();
            noisy.values += std::min(size, limit) * delta;
        }
        sweep.rows.push_back(sweep_row(engine, rho, noisy, n, inv));
        inv.initial = sweep.rows.back().potential;
    }
    if (opts.include_grid) {
        const int deepest = hierarchy.deepest_level();
        sweep.grid_row = sweep_row(engine, rho, project(rho, deepest), deepest, inv);
    }
    summarize(sweep, opts.include_grid);
    return sweep;
}

std::vector<Scalar> lambda_consistency(const Engine& engine, const ScaleSweep& sweep, const InversionOptions& opts)
{
    std::vector<Scalar> out;
    for (const auto& row : sweep.rows) {
        const FineDensity& lambda = row.lambda_density;
        const int deepest = ScaleHierarchy(lambda.grid).deepest_level();
        InversionOptions warm = opts;
        warm.initial = row.potential;
        const InversionResult r = lieb_maximize(engine, project(lambda, deepest), warm);
        out.push_back(r.converged ? r.F_value : std::nan(""));
    }
    return out;
}

std::string to_string(ProbeKind kind)
{
    switch (kind) {
    case ProbeKind::representable:
        return "representable";
    case ProbeKind::blowup:
        return "blowup";
    case ProbeKind::inconclusive:
        return "inconclusive";
    }
    return "?";
}

ProbeVerdict representability_probe(const Engine& engine, const FineDensity& rho, const std::vector<int>& levels,
                                    const ProbeThresholds& thresholds, const Vector* reference,
                                    const SweepOptions& opts)
{
    SweepOptions sweep_opts = opts;
    sweep_opts.include_grid = false;
    ProbeVerdict verdict;
    verdict.sweep = scale_sweep(engine, rho, levels, sweep_opts);
    const auto& rows = verdict.sweep.rows;

    std::vector<Scalar> d;
    for (const auto& r : rows) {
        verdict.v_sup.push_back(r.v_sup);
        d.push_back(r.D_n);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const Potential coarse = refine(rows[i - 1].potential, rows[i].n);
        const CoarseDensity shape{rho.grid, rows[i].n, Vector::Zero(coarse.values.size()), rho.particles};
        verdict.window_change.push_back(window_sup(coarse.values, rows[i].potential.values, window_cells(shape, thresholds)));
    }
    if (reference) {
        for (const auto& r : rows) {
            const Vector target = project_values(rho.grid, *reference, r.n);
            const CoarseDensity shape{rho.grid, r.n, Vector::Zero(target.size()), rho.particles};
            const auto inside = window_cells(shape, thresholds);
            Scalar offset = 0;
            int count = 0;
            for (int c = 0; c < target.size(); ++c)
                if (inside[c]) {
                    offset += r.potential.values[c] - target[c];
                    ++count;
                }
            offset = count ? offset / count : 0;
            verdict.reference_error.push_back(window_sup(r.potential.values, target.array() + offset, inside));
        }
    }
    verdict.fitted_rates["dist_1"] = verdict.sweep.dist_fit;
    verdict.fitted_rates["v_sup"] = power_fit(d, verdict.v_sup);

    const auto& v = verdict.v_sup;
    const std::size_t k = v.size();
    if (k >= 2 && verdict.sweep.all_converged && std::abs(v[k - 1] - v[k - 2]) <= thresholds.stable_change * v[k - 1] &&
        v[k - 1] <= thresholds.v_cap) {
        verdict.kind = ProbeKind::representable;
        verdict.reason = "v_sup stable over the last two levels and below the cap";
    } else if (k >= 3 && v[k - 3] < v[k - 2] && v[k - 2] < v[k - 1] && v[k - 1] >= thresholds.blowup_growth * v[k - 3]) {
        verdict.kind = ProbeKind::blowup;
        verdict.reason = "v_sup grows monotonically by at least the blow-up factor over the last three levels";
    } else {
        verdict.kind = ProbeKind::inconclusive;
        verdict.reason = "neither stabilization nor sustained growth";
    }
    return verdict;
}

std::vector<QuasiContinuityRow> quasi_continuity_probe(const Engine& engine, const CoarseDensity& rho,
                                                       const std::vector<Scalar>& radii, int samples, Rng& rng,
                                                       const ProbeThresholds& window, const InversionOptions& opts)
{
    const InversionResult base = lieb_maximize(engine, rho, opts);
    if (!base.converged)
        throw NonConvergence("quasi_continuity_probe: base density did not invert");
    InversionOptions warm = opts;
    warm.initial = base.potential;
    const auto inside = window_cells(rho, window);
    const Scalar width = rho.cell_width();
    const Vector product = base.potential.values.cwiseProduct(rho.values);

    // The same directions are reused at every radius so rows differ only by the radius.
    // A direction admissible at the largest radius stays admissible at smaller ones.
    const Scalar r_max = radii.empty() ? 0 : *std::max_element(radii.begin(), radii.end());
    std::vector<Vector> directions;
    int missing = 0;
    for (int s = 0; s < samples; ++s) {
        if (const auto candidate = sphere_sample(rho, r_max, rng))
            directions.push_back((candidate->values - rho.values) / r_max);
        else
            ++missing;
    }

    std::vector<QuasiContinuityRow> rows;
    for (Scalar r : radii) {
        QuasiContinuityRow row;
        row.radius = r;
        row.failures = missing;
        for (const Vector& delta : directions) {
            const CoarseDensity candidate{rho.grid, rho.level, rho.values + r * delta, rho.particles};
            const InversionResult inv = lieb_maximize(engine, candidate, warm);
            if (!inv.converged) {
                ++row.failures;
                continue;
            }
            ++row.evaluated;
            const Vector moved = inv.potential.values.cwiseProduct(candidate.values);
            row.product_distance = std::max(row.product_distance, width * (moved - product).cwiseAbs().sum());
            row.window_distance = std::max(row.window_distance, window_sup(inv.potential.values, base.potential.values, inside));
        }
        rows.push_back(row);
    }
    return rows;
}

Scalar homogeneous_functional(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts)
{
    const Scalar mass = rho.mass();
    if (!(mass > 0))
        throw InvalidArgument("homogeneous_functional: density has no mass");
    const int n = rho.particles;
    const CoarseDensity scaled{rho.grid, rho.level, rho.values * (n / mass), n};
    const InversionResult r = lieb_maximize(engine, scaled, opts);
    if (!r.converged)
        throw NonConvergence("homogeneous_functional: inversion did not converge");
    return mass / n * r.F_value;
}

std::vector<ModulusRow> continuity_modulus(const Engine& engine, const CoarseDensity& rho,
                                           const std::vector<Scalar>& radii, int samples, Rng& rng,
                                           ModulusSampling sampling, const InversionOptions& opts)
{
    const InversionResult base = lieb_maximize(engine, rho, opts);
    if (!base.converged)
        throw NonConvergence("continuity_modulus: base density did not invert");
    InversionOptions warm = opts;
    warm.initial = base.potential;
    const Scalar width = rho.cell_width();
    std::uniform_real_distribution<Scalar> unit(0, 1);

    std::vector<ModulusRow> rows;
    for (Scalar r : radii) {
        ModulusRow row;
        row.radius = r;
        if (r == 0) {
            row.evaluated = 1;
            rows.push_back(row);
            continue;
        }
        for (int s = 0; s < samples; ++s) {
            try {
                Scalar value = 0;
                if (sampling == ModulusSampling::both_halves) {
                    const auto candidate = sphere_sample(rho, r, rng);
                    if (!candidate) {
                        ++row.failures;
                        continue;
                    }
                    const InversionResult inv = lieb_maximize(engine, *candidate, warm);
                    if (!inv.converged) {
                        ++row.failures;
                        continue;
                    }
                    value = inv.F_value;
                } else {
                    Vector eta(rho.values.size());
                    for (int c = 0; c < eta.size(); ++c)
                        eta[c] = unit(rng);
                    eta *= r / (width * eta.sum());
                    if ((eta.array() >= rho.values.array()).any()) {
                        ++row.failures;
                        continue;
                    }
                    value = homogeneous_functional(engine, CoarseDensity{rho.grid, rho.level, rho.values - eta, rho.particles}, warm);
                }
                row.modulus = std::max(row.modulus, std::abs(value - base.F_value));
                ++row.evaluated;
            } catch (const NonConvergence&) {
                ++row.failures;
            }
        }
        row.slope = row.modulus / r;
        rows.push_back(row);
    }
    return rows;
}

std::string to_string(BumpShape shape)
{
    switch (shape) {
    case BumpShape::smooth:
        return "smooth";
    case BumpShape::cosine:
        return "cosine";
    case BumpShape::half_sine:
        return "half_sine";
    case BumpShape::box:
        return "box";
    }
    return "?";
}

BumpShape bump_shape_from_string(const std::string& name)
{
    for (BumpShape s : {BumpShape::smooth, BumpShape::cosine, BumpShape::half_sine, BumpShape::box})
        if (to_string(s) == name)
            return s;
    throw InvalidArgument("unknown bump shape '" + name + "'");
}

Vector oscillating_potential(const Grid& grid, Scalar ell, const OscillationOptions& opts)
{
    if (!(ell >= 4 * grid.spacing() * (1 - 1e-12)))
        throw InvalidArgument("oscillating_potential: wavelength below grid resolution (need l >= 4h)");
    if (!(opts.support_lo < opts.support_hi) || opts.support_lo < 0 || opts.support_hi > 1)
        throw InvalidArgument("oscillating_potential: bump support must satisfy 0 <= lo < hi <= 1");
    const Scalar a = opts.support_lo * grid.length();
    const Scalar b = opts.support_hi * grid.length();
    Vector w(grid.points());
    for (int i = 0; i < grid.points(); ++i) {
        const Scalar x = grid.coordinate(i);
        const Scalar t = (2 * x - (a + b)) / (b - a);
        Scalar eta = 0;
        if (std::abs(t) < 1) {
            switch (opts.shape) {
            case BumpShape::smooth:
                eta = std::exp(1 - 1 / (1 - t * t));
                break;
            case BumpShape::cosine:
                eta = std::pow(std::cos(kPi * t / 2), 2);
                break;
            case BumpShape::half_sine:
                eta = std::cos(kPi * t / 2);
                break;
            case BumpShape::box:
                eta = 1;
                break;
            }
        }
        w[i] = eta * std::sin(x / ell);
    }
    const Scalar peak = w.cwiseAbs().maxCoeff();
    if (!(peak > 0))
        throw InvalidArgument("oscillating_potential: bump support contains no grid point");
    return w / peak;
}

OscillationTable oscillation_blowup(const Engine& engine, const CoarseDensity& rho0, Scalar amplitude,
                                    const std::vector<Scalar>& ell_schedule, const OscillationOptions& osc,
                                    const InversionOptions& opts)
{
    const Grid& grid = rho0.grid;
    for (Scalar ell : ell_schedule)
        if (!(ell >= 4 * grid.spacing() * (1 - 1e-12)))
            throw InvalidArgument("oscillation_blowup: wavelength below grid resolution (need l >= 4h)");
    const InversionResult base = lieb_maximize(engine, rho0, opts);
    if (!base.converged)
        throw NonConvergence("oscillation_blowup: base density did not invert");

    OscillationTable table;
    table.F = base.F_value;
    table.level = rho0.level;
    const Vector v = fine_values(base.potential);
    const Scalar h = grid.spacing();
    std::vector<Scalar> ells, pairings;
    for (Scalar ell : ell_schedule) {
        const Vector w = oscillating_potential(grid, ell, osc);
        OscillationRow row;
        row.ell = ell;
        row.pairing = h * w.dot(base.lambda_density.values);
        row.amplitude = amplitude * w.cwiseAbs().maxCoeff();

        const GroundSpace g = engine.ground_space(v + amplitude * w);
        row.energy = g.energy;
        Vector weights = Vector::Ones(1);
        if (g.degeneracy > 1) {
            Matrix columns(rho0.values.size(), g.degeneracy);
            for (int i = 0; i < g.degeneracy; ++i)
                columns.col(i) = project_values(grid, engine.density_values(g.basis.col(i)), rho0.level);
            weights = simplex_least_squares(columns, rho0.values);
        }
        const FineDensity rho = engine.density_of(EnsembleState{weights, g.basis});
        row.drift = rho0.cell_width() * (project_values(grid, rho.values, rho0.level) - rho0.values).cwiseAbs().sum();
        table.rows.push_back(row);
        ells.push_back(ell);
        pairings.push_back(std::abs(row.pairing));
    }
    table.pairing_fit = power_fit(ells, pairings);
    return table;
}

FineDensity node_density(const Grid& grid, int particles, Scalar x0, Scalar width)
{
    Vector values(grid.points());
    for (int i = 0; i < grid.points(); ++i) {
        const Scalar x = grid.coordinate(i);
        const Scalar envelope = std::sin(kPi * x / grid.length());
        values[i] = envelope * envelope * ((x - x0) * (x - x0) + width * width);
    }
    return normalized_density(grid, std::move(values), particles);
}

}  // namespace cgdft
