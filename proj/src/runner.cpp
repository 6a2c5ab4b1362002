#include "cgdft/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

namespace cgdft {

namespace {

using Clock = std::chrono::steady_clock;

std::string sci(Scalar x)
{
    std::ostringstream s;
    s << std::scientific << std::setprecision(3) << x;
    return s.str();
}

/// Six significant digits for human-facing text.
std::string brief(Scalar x)
{
    std::ostringstream s;
    s << x;
    return s.str();
}

std::string count(int good, int total) { return std::to_string(good) + "/" + std::to_string(total); }

/// Independent stream per experiment section, so results do not depend on scheduling.
Rng stream_rng(std::uint64_t seed, int stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

FineDensity ground_density(const Engine& engine, const Vector& fine_potential)
{
    const GroundSpace g = engine.ground_space(fine_potential);
    const Vector weights = Vector::Constant(g.degeneracy, 1.0 / g.degeneracy);
    return engine.density_of(EnsembleState{weights, g.basis.leftCols(g.degeneracy)});
}

struct Prepared {
    FineDensity fine;
    CoarseDensity coarse;
    /// Generating potential of a forward density.
    std::optional<Potential> generator;
};

Prepared prepare_density(const Engine& engine, const DensityConfig& d, int level, Rng& rng)
{
    const Grid& grid = engine.spec().grid;
    const int particles = engine.spec().particles;
    Prepared p;
    switch (d.source) {
    case DensitySource::forward: {
        const Potential v0 = random_smooth_potential(grid, level, rng, d.amplitude, d.modes);
        p.fine = ground_density(engine, fine_values(v0));
        p.generator = v0;
        break;
    }
    case DensitySource::random:
        p.coarse = random_interior_density(grid, level, particles, rng, d.spread);
        p.fine = embed(p.coarse);
        return p;
    case DensitySource::values: {
        if (static_cast<int>(d.values.size()) != (1 << level))
            throw ConfigError("density_options.values: expected " + std::to_string(1 << level) +
                              " cell averages for level " + std::to_string(level));
        const Vector v = Eigen::Map<const Vector>(d.values.data(), static_cast<Eigen::Index>(d.values.size()));
        p.coarse = normalized_coarse_density(grid, level, v, particles);
        p.fine = embed(p.coarse);
        return p;
    }
    case DensitySource::smooth: p.fine = random_smooth_density(grid, particles, rng); break;
    case DensitySource::uniform: p.fine = uniform_density(grid, particles); break;
    case DensitySource::node: p.fine = node_density(grid, particles, d.node_x0, d.node_width * grid.spacing()); break;
    case DensitySource::box: p.fine = ground_density(engine, Vector::Zero(grid.points())); break;
    }
    p.coarse = project(p.fine, level);
    return p;
}

/// max_R |v_R - v0_R - c| for the best constant c.
Scalar error_modulo_constant(const Vector& v, const Vector& v0)
{
    const Vector d = v - v0;
    return (d.maxCoeff() - d.minCoeff()) / 2;
}

std::vector<Scalar> default_ells(const Grid& grid)
{
    std::vector<Scalar> ells;
    for (int k = 0; k <= 4; ++k)
        ells.push_back(4 * grid.spacing() * std::pow(2.0, k / 2.0));
    return ells;
}

SweepOptions sweep_options(const RunConfig& c)
{
    SweepOptions s;
    s.inversion = c.inversion();
    return s;
}

nlohmann::json fit_json(const PowerFit& f)
{
    return {{"exponent", json_scalar(f.exponent)},
            {"prefactor", json_scalar(f.prefactor)},
            {"r2", json_scalar(f.r2)},
            {"points", f.points}};
}

// ---------------------------------------------------------------- experiments

Outcome run_invert(const RunConfig& c)
{
    Outcome o;
    o.experiment = "invert";
    const Engine engine(c.model.spec());
    Rng rng = stream_rng(c.seed, 0);
    const Prepared p = prepare_density(engine, c.invert.density, c.invert.level, rng);
    const InversionResult r = lieb_maximize(engine, p.coarse, c.inversion());
    o.check("inversion converges", "Thm CG-HK-P", r.converged && r.residual <= c.tol["inversion"],
            "residual " + sci(r.residual) + " after " + std::to_string(r.iterations) + " iterations");
    o.check("gauge E[v] = 0", "Eq gauge-convention", r.gauge_error <= c.tol["gauge"], "|E[v]| " + sci(r.gauge_error));
    const Scalar ceiling = c.model.N * f_max(engine.spec(), r.level);
    o.check("0 <= F <= N f_max", "Eq F-bound", r.F_value >= 0 && r.F_value <= ceiling,
            "F " + sci(r.F_value) + ", N f_max " + sci(ceiling));
    if (p.generator) {
        const Scalar err = error_modulo_constant(r.potential.values, p.generator->values);
        const Scalar bound = c.tol["recovery"] * p.generator->sup_norm();
        o.check("generating potential recovered", "Thm CG-HK-P", err <= bound,
                "max error " + sci(err) + ", bound " + sci(bound));
    }
    nlohmann::json doc = to_json(r);
    doc["density_source"] = to_string(c.invert.density.source);
    if (p.generator)
        doc["generating_potential"] = json_vector(p.generator->values);
    doc["config"] = to_json(c);
    o.documents.emplace_back("inversion", std::move(doc));
    o.tables.emplace_back("inversion", inversion_table(r));
    o.tables.emplace_back("trace", trace_table(r));
    return o;
}

void sweep_checks(Outcome& o, const RunConfig& c, const ScaleSweep& s, const std::string& label)
{
    o.check(label + "all inversions converge", "Thm CG-HK-P", s.all_converged, "");
    o.check(label + "F_n non-decreasing", "Thm F-limit", s.monotonicity_violation <= c.tol["monotonicity"],
            "largest decrease " + sci(s.monotonicity_violation));
    if (!s.rows.empty() && s.grid_row.F_n > 0) {
        const Scalar gap = std::abs(s.grid_row.F_n - s.rows.back().F_n) / s.grid_row.F_n;
        o.check(label + "finest level within tolerance of the grid value", "Thm F-limit", gap <= c.tol["grid_gap"],
                "relative gap " + sci(gap));
    }
}

nlohmann::json sweep_json(const ScaleSweep& s)
{
    return {{"F_grid", json_scalar(s.grid_row.F_n)},
            {"monotonicity_violation", json_scalar(s.monotonicity_violation)},
            {"deficit_floor", json_scalar(s.deficit_floor)},
            {"dist_fit", fit_json(s.dist_fit)},
            {"all_converged", s.all_converged}};
}

Outcome run_sweep(const RunConfig& c)
{
    Outcome o;
    o.experiment = "sweep";
    const Engine engine(c.model.spec());
    Rng rng = stream_rng(c.seed, 0);
    const Prepared p = prepare_density(engine, c.sweep.density, engine.spec().grid.depth(), rng);
    const ScaleSweep s = c.sweep.perturb > 0
                             ? perturbed_sweep(engine, p.fine, c.levels, c.sweep.perturb, rng, sweep_options(c))
                             : scale_sweep(engine, p.fine, c.levels, sweep_options(c));
    sweep_checks(o, c, s, "");
    o.notes.push_back("dist_1 ~ D_n^" + brief(s.dist_fit.exponent));
    o.tables.emplace_back("sweep", sweep_table(s, c.tol["monotonicity"]));
    o.documents.emplace_back("sweep", sweep_json(s));
    return o;
}

nlohmann::json probe_json(const ProbeVerdict& v)
{
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& [name, fit] : v.fitted_rates)
        rates[name] = fit_json(fit);
    std::vector<nlohmann::json> sup;
    for (Scalar x : v.v_sup)
        sup.push_back(json_scalar(x));
    return {{"verdict", to_string(v.kind)}, {"reason", v.reason}, {"v_sup", sup}, {"fitted_rates", rates}};
}

Outcome run_probe(const RunConfig& c)
{
    Outcome o;
    o.experiment = "probe";
    const Engine engine(c.model.spec());
    Rng rng = stream_rng(c.seed, 0);
    const Prepared p = prepare_density(engine, c.probe.density, engine.spec().grid.depth(), rng);
    Vector reference;
    if (p.generator)
        reference = fine_values(*p.generator);
    const ProbeVerdict v = representability_probe(engine, p.fine, c.levels, c.probe.thresholds,
                                                  p.generator ? &reference : nullptr, sweep_options(c));
    o.notes.push_back("verdict: " + to_string(v.kind) + " (" + v.reason + ")");
    if (!c.probe.expect.empty())
        o.check("verdict is " + c.probe.expect, "Thm V-limit", to_string(v.kind) == c.probe.expect,
                "got " + to_string(v.kind));
    o.tables.emplace_back("probe", probe_table(v));
    o.documents.emplace_back("probe", probe_json(v));
    return o;
}

void quasi_part(Outcome& o, const RunConfig& c, int samples, Rng& rng)
{
    const Engine engine(c.model.spec());
    const Prepared p = prepare_density(engine, c.quasi.density, c.quasi.level, rng);
    const auto rows =
        quasi_continuity_probe(engine, p.coarse, c.quasi.radii, samples, rng, c.probe.thresholds, c.inversion());
    bool decreasing = true;
    int failures = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        failures += rows[i].failures;
        if (i > 0 && !(rows[i].product_distance < rows[i - 1].product_distance))
            decreasing = false;
    }
    o.check("product distance strictly decreasing", "Thm V-Cont-Thm", decreasing, "");
    const Scalar ratio = rows.back().product_distance / rows.front().product_distance;
    o.check("last/first product distance", "Thm V-Cont-Thm", ratio <= c.tol["quasi_ratio"], "ratio " + sci(ratio));
    o.check("all perturbed inversions converge", "Thm CG-HK-P", failures == 0,
            std::to_string(failures) + " failures");
    o.tables.emplace_back("quasi", quasi_table(rows));
}

Outcome run_quasi(const RunConfig& c)
{
    Outcome o;
    o.experiment = "quasi";
    Rng rng = stream_rng(c.seed, 0);
    quasi_part(o, c, c.quasi.samples, rng);
    return o;
}

void modulus_part(Outcome& o, const RunConfig& c, int samples, Rng& rng)
{
    const Engine engine(c.model.spec());
    const Prepared p = prepare_density(engine, c.modulus.density, c.modulus.level, rng);
    std::vector<Scalar> radii;
    for (Scalar r : c.modulus.radii)
        radii.push_back(r * c.model.N);
    const auto rows = continuity_modulus(engine, p.coarse, radii, samples, rng, c.modulus.sampling, c.inversion());
    bool decreasing = true;
    bool zero_ok = true;
    int failures = 0;
    const ModulusRow* previous = nullptr;
    const ModulusRow* smallest = nullptr;
    for (const auto& r : rows) {
        failures += r.failures;
        if (r.radius == 0) {
            zero_ok = zero_ok && r.modulus == 0;
            continue;
        }
        if (previous && r.radius < previous->radius && !(r.modulus < previous->modulus))
            decreasing = false;
        previous = &r;
        if (!smallest || r.radius < smallest->radius)
            smallest = &r;
    }
    o.check("modulus decreasing with the radius", "Thm Continuity-Thm", decreasing && zero_ok, "");
    if (smallest && smallest->radius <= 1e-6 * c.model.N * (1 + 1e-12))
        o.check("modulus at radius 1e-6 N", "Thm Continuity-Thm", smallest->modulus <= c.tol["modulus"],
                "modulus " + sci(smallest->modulus));
    o.check("all sampled inversions converge", "Thm CG-HK-P", failures == 0, std::to_string(failures) + " failures");
    o.tables.emplace_back("modulus", modulus_table(rows));
}

Outcome run_modulus(const RunConfig& c)
{
    Outcome o;
    o.experiment = "modulus";
    Rng rng = stream_rng(c.seed, 0);
    modulus_part(o, c, c.modulus.samples, rng);
    return o;
}

Outcome run_blowup(const RunConfig& c)
{
    Outcome o;
    o.experiment = "blowup";
    const Engine engine(c.model.spec());
    const Grid& grid = engine.spec().grid;
    Rng rng = stream_rng(c.seed, 0);

    const FineDensity node = node_density(grid, c.model.N, 0.5, c.blowup.node_width * grid.spacing());
    const ProbeVerdict v =
        representability_probe(engine, node, c.levels, c.probe.thresholds, nullptr, sweep_options(c));
    o.check("node density verdict is blowup", "Thm V-limit", v.kind == ProbeKind::blowup,
            "got " + to_string(v.kind) + " (" + v.reason + ")");
    const std::size_t k = v.v_sup.size();
    const Scalar growth = k >= 3 ? v.v_sup[k - 1] / v.v_sup[k - 3] : 0;
    o.check("v_sup growth over the last three levels", "Thm V-limit", growth >= c.tol["blowup_growth"],
            "growth " + sci(growth));

    const CoarseDensity rho0 = project(random_smooth_density(grid, c.model.N, rng), c.blowup.level);
    const std::vector<Scalar> ells = c.blowup.ells.empty() ? default_ells(grid) : c.blowup.ells;
    const OscillationTable t =
        oscillation_blowup(engine, rho0, c.blowup.amplitude, ells, c.blowup.oscillation, c.inversion());
    const Scalar exponent = t.pairing_fit.exponent;
    o.check("|<w_l, rho>| exponent in window", "Appendix C / Eq unexploitable",
            exponent >= c.blowup.exponent_lo && exponent <= c.blowup.exponent_hi,
            "exponent " + sci(exponent) + ", window [" + brief(c.blowup.exponent_lo) + ", " +
                brief(c.blowup.exponent_hi) + "]");
    const auto finest = std::min_element(t.rows.begin(), t.rows.end(),
                                         [](const OscillationRow& a, const OscillationRow& b) { return a.ell < b.ell; });
    const Scalar bound = c.tol["drift"] * c.model.N;
    o.check("ground-state drift at the smallest wavelength", "Appendix C / Eq unexploitable", finest->drift <= bound,
            "drift " + sci(finest->drift) + ", bound " + sci(bound));
    o.notes.push_back("node verdict: " + to_string(v.kind));
    o.notes.push_back("pairing ~ l^" + brief(exponent) + " (r2 " + brief(t.pairing_fit.r2) + ")");
    o.tables.emplace_back("blowup_probe", probe_table(v));
    o.tables.emplace_back("oscillation", oscillation_table(t));
    o.documents.emplace_back("blowup", nlohmann::json{{"node_probe", probe_json(v)},
                                                      {"pairing_fit", fit_json(t.pairing_fit)},
                                                      {"F", json_scalar(t.F)},
                                                      {"level", t.level},
                                                      {"shape", to_string(c.blowup.oscillation.shape)}});
    return o;
}

void ks_part(Outcome& o, const RunConfig& c, const Engine& engine, int level, int directions, Rng& rng)
{
    const Grid& grid = engine.spec().grid;
    const Prepared p = prepare_density(engine, c.ks.density, level, rng);
    const InversionOptions inv = c.inversion();
    KsReport r;
    try {
        r = ks_decompose(engine, p.coarse, inv);
    } catch (const NonConvergence& e) {
        o.check("Kohn-Sham decomposition", "Eq KS-decomp", false, e.what());
        return;
    }
    const Scalar tol = c.tol["identity"];
    const Scalar closure = std::abs(r.F - (r.T_s + r.E_H + r.E_xc));
    o.check("F = T_s + E_H + E_xc", "Eq KS-decomp", closure <= tol * std::max<Scalar>(1, std::abs(r.F)),
            "mismatch " + sci(closure));
    const Scalar potl = (r.v_s.values - (r.v.values + r.phi.values + r.v_xc.values)).cwiseAbs().maxCoeff();
    o.check("v_s = v + phi + v_xc", "Eq KS-potls", potl <= tol * std::max<Scalar>(1, r.v_s.sup_norm()),
            "mismatch " + sci(potl));

    const Vector delta = random_direction(grid, level, rng);
    const CoarseDensity d{grid, level, delta, 0};
    const Scalar e0 = hartree_energy(engine.spec(), p.coarse);
    const Scalar coefficient = hartree_energy(engine.spec(), d);
    Scalar worst = 0;
    for (Scalar t : {1e-2, 1e-3}) {
        const CoarseDensity moved{grid, level, p.coarse.values + t * delta, p.coarse.particles};
        const Scalar remainder = hartree_energy(engine.spec(), moved) - e0 - t * inner(r.phi, d);
        worst = std::max(worst, std::abs(remainder / (t * t) - coefficient) / coefficient);
    }
    o.check("Hartree Frechet remainder", "Eq KS-decomp", worst <= c.tol["hartree"], "relative error " + sci(worst));

    const Engine free_engine = non_interacting(engine);
    CalculusOptions copts;
    copts.inversion = inv;
    CsvTable t{{"direction", "F_prime", "T_s_prime", "phi_pairing", "E_xc_prime", "v_xc_pairing", "relative_error"},
               {}};
    Scalar worst_exc = 0;
    for (int k = 0; k < directions; ++k) {
        const Vector dir = random_direction(grid, level, rng);
        const CoarseDensity dd{grid, level, dir, 0};
        const Scalar f_prime = directional_derivative(engine, p.coarse, dir, default_schedule(), copts).limit_estimate;
        const Scalar ts_prime =
            directional_derivative(free_engine, p.coarse, dir, default_schedule(), copts).limit_estimate;
        const Scalar phi_pairing = inner(r.phi, dd);
        const Scalar exc_prime = f_prime - ts_prime - phi_pairing;
        const Scalar pairing = inner(r.v_xc, dd);
        const Scalar err = std::abs(exc_prime - pairing) / std::max<Scalar>(std::abs(pairing), 1e-3);
        worst_exc = std::max(worst_exc, err);
        t.rows.push_back(
            {cell(k), cell(f_prime), cell(ts_prime), cell(phi_pairing), cell(exc_prime), cell(pairing), cell(err)});
    }
    o.check("E_xc directional derivative matches <v_xc, delta>", "Eq KS-potls",
            worst_exc <= c.tol["exchange_correlation"], "worst relative error " + sci(worst_exc));
    o.notes.push_back("E_xc " + brief(r.E_xc) + ", T_s " + brief(r.T_s) + ", E_H " + brief(r.E_H));
    o.tables.emplace_back("ks", ks_table(r));
    o.tables.emplace_back("ks_directions", std::move(t));
    o.documents.emplace_back("ks", to_json(r));
}

Outcome run_ks(const RunConfig& c)
{
    Outcome o;
    o.experiment = "ks";
    const Engine engine(c.model.spec());
    Rng rng = stream_rng(c.seed, 0);
    ks_part(o, c, engine, c.ks.level, c.ks.directions, rng);
    return o;
}

// ------------------------------------------------------------ verify sections

ModelSpec two_particle_spec(const RunConfig& c)
{
    return ModelSpec{Grid(c.model.L, c.verify.two_particle_points), 2, c.model.lambda, c.model.a};
}

ModelSpec one_particle_spec(const RunConfig& c)
{
    ModelSpec s = c.model.spec();
    s.particles = 1;
    return s;
}

Outcome verify_fixed_point(const RunConfig& c)
{
    Outcome o;
    CsvTable t{{"N", "M", "level", "sample", "F", "residual", "gauge_error", "iterations", "converged"}, {}};
    int good = 0, total = 0;
    Scalar worst_residual = 0, worst_gauge = 0;
    auto run = [&](const ModelSpec& spec, int samples, int stream) {
        const Engine engine(spec);
        Rng rng = stream_rng(c.seed, stream);
        for (int level : c.verify.fixed_point_levels) {
            if (level > spec.grid.depth())
                continue;
            for (int s = 0; s < samples; ++s) {
                const CoarseDensity rho = random_interior_density(spec.grid, level, spec.particles, rng);
                const InversionResult r = lieb_maximize(engine, rho, c.inversion());
                ++total;
                good += r.converged && r.residual <= c.tol["inversion"];
                worst_residual = std::max(worst_residual, r.residual);
                worst_gauge = std::max(worst_gauge, r.gauge_error);
                t.rows.push_back({cell(spec.particles), cell(spec.grid.points()), cell(level), cell(s),
                                  cell(r.F_value), cell(r.residual), cell(r.gauge_error), cell(r.iterations),
                                  cell(r.converged)});
            }
        }
    };
    run(c.model.spec(), c.verify.fixed_point_samples, 1);
    if (c.verify.two_particle_samples > 0)
        run(two_particle_spec(c), c.verify.two_particle_samples, 2);
    o.check("pi_n rho_v[rho] = rho", "Thm CG-HK-P", good == total,
            count(good, total) + " converged, worst residual " + sci(worst_residual));
    o.check("gauge |E[v[rho]]|", "Eq gauge-convention", worst_gauge <= c.tol["gauge"], "worst " + sci(worst_gauge));
    o.tables.emplace_back("fixed_point", std::move(t));
    return o;
}

Outcome verify_one_particle(const RunConfig& c)
{
    Outcome o;
    const Engine engine(one_particle_spec(c));
    const Grid& grid = engine.spec().grid;
    Rng rng = stream_rng(c.seed, 3);
    CsvTable t{{"sample", "level", "F", "T_W", "relative_error"}, {}};
    Scalar worst = 0;
    bool converged = true;
    const auto& levels = c.verify.fixed_point_levels;
    for (int s = 0; s < c.verify.one_particle_samples; ++s) {
        const int level = levels[s % levels.size()];
        const CoarseDensity rho = random_interior_density(grid, level, 1, rng);
        const InversionResult r = lieb_maximize(engine, rho, c.inversion());
        converged = converged && r.converged;
        const Scalar tw = von_weizsacker(r.lambda_density, WallTerms::include).value;
        const Scalar err = std::abs(r.F_value - tw) / r.F_value;
        worst = std::max(worst, err);
        t.rows.push_back({cell(s), cell(level), cell(r.F_value), cell(tw), cell(err)});
    }
    o.check("F = T_W(Lambda rho) for one particle", "Eq Lieb-sandwich",
            converged && worst <= c.tol["one_particle"], "worst relative error " + sci(worst));
    o.tables.emplace_back("one_particle", std::move(t));
    return o;
}

Outcome verify_recovery(const RunConfig& c)
{
    Outcome o;
    const Engine engine(c.model.spec());
    const Grid& grid = engine.spec().grid;
    Rng rng = stream_rng(c.seed, 4);
    const int level = c.verify.recovery_level;
    CsvTable t{{"sample", "v0_sup", "max_error", "residual", "converged"}, {}};
    int good = 0;
    Scalar worst = 0;
    for (int s = 0; s < c.verify.recovery_samples; ++s) {
        const Potential v0 = random_smooth_potential(grid, level, rng, 10);
        const CoarseDensity rho = project(ground_density(engine, fine_values(v0)), level);
        const InversionResult r = lieb_maximize(engine, rho, c.inversion());
        const Scalar err = error_modulo_constant(r.potential.values, v0.values);
        const Scalar rel = err / v0.sup_norm();
        worst = std::max(worst, rel);
        good += r.converged && rel <= c.tol["recovery"];
        t.rows.push_back({cell(s), cell(v0.sup_norm()), cell(err), cell(r.residual), cell(r.converged)});
    }
    o.check("v[rho_v0] = v0 mod constant", "Thm CG-HK-P", good == c.verify.recovery_samples,
            count(good, c.verify.recovery_samples) + " recovered, worst error/|v0| " + sci(worst));
    o.tables.emplace_back("recovery", std::move(t));
    return o;
}

Outcome verify_monotone(const RunConfig& c)
{
    Outcome o;
    const Engine engine(c.model.spec());
    Rng rng = stream_rng(c.seed, 5);
    CsvTable t{{"density", "n", "D_n", "F_n", "dist_1", "converged"}, {}};
    bool converged = true;
    Scalar violation = 0, gap = 0;
    for (int s = 0; s < c.verify.sweep_densities; ++s) {
        const FineDensity rho = random_smooth_density(engine.spec().grid, engine.spec().particles, rng);
        const ScaleSweep sweep = scale_sweep(engine, rho, c.levels, sweep_options(c));
        converged = converged && sweep.all_converged;
        violation = std::max(violation, sweep.monotonicity_violation);
        gap = std::max(gap, std::abs(sweep.grid_row.F_n - sweep.rows.back().F_n) / sweep.grid_row.F_n);
        for (const auto& r : sweep.rows)
            t.rows.push_back({cell(s), cell(r.n), cell(r.D_n), cell(r.F_n), cell(r.dist_p.at(1)), cell(r.converged)});
        const auto& g = sweep.grid_row;
        t.rows.push_back({cell(s), "grid", cell(g.D_n), cell(g.F_n), cell(g.dist_p.at(1)), cell(g.converged)});
    }
    o.check("sweep inversions converge", "Thm CG-HK-P", converged, "");
    o.check("F_n non-decreasing in n", "Thm F-limit", violation <= c.tol["monotonicity"],
            "largest decrease " + sci(violation));
    o.check("finest level near the grid value", "Thm F-limit", gap <= c.tol["grid_gap"], "relative gap " + sci(gap));
    o.tables.emplace_back("monotone", std::move(t));
    return o;
}

Outcome verify_derivative(const RunConfig& c)
{
    Outcome o;
    const Engine engine(c.model.spec());
    const Grid& grid = engine.spec().grid;
    Rng rng = stream_rng(c.seed, 6);
    const int level = c.verify.derivative_level;
    CalculusOptions copts;
    copts.inversion = c.inversion();
    CsvTable t{{"pair", "limit_estimate", "minus_pairing", "error", "monotone_violation"}, {}};
    int good = 0;
    Scalar worst = 0, worst_monotone = 0;
    for (int s = 0; s < c.verify.derivative_pairs; ++s) {
        const CoarseDensity rho = random_interior_density(grid, level, engine.spec().particles, rng, 0.5);
        const InversionResult r = lieb_maximize(engine, rho, c.inversion());
        const Vector delta = random_direction(grid, level, rng);
        const Scalar pairing = inner(r.potential, CoarseDensity{grid, level, delta, 0});
        const QuotientTrace q = directional_derivative(engine, rho, delta, default_schedule(), copts);
        const Scalar err = std::abs(q.limit_estimate + pairing);
        const bool ok = r.converged && err <= c.tol["derivative"] * (1 + std::abs(pairing)) &&
                        q.monotone_violation <= c.tol["quotient_monotone"];
        good += ok;
        worst = std::max(worst, err / (1 + std::abs(pairing)));
        worst_monotone = std::max(worst_monotone, q.monotone_violation);
        t.rows.push_back({cell(s), cell(q.limit_estimate), cell(-pairing), cell(err), cell(q.monotone_violation)});
    }
    o.check("F'[rho; delta] = -<v[rho], delta>", "Thm Diff-Thm", good == c.verify.derivative_pairs,
            count(good, c.verify.derivative_pairs) + ", worst scaled error " + sci(worst) +
                ", worst monotone violation " + sci(worst_monotone));
    o.tables.emplace_back("derivative", std::move(t));
    return o;
}

Outcome verify_quasi(const RunConfig& c)
{
    Outcome o;
    Rng rng = stream_rng(c.seed, 7);
    quasi_part(o, c, c.verify.quasi_samples, rng);
    return o;
}

Outcome verify_modulus(const RunConfig& c)
{
    Outcome o;
    Rng rng = stream_rng(c.seed, 8);
    modulus_part(o, c, c.verify.modulus_samples, rng);
    return o;
}

Outcome verify_bounds(const RunConfig& c)
{
    Outcome o;
    const Engine engine(c.model.spec());
    const Grid& grid = engine.spec().grid;
    const ScaleHierarchy hierarchy(grid);
    const int particles = engine.spec().particles;
    Rng rng = stream_rng(c.seed, 9);
    int f_bad = 0, jensen_bad = 0, poincare_bad = 0, cs_bad = 0;
    CsvTable t{{"sample", "level", "F", "N_f_max", "grad_l1", "cs_bound"}, {}};
    const auto& levels = c.verify.fixed_point_levels;
    for (int s = 0; s < c.verify.bounds_samples; ++s) {
        const FineDensity rho = random_smooth_density(grid, particles, rng);
        const Scalar grad_l1 = lp_norm(discrete_gradient(rho), grid.spacing(), 1);
        const Scalar cs = 2 * std::sqrt(static_cast<Scalar>(particles)) * std::sqrt(sqrt_h1_seminorm_sq(rho));
        cs_bad += !(grad_l1 <= cs);
        for (int n : c.levels) {
            const CoarseDensity coarse = project(rho, n);
            for (Scalar p : {2.0, 3.0})
                jensen_bad += !(norm_lp(coarse, p) <= norm_lp(rho, p) * (1 + 1e-13));
            const Scalar residual = lp_norm(Vector(rho.values - embed(coarse).values), grid.spacing(), 1);
            poincare_bad += !(residual <= std::numbers::pi / 2 * hierarchy.diameter(n) * grad_l1);
        }
        const int level = levels[s % levels.size()];
        const InversionResult r = lieb_maximize(engine, project(rho, level), c.inversion());
        const Scalar ceiling = particles * f_max(engine.spec(), level);
        f_bad += !(r.F_value >= 0 && r.F_value <= ceiling);
        t.rows.push_back({cell(s), cell(level), cell(r.F_value), cell(ceiling), cell(grad_l1), cell(cs)});
    }
    const int n = c.verify.bounds_samples;
    o.check("0 <= F_n <= N f_max(n)", "Eq F-bound", f_bad == 0, std::to_string(f_bad) + " violations in " + cell(n));
    o.check("Jensen ||pi_n rho||_p <= ||rho||_p", "Thm F-limit", jensen_bad == 0,
            std::to_string(jensen_bad) + " violations");
    o.check("Poincare coarse-graining bound", "Thm F-limit", poincare_bad == 0,
            std::to_string(poincare_bad) + " violations");
    o.check("||grad rho||_1 <= 2 sqrt(N T_W)", "Eq Lieb-sandwich", cs_bad == 0, std::to_string(cs_bad) + " violations");
    o.tables.emplace_back("bounds", std::move(t));
    return o;
}

Outcome verify_duality(const RunConfig& c)
{
    Outcome o;
    const Engine engine(c.model.spec());
    const Grid& grid = engine.spec().grid;
    const int particles = engine.spec().particles;
    const int level = c.verify.derivative_level;
    Rng rng = stream_rng(c.seed, 10);

    int fy_bad = 0, excess_bad = 0, pairs = 0;
    Scalar min_delta = kInfinity;
    CsvTable t{{"density", "potential", "delta"}, {}};
    for (int i = 0; i < c.verify.fenchel_densities; ++i) {
        const InversionResult r =
            lieb_maximize(engine, random_interior_density(grid, level, particles, rng), c.inversion());
        const Scalar self = energetic_excess(engine, r, r.potential).delta;
        excess_bad += !(self >= -c.tol["excess"]);
        min_delta = std::min(min_delta, self);
        for (int j = 0; j < c.verify.fenchel_potentials; ++j) {
            const Scalar delta = energetic_excess(engine, r, random_potential(grid, level, rng)).delta;
            ++pairs;
            fy_bad += !(delta >= -c.tol["fenchel_young"]);
            excess_bad += !(delta >= -c.tol["excess"]);
            min_delta = std::min(min_delta, delta);
            t.rows.push_back({cell(i), cell(j), cell(delta)});
        }
    }
    o.check("Fenchel-Young F + <v, rho> >= E[v]", "Eq LF-transform", fy_bad == 0,
            std::to_string(fy_bad) + " violations in " + cell(pairs) + " pairs");
    o.check("excess Delta >= 0", "Eq eps-subdiff", excess_bad == 0, "smallest Delta " + sci(min_delta));

    Scalar worst_e = 0, worst_f = 0;
    for (int k = 0; k < c.verify.convexity_triples; ++k) {
        const Potential v1 = random_potential(grid, level, rng);
        const Potential v2 = random_potential(grid, level, rng);
        const Potential mid{grid, level, (v1.values + v2.values) / 2, 0};
        worst_e = std::max(worst_e, (ground_energy(engine, v1) + ground_energy(engine, v2)) / 2 -
                                        ground_energy(engine, mid));
        const CoarseDensity a = random_interior_density(grid, level, particles, rng);
        const CoarseDensity b = random_interior_density(grid, level, particles, rng);
        const CoarseDensity m{grid, level, (a.values + b.values) / 2, particles};
        const Scalar fa = lieb_maximize(engine, a, c.inversion()).F_value;
        const Scalar fb = lieb_maximize(engine, b, c.inversion()).F_value;
        const Scalar fm = lieb_maximize(engine, m, c.inversion()).F_value;
        worst_f = std::max(worst_f, fm - (fa + fb) / 2);
    }
    o.check("E concave at midpoints", "Eq LF-transform", worst_e <= c.tol["convexity"], "worst slack " + sci(worst_e));
    o.check("F_n convex at midpoints", "Eq inverse-LF-transform", worst_f <= c.tol["convexity"],
            "worst slack " + sci(worst_f));
    o.tables.emplace_back("fenchel_young", std::move(t));
    return o;
}

Outcome verify_ks(const RunConfig& c)
{
    Outcome o;
    const Engine engine(two_particle_spec(c));
    Rng rng = stream_rng(c.seed, 11);
    ks_part(o, c, engine, std::min(c.ks.level, engine.spec().grid.depth()), c.verify.ks_directions, rng);
    return o;
}

Outcome verify_blowup(const RunConfig& c)
{
    RunConfig local = c;
    local.seed = c.seed + 12;
    return run_blowup(local);
}

using SectionFn = Outcome (*)(const RunConfig&);

struct SectionEntry {
    VerifySection info;
    SectionFn fn;
};

const std::vector<SectionEntry>& section_table()
{
    static const std::vector<SectionEntry> table{
        {{1, "fixed_point", "Thm CG-HK-P"}, verify_fixed_point},
        {{2, "one_particle", "Eq Lieb-sandwich"}, verify_one_particle},
        {{3, "recovery", "Thm CG-HK-P"}, verify_recovery},
        {{4, "monotone_limit", "Thm F-limit"}, verify_monotone},
        {{5, "derivative", "Thm Diff-Thm"}, verify_derivative},
        {{6, "quasi_continuity", "Thm V-Cont-Thm"}, verify_quasi},
        {{7, "continuity_modulus", "Thm Continuity-Thm"}, verify_modulus},
        {{8, "bounds", "Eq F-bound / Thm F-limit"}, verify_bounds},
        {{9, "duality", "Eq LF-transform / Eq inverse-LF-transform"}, verify_duality},
        {{10, "kohn_sham", "Eq KS-decomp / Eq KS-potls"}, verify_ks},
        {{11, "blowup", "Thm V-limit / Appendix C"}, verify_blowup},
    };
    return table;
}

std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

std::string align(const CsvTable& t)
{
    std::vector<std::size_t> width(t.header.size(), 0);
    auto widen = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    };
    widen(t.header);
    for (const auto& r : t.rows)
        widen(r);
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "  " : "");
            if (i + 1 < row.size())
                out << std::left << std::setw(static_cast<int>(width[i]));
            out << row[i];
        }
        out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows)
        line(r);
    return out.str();
}

}  // namespace

bool Outcome::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void Outcome::check(std::string name, std::string anchor, bool ok, std::string detail)
{
    checks.push_back(Check{std::move(name), std::move(anchor), ok, std::move(detail)});
}

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"invert", "sweep", "probe", "quasi",
                                                "modulus", "blowup", "ks",   "verify-all"};
    return names;
}

const std::vector<VerifySection>& verify_sections()
{
    static const std::vector<VerifySection> sections = [] {
        std::vector<VerifySection> out;
        for (const auto& e : section_table())
            out.push_back(e.info);
        return out;
    }();
    return sections;
}

Outcome run_verify_section(int id, const RunConfig& config)
{
    for (const auto& e : section_table()) {
        if (e.info.id != id)
            continue;
        const auto start = Clock::now();
        Outcome o;
        try {
            o = e.fn(config);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            o = Outcome{};
            o.check("section completes", e.info.anchor, false, ex.what());
        }
        o.experiment = e.info.name;
        o.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return o;
    }
    throw InvalidArgument("no verify section " + std::to_string(id));
}

Outcome verify_all(const RunConfig& config, int threads)
{
    const auto& sections = section_table();
    std::vector<Outcome> results(sections.size());
    std::vector<std::exception_ptr> errors(sections.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < sections.size(); i = next++) {
            try {
                results[i] = run_verify_section(sections[i].info.id, config);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto start = Clock::now();
    {
        std::vector<std::jthread> pool;
        const int n = std::max(1, std::min<int>(threads, static_cast<int>(sections.size())));
        for (int i = 1; i < n; ++i)
            pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    Outcome all;
    all.experiment = "verify-all";
    CsvTable trace{{"section", "anchor", "check", "result"}, {}};
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const Outcome& r = results[i];
        const std::string& name = sections[i].info.name;
        for (const Check& c : r.checks) {
            all.checks.push_back(Check{name + ": " + c.name, c.anchor, c.passed, c.detail});
            trace.rows.push_back({name, c.anchor, c.name, c.passed ? "PASS" : "FAIL"});
        }
        for (const auto& [table, t] : r.tables)
            all.tables.emplace_back(name + "_" + table, t);
        for (const auto& [doc, d] : r.documents)
            all.documents.emplace_back(name + "_" + doc, d);
        for (const auto& note : r.notes)
            all.notes.push_back(name + ": " + note);
        all.notes.push_back(name + ": " + brief(std::round(r.seconds * 10) / 10) + " s");
    }
    all.tables.emplace_back("traceability", std::move(trace));
    all.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return all;
}

Outcome run_experiment(const std::string& name, const RunConfig& config, int threads)
{
    const auto start = Clock::now();
    Outcome o;
    if (name == "invert")
        o = run_invert(config);
    else if (name == "sweep")
        o = run_sweep(config);
    else if (name == "probe")
        o = run_probe(config);
    else if (name == "quasi")
        o = run_quasi(config);
    else if (name == "modulus")
        o = run_modulus(config);
    else if (name == "blowup")
        o = run_blowup(config);
    else if (name == "ks")
        o = run_ks(config);
    else if (name == "verify-all")
        return verify_all(config, threads);
    else
        throw ConfigError("unknown experiment '" + name + "'");
    o.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return o;
}

std::string summary_text(const Outcome& outcome)
{
    std::ostringstream out;
    out << "experiment: " << outcome.experiment << '\n';
    for (const Check& c : outcome.checks) {
        out << (c.passed ? "[PASS] " : "[FAIL] ") << c.anchor << " :: " << c.name;
        if (!c.detail.empty())
            out << " :: " << c.detail;
        out << '\n';
    }
    for (const auto& n : outcome.notes)
        out << "note: " << n << '\n';
    const auto failed = std::count_if(outcome.checks.begin(), outcome.checks.end(), [](const Check& c) {
        return !c.passed;
    });
    out << "result: " << (failed ? "FAIL" : "PASS") << " (" << outcome.checks.size() - failed << "/"
        << outcome.checks.size() << " checks)\n";
    return out.str();
}

void write_outcome(const Outcome& outcome, const RunConfig& config, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const std::string stamp = utc_timestamp();
    const nlohmann::json echo = to_json(config);
    for (const auto& [name, table] : outcome.tables) {
        write_atomic(dir / (name + ".csv"), table.str());
        const nlohmann::json meta{{"experiment", outcome.experiment},
                                  {"table", name},
                                  {"columns", table.header},
                                  {"rows", table.rows.size()},
                                  {"seed", config.seed},
                                  {"generated_at", stamp},
                                  {"config", echo}};
        write_atomic(dir / (name + ".meta.json"), meta.dump(2) + "\n");
    }
    for (const auto& [name, doc] : outcome.documents)
        write_atomic(dir / (name + ".json"), doc.dump(2) + "\n");
    nlohmann::json checks = nlohmann::json::array();
    for (const Check& c : outcome.checks)
        checks.push_back({{"name", c.name}, {"anchor", c.anchor}, {"passed", c.passed}, {"detail", c.detail}});
    const nlohmann::json summary{{"experiment", outcome.experiment},
                                 {"passed", outcome.passed()},
                                 {"checks", checks},
                                 {"notes", outcome.notes},
                                 {"seconds", outcome.seconds},
                                 {"generated_at", stamp},
                                 {"config", echo}};
    write_atomic(dir / "summary.json", summary.dump(2) + "\n");
    const std::string text = summary_text(outcome);
    write_atomic(dir / "summary.txt", text);
    if (outcome.experiment == "verify-all")
        write_atomic(dir / "traceability.txt", text);
}

int thread_cap()
{
    const char* env = std::getenv("CGDFT_THREADS");
    if (env && *env) {
        int n = 0;
        const std::string s(env);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || n < 1)
            throw ConfigError("CGDFT_THREADS must be a positive integer, got '" + s + "'");
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string report(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw Error(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> csvs;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            csvs.push_back(entry.path());
    std::sort(csvs.begin(), csvs.end());
    const std::filesystem::path summary_path = dir / "summary.json";
    const bool has_summary = std::filesystem::exists(summary_path);
    if (csvs.empty() && !has_summary)
        throw Error("no artifacts in " + dir.string());

    std::ostringstream out;
    if (has_summary) {
        std::ifstream in(summary_path);
        nlohmann::json s;
        try {
            s = nlohmann::json::parse(in);
            out << "experiment: " << s.at("experiment").get<std::string>() << "  ("
                << (s.at("passed").get<bool>() ? "PASS" : "FAIL") << ")\n";
            for (const auto& c : s.at("checks"))
                out << "  " << (c.at("passed").get<bool>() ? "OK  " : "FAIL") << "  "
                    << c.at("anchor").get<std::string>() << " :: " << c.at("name").get<std::string>() << '\n';
            for (const auto& n : s.at("notes"))
                out << "  " << n.get<std::string>() << '\n';
        } catch (const nlohmann::json::exception& e) {
            throw Error("corrupt summary.json: " + std::string(e.what()));
        }
    }
    for (const auto& path : csvs) {
        const CsvTable t = read_csv(path);
        out << "\n== " << path.stem().string() << " (" << t.rows.size() << " rows)\n" << align(t);
    }
    return out.str();
}

}  // namespace cgdft
