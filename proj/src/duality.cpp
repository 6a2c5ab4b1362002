#include "cgdft/duality.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>

namespace cgdft {

namespace {

Vector newton_direction(const Engine& engine, const CoarseDensity& rho, const DualEvaluation& p, Scalar damping)
{
    const int cells = static_cast<int>(p.cells.size());
    Matrix a = dual_curvature(engine, rho, p);
    const Scalar scale = std::max<Scalar>(a.trace() / cells, 1e-300);
    a += Matrix::Constant(cells, cells, scale / cells);
    a.diagonal().array() += damping * scale;
    Eigen::LDLT<Matrix> ldlt(a);
    Vector d = ldlt.solve(p.gradient);
    if (ldlt.info() != Eigen::Success || !d.allFinite())
        d = a.completeOrthogonalDecomposition().solve(p.gradient);
    return d;
}

Vector warm_vector(const Engine& engine, const DualEvaluation& p)
{
    if (engine.uses_dense_path())
        return {};
    return p.ground.basis.col(0);
}

}  // namespace

DualEvaluation evaluate_dual(const Engine& engine, const CoarseDensity& rho, const Vector& cells,
                             const Vector& warm_start, int max_degeneracy)
{
    DualEvaluation p;
    p.cells = cells;
    const Vector fine = embed_values(rho.grid, cells, rho.level);
    p.ground = engine.ground_space(fine, warm_start);
    const int k = p.ground.degeneracy;
    if (k > max_degeneracy)
        throw DegeneracyOverflow("ground-space degeneracy " + std::to_string(k) + " exceeds the mixing guard");
    if (k == 1) {
        p.weights = Vector::Ones(1);
    } else {
        Matrix columns(rho.values.size(), k);
        for (int i = 0; i < k; ++i)
            columns.col(i) = project_values(rho.grid, engine.density_values(p.ground.basis.col(i)), rho.level);
        p.weights = simplex_least_squares(columns, rho.values);
    }
    p.density = engine.density_of(EnsembleState{p.weights, p.ground.basis});
    const Scalar width = rho.cell_width();
    p.gradient = width * (project_values(rho.grid, p.density.values, rho.level) - rho.values);
    p.dual = p.ground.energy - width * cells.dot(rho.values);
    p.residual = p.gradient.cwiseAbs().sum();
    return p;
}

Matrix dual_curvature(const Engine& engine, const CoarseDensity& rho, const DualEvaluation& point)
{
    const Vector fine = embed_values(rho.grid, point.cells, rho.level);
    return -engine.response(point.ground, point.weights, fine, rho.level);
}

Scalar ground_energy(const Engine& engine, const Potential& v)
{
    return engine.ground_space(fine_values(v)).energy;
}

Vector simplex_least_squares(const Matrix& a, const Vector& b)
{
    const int k = static_cast<int>(a.cols());
    if (k < 1 || k > 8)
        throw InvalidArgument("simplex_least_squares: need 1..8 columns");
    Vector best = Vector::Zero(k);
    Scalar best_value = kInfinity;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
        std::vector<int> support;
        for (int i = 0; i < k; ++i)
            if (mask & (1u << i))
                support.push_back(i);
        const int s = static_cast<int>(support.size());
        Matrix sub(a.rows(), s);
        for (int j = 0; j < s; ++j)
            sub.col(j) = a.col(support[j]);
        Matrix kkt = Matrix::Zero(s + 1, s + 1);
        kkt.topLeftCorner(s, s) = 2 * sub.transpose() * sub;
        kkt.topRightCorner(s, 1).setOnes();
        kkt.bottomLeftCorner(1, s).setOnes();
        Vector rhs(s + 1);
        rhs.head(s) = 2 * sub.transpose() * b;
        rhs[s] = 1;
        const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        const Vector w = sol.head(s);
        if (w.minCoeff() < -1e-12 || std::abs(w.sum() - 1) > 1e-9)
            continue;
        const Scalar value = (sub * w - b).squaredNorm();
        if (!std::isfinite(best_value) || value < best_value - 1e-15 * (1 + best_value)) {
            best_value = value;
            best.setZero();
            for (int j = 0; j < s; ++j)
                best[support[j]] = std::max<Scalar>(0, w[j]);
        }
    }
    return best / best.sum();
}

InversionResult lieb_maximize(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts)
{
    const ScaleHierarchy hierarchy(rho.grid);
    hierarchy.require_level(rho.level);
    if (!(rho.grid == engine.spec().grid))
        throw InvalidArgument("lieb_maximize: density and model live on different grids");
    if (rho.particles != engine.spec().particles)
        throw InvalidArgument("lieb_maximize: density particle count does not match the model");
    if (std::abs(rho.mass() - rho.particles) > kMassTolerance * std::max(1, rho.particles))
        throw InvalidArgument("lieb_maximize: density is not normalized");
    if (!rho.is_nonnegative())
        throw NotInteriorDensity("lieb_maximize: density has a negative cell average");
    if (!opts.allow_boundary && !rho.is_interior())
        throw NotInteriorDensity("lieb_maximize: every cell average must be strictly positive");

    const int cells = hierarchy.cell_count(rho.level);
    Vector start = Vector::Zero(cells);
    if (opts.initial) {
        if (opts.initial->level > rho.level)
            throw InvalidArgument("lieb_maximize: warm start is finer than the density");
        start = refine(*opts.initial, rho.level).values;
    }

    DualEvaluation current = evaluate_dual(engine, rho, start, {}, opts.max_degeneracy);

    InversionResult result;
    result.level = rho.level;
    result.target = rho;

    Scalar damping = 0;
    int polished = 0;
    int iteration = 0;
    Scalar last_step = 0;
    Scalar best_residual = kInfinity;
    int best_iteration = 0;
    for (;; ++iteration) {
        result.trace.push_back({iteration, current.residual, current.dual, last_step, current.ground.degeneracy});
        if (current.residual <= opts.tolerance) {
            if (polished >= opts.polish_steps || current.residual <= 1e-13 * rho.particles)
                break;
            ++polished;
        }
        if (current.residual < 0.9 * best_residual) {
            best_residual = current.residual;
            best_iteration = iteration;
        }
        if (iteration >= opts.max_iterations || iteration - best_iteration > opts.stall_iterations)
            break;
        if (opts.stop.stop_requested()) {
            result.cancelled = true;
            break;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
            const Vector direction = newton_direction(engine, rho, current, damping);
            const Scalar slope = current.gradient.dot(direction);
            Scalar t = 1;
            for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
                DualEvaluation trial;
                try {
                    trial = evaluate_dual(engine, rho, current.cells + t * direction, warm_vector(engine, current),
                                          opts.max_degeneracy);
                } catch (const DegeneracyOverflow&) {
                    continue;
                }
                const Scalar noise = 1e-13 * (1 + std::abs(current.ground.energy) + std::abs(current.dual));
                const bool armijo = trial.dual >= current.dual + 1e-4 * t * slope;
                const bool closer = trial.residual < current.residual && trial.dual >= current.dual - noise;
                if (armijo || closer) {
                    last_step = t;
                    current = std::move(trial);
                    accepted = true;
                    break;
                }
            }
            if (accepted)
                damping = t == 1 ? (damping < 1e-10 ? 0 : damping / 10) : damping;
            else
                damping = std::max<Scalar>(1e-6, damping * 10);
        }
        if (!accepted) {
            // Stalled in floating point before the polish target: nothing left to gain.
            if (current.residual <= opts.tolerance)
                break;
            result.trace.push_back({iteration + 1, current.residual, current.dual, 0, current.ground.degeneracy});
            break;
        }
    }

    const int n_particles = engine.spec().particles;
    const Scalar offset = -current.ground.energy / n_particles;
    result.F_value = current.dual;
    result.potential = shifted(Potential{rho.grid, rho.level, current.cells, 0}, offset);
    result.lambda_density = current.density;
    result.mixing_weights = current.weights;
    result.degeneracy = current.ground.degeneracy;
    result.residual = current.residual;
    result.iterations = iteration;
    result.converged = current.residual <= opts.tolerance && !result.cancelled;
    result.gauge_error = std::abs(ground_energy(engine, result.potential));
    result.gauge_identity_error = std::abs(result.F_value + inner(result.potential, rho));
    return result;
}

ExcessReport energetic_excess(const Engine& engine, const InversionResult& rho_inversion, const Potential& v)
{
    ExcessReport r;
    r.F_part = rho_inversion.F_value;
    r.pairing_part = inner(v, rho_inversion.target);
    r.E_part = ground_energy(engine, v);
    r.delta = r.F_part + r.pairing_part - r.E_part;
    return r;
}

ExcessReport energetic_excess(const Engine& engine, const CoarseDensity& rho, const Potential& v,
                              const InversionOptions& opts)
{
    const InversionResult inv = lieb_maximize(engine, rho, opts);
    if (!inv.converged)
        throw NonConvergence("energetic_excess: inversion of rho did not converge (residual " +
                             std::to_string(inv.residual) + ")");
    return energetic_excess(engine, inv, v);
}

SubgradientCheck subgradient_check(const Engine& engine, const CoarseDensity& rho, const Potential& v,
                                   int sample_count, Rng& rng, const InversionOptions& opts)
{
    SubgradientCheck out;
    const int cells = static_cast<int>(rho.values.size());
    if (cells == 1)
        return out;

    const InversionResult base = lieb_maximize(engine, rho, opts);
    if (!base.converged)
        throw NonConvergence("subgradient_check: inversion of rho did not converge");
    InversionOptions warm = opts;
    warm.initial = base.potential;

    auto test = [&](const Vector& candidate_values) {
        CoarseDensity candidate{rho.grid, rho.level, candidate_values, rho.particles};
        if (!candidate.is_interior())
            return;
        const InversionResult inv = lieb_maximize(engine, candidate, warm);
        if (!inv.converged)
            return;
        ++out.evaluated;
        const Scalar pairing = rho.cell_width() * refine(v, rho.level).values.dot(candidate.values - rho.values);
        const Scalar slack = inv.F_value - base.F_value + pairing;
        if (slack < out.worst_slack) {
            out.worst_slack = slack;
            if (slack < -1e-8) {
                out.holds = false;
                out.violation = candidate;
            }
        }
    };

    const Scalar width = rho.cell_width();
    const Scalar floor = rho.values.minCoeff();
    for (int r = 0; r < cells && out.holds; ++r) {
        Vector direction = -Vector::Constant(cells, 1.0 / cells);
        direction[r] += 1;
        direction /= lp_norm(direction, width, 1);
        const Scalar t_max = 0.5 * floor / direction.cwiseAbs().maxCoeff();
        for (Scalar sign : {1.0, -1.0})
            for (int k = 0; k < 6 && out.holds; ++k)
                test(rho.values + sign * t_max * std::pow(0.25, k) * direction);
    }
    std::uniform_real_distribution<Scalar> unit(0, 1);
    for (int s = 0; s < sample_count && out.holds; ++s) {
        const Vector direction = random_direction(rho.grid, rho.level, rng);
        const Scalar t_max = 0.9 * floor / direction.cwiseAbs().maxCoeff();
        test(rho.values + unit(rng) * t_max * direction);
    }
    return out;
}

}  // namespace cgdft
