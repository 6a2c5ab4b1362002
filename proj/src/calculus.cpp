#include "cgdft/calculus.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace cgdft {

namespace {

void require_sum_zero(const CoarseDensity& rho, const Vector& delta, const char* who)
{
    if (delta.size() != rho.values.size())
        throw InvalidArgument(std::string(who) + ": direction has the wrong number of cells");
    const Scalar width = rho.cell_width();
    if (std::abs(width * delta.sum()) > 1e-12 * (1 + width * delta.cwiseAbs().sum()))
        throw InvalidArgument(std::string(who) + ": direction must carry zero total mass");
}

CoarseDensity moved(const CoarseDensity& rho, const Vector& delta, Scalar s)
{
    return CoarseDensity{rho.grid, rho.level, rho.values + s * delta, rho.particles};
}

}  // namespace

FunctionalValue evaluate_functional(const Engine& engine, const CoarseDensity& rho, const CalculusOptions& opts)
{
    FunctionalValue out;
    if (!rho.is_nonnegative())
        return out;
    InversionOptions inv = opts.inversion;
    if (!rho.is_interior()) {
        inv.allow_boundary = true;
        inv.max_iterations = std::min(inv.max_iterations, opts.boundary_iterations);
    }
    const InversionResult r = lieb_maximize(engine, rho, inv);
    out.value = r.F_value;
    out.converged = r.converged;
    out.residual = r.residual;
    return out;
}

std::vector<Scalar> default_schedule()
{
    std::vector<Scalar> s;
    for (int k = 3; k <= 12; ++k)
        s.push_back(std::ldexp(1.0, -k));
    return s;
}

QuotientTrace directional_derivative(const Engine& engine, const CoarseDensity& rho, const Vector& delta,
                                     const std::vector<Scalar>& schedule, const CalculusOptions& opts)
{
    require_sum_zero(rho, delta, "directional_derivative");
    for (std::size_t i = 0; i < schedule.size(); ++i)
        if (!(schedule[i] > 0) || (i > 0 && !(schedule[i] < schedule[i - 1])))
            throw InvalidArgument("directional_derivative: schedule must be positive and decreasing");

    QuotientTrace trace;
    trace.s_values = schedule;
    if (delta.cwiseAbs().maxCoeff() == 0) {
        trace.quotients.assign(schedule.size(), 0);
        trace.converged.assign(schedule.size(), true);
        trace.limit_estimate = 0;
        return trace;
    }

    const InversionResult base = lieb_maximize(engine, rho, opts.inversion);
    if (!base.converged)
        throw NonConvergence("directional_derivative: base density did not invert");
    CalculusOptions warm = opts;
    warm.inversion.initial = base.potential;

    std::vector<std::pair<Scalar, Scalar>> finite;
    for (Scalar s : schedule) {
        const FunctionalValue f = evaluate_functional(engine, moved(rho, delta, s), warm);
        if (std::isinf(f.value)) {
            trace.leaves_domain = true;
            trace.quotients.push_back(kInfinity);
            trace.converged.push_back(true);
            continue;
        }
        const Scalar q = (f.value - base.F_value) / s;
        trace.quotients.push_back(q);
        trace.converged.push_back(f.converged);
        if (!finite.empty())
            trace.monotone_violation = std::max(trace.monotone_violation, q - finite.back().second);
        finite.emplace_back(s, q);
    }

    if (finite.size() == 1) {
        trace.limit_estimate = finite.back().second;
    } else if (finite.size() >= 2) {
        const auto [s1, q1] = finite[finite.size() - 2];
        const auto [s2, q2] = finite.back();
        trace.limit_estimate = (s1 * q2 - s2 * q1) / (s1 - s2);
    }
    return trace;
}

std::string to_string(SliceClass c)
{
    switch (c) {
    case SliceClass::finite_both_sides:
        return "a";
    case SliceClass::finite_one_side:
        return "b";
    case SliceClass::isolated_point:
        return "c";
    }
    return "?";
}

SliceReport slice_scan(const Engine& engine, const CoarseDensity& rho, const Vector& delta,
                       const std::vector<Scalar>& s_grid, const CalculusOptions& opts)
{
    require_sum_zero(rho, delta, "slice_scan");
    SliceReport report;
    std::vector<Scalar> grid = s_grid;
    std::sort(grid.begin(), grid.end());
    report.s_grid = grid;

    bool positive = false;
    bool negative = false;
    for (Scalar s : grid) {
        const FunctionalValue f = evaluate_functional(engine, moved(rho, delta, s), opts);
        report.F_values.push_back(f.value);
        report.converged.push_back(f.converged);
        if (std::isfinite(f.value)) {
            positive = positive || s > 0;
            negative = negative || s < 0;
        }
    }
    report.classification = positive && negative ? SliceClass::finite_both_sides
                            : positive || negative ? SliceClass::finite_one_side
                                                   : SliceClass::isolated_point;

    std::vector<int> usable;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (report.converged[i])
            usable.push_back(static_cast<int>(i));
    for (std::size_t k = 2; k < usable.size(); ++k) {
        const int a = usable[k - 2], b = usable[k - 1], c = usable[k];
        const Scalar left = (report.F_values[b] - report.F_values[a]) / (grid[b] - grid[a]);
        const Scalar right = (report.F_values[c] - report.F_values[b]) / (grid[c] - grid[b]);
        const Scalar second = (right - left) * (grid[c] - grid[a]) / 2;
        report.convexity_violation = std::min(report.convexity_violation, second);
    }
    report.convex = report.convexity_violation >= -1e-6;
    return report;
}

bool epsilon_subdifferential_check(const Engine& engine, const InversionResult& rho_inversion, const Potential& v,
                                   Scalar eps)
{
    return energetic_excess(engine, rho_inversion, v).delta <= eps;
}

bool epsilon_subdifferential_check(const Engine& engine, const CoarseDensity& rho, const Potential& v, Scalar eps,
                                   const InversionOptions& opts)
{
    return energetic_excess(engine, rho, v, opts).delta <= eps;
}

EkelandRepair ekeland_repair(const Engine& engine, const CoarseDensity& rho, const Potential& v, Scalar eps,
                             Scalar lambda, const InversionOptions& opts)
{
    if (!(lambda > 0))
        throw InvalidArgument("ekeland_repair: lambda must be positive");
    if (!(eps >= 0))
        throw InvalidArgument("ekeland_repair: eps must be non-negative");
    if (v.level > rho.level)
        throw InvalidArgument("ekeland_repair: potential is finer than the density");

    const InversionResult base = lieb_maximize(engine, rho, opts);
    if (!base.converged)
        throw NonConvergence("ekeland_repair: density did not invert");
    const Potential start = refine(v, rho.level);
    EkelandRepair out;
    out.initial_excess = energetic_excess(engine, base, start).delta;
    if (out.initial_excess > eps + 1e-12)
        throw InvalidArgument("ekeland_repair: excess " + std::to_string(out.initial_excess) + " exceeds eps");
    if (out.initial_excess <= 1e-10) {
        out.found = true;
        out.density = rho;
        out.potential = start;
        out.excess = out.initial_excess;
        out.message = "pair already exact";
        return out;
    }

    const Scalar kappa = eps / lambda;
    const int cells = static_cast<int>(rho.values.size());
    Vector u = Vector::Zero(cells);
    DualEvaluation point = evaluate_dual(engine, rho, start.values + u, {}, opts.max_degeneracy);
    auto free_mask = [&](const Vector& g) {
        std::vector<bool> free(cells);
        for (int r = 0; r < cells; ++r)
            free[r] = !((u[r] >= kappa && g[r] > 0) || (u[r] <= -kappa && g[r] < 0));
        return free;
    };

    for (out.iterations = 0; out.iterations < 50; ++out.iterations) {
        const std::vector<bool> free = free_mask(point.gradient);
        std::vector<int> index;
        for (int r = 0; r < cells; ++r)
            if (free[r])
                index.push_back(r);
        Scalar projected = 0;
        for (int r : index)
            projected += std::abs(point.gradient[r]);
        if (index.empty() || projected <= 1e-13 * rho.particles)
            break;

        const Matrix curvature = dual_curvature(engine, rho, point);
        const int f = static_cast<int>(index.size());
        Matrix a(f, f);
        Vector g(f);
        for (int i = 0; i < f; ++i) {
            g[i] = point.gradient[index[i]];
            for (int j = 0; j < f; ++j)
                a(i, j) = curvature(index[i], index[j]);
        }
        const Scalar scale = std::max<Scalar>(a.trace() / f, 1e-300);
        if (f == cells)
            a += Matrix::Constant(f, f, scale / f);
        a.diagonal().array() += 1e-10 * scale;
        const Vector step = a.completeOrthogonalDecomposition().solve(g);
        Vector direction = Vector::Zero(cells);
        for (int i = 0; i < f; ++i)
            direction[index[i]] = step[i];

        bool accepted = false;
        for (Scalar t = 1; t > 1e-12; t *= 0.5) {
            const Vector trial_u = (u + t * direction).cwiseMax(-kappa).cwiseMin(kappa);
            DualEvaluation trial = evaluate_dual(engine, rho, start.values + trial_u, {}, opts.max_degeneracy);
            const Scalar gain = point.gradient.dot(trial_u - u);
            const Scalar noise = 1e-13 * (1 + std::abs(point.dual));
            if (trial.dual >= point.dual + 1e-4 * gain || (trial.dual >= point.dual - noise && gain > 0 && t < 1e-3)) {
                u = trial_u;
                point = std::move(trial);
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
    }

    out.potential = Potential{rho.grid, rho.level, start.values + u, start.gauge_offset};
    out.density = project(point.density, rho.level);
    out.density_distance = distance_lp(out.density, rho, 1);
    out.potential_distance = u.cwiseAbs().maxCoeff();

    InversionOptions repaired = opts;
    repaired.initial = out.potential;
    const InversionResult check = lieb_maximize(engine, out.density, repaired);
    out.excess = check.converged ? energetic_excess(engine, check, out.potential).delta : kInfinity;

    const bool near = out.density_distance <= lambda * (1 + 1e-6) + 1e-12;
    const bool pinned = out.potential_distance <= kappa * (1 + 1e-12);
    const bool exact = out.excess <= 1e-8;
    out.found = near && pinned && exact;
    if (out.found)
        out.message = "certificates hold";
    else if (!exact)
        out.message = "repaired pair is not exact (excess " + std::to_string(out.excess) + ")";
    else
        out.message = "density moved " + std::to_string(out.density_distance) + " > lambda";
    return out;
}

}  // namespace cgdft
