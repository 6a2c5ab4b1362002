#include "cgdft/density.hpp"

#include <string>

namespace cgdft {

namespace {

void check_mass(Scalar mass, int particles, const char* what)
{
    if (std::abs(mass - particles) > kMassTolerance * std::max(1, particles))
        throw InvalidArgument(std::string(what) + ": mass " + std::to_string(mass) +
                              " differs from particle count " + std::to_string(particles));
}

/// Pairwise sum of a power-of-two-long run; exact for a repeated constant.
Scalar pairwise_sum(const Scalar* x, int n)
{
    if (n == 1)
        return x[0];
    const int half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

void check_same_grid(const Grid& a, const Grid& b)
{
    if (!(a == b))
        throw InvalidArgument("incompatible hierarchy: operands live on different grids");
}

}  // namespace

FineDensity make_fine_density(const Grid& grid, Vector values, int particles)
{
    if (values.size() != grid.points())
        throw InvalidArgument("make_fine_density: value count does not match grid");
    if (!values.allFinite())
        throw InvalidArgument("make_fine_density: non-finite value");
    FineDensity rho{grid, std::move(values), particles};
    check_mass(rho.mass(), particles, "make_fine_density");
    return rho;
}

CoarseDensity make_coarse_density(const Grid& grid, int level, Vector values, int particles)
{
    ScaleHierarchy(grid).require_level(level);
    if (values.size() != (1 << level))
        throw InvalidArgument("make_coarse_density: value count does not match level");
    if (!values.allFinite())
        throw InvalidArgument("make_coarse_density: non-finite value");
    CoarseDensity rho{grid, level, std::move(values), particles};
    check_mass(rho.mass(), particles, "make_coarse_density");
    return rho;
}

Potential make_potential(const Grid& grid, int level, Vector values)
{
    ScaleHierarchy(grid).require_level(level);
    if (values.size() != (1 << level))
        throw InvalidArgument("make_potential: value count does not match level");
    if (!values.allFinite())
        throw InvalidArgument("make_potential: cell values must be finite");
    return Potential{grid, level, std::move(values), 0};
}

FineDensity uniform_density(const Grid& grid, int particles)
{
    return FineDensity{grid, Vector::Constant(grid.points(), particles / grid.span()), particles};
}

FineDensity normalized_density(const Grid& grid, Vector values, int particles)
{
    const Scalar mass = grid.spacing() * values.sum();
    if (!(mass > 0))
        throw InvalidArgument("normalized_density: values have no positive mass");
    values *= particles / mass;
    return make_fine_density(grid, std::move(values), particles);
}

CoarseDensity normalized_coarse_density(const Grid& grid, int level, Vector values, int particles)
{
    const Scalar mass = ScaleHierarchy(grid).cell_width(level) * values.sum();
    if (!(mass > 0))
        throw InvalidArgument("normalized_coarse_density: values have no positive mass");
    values *= particles / mass;
    return make_coarse_density(grid, level, std::move(values), particles);
}

Potential shifted(const Potential& v, Scalar c)
{
    Potential out = v;
    out.values.array() += c;
    out.gauge_offset += c;
    return out;
}

Vector project_values(const Grid& grid, const Vector& fine, int level)
{
    const ScaleHierarchy hierarchy(grid);
    hierarchy.require_level(level);
    const int per_cell = hierarchy.points_per_cell(level);
    Vector cells(hierarchy.cell_count(level));
    for (int c = 0; c < cells.size(); ++c)
        cells[c] = pairwise_sum(fine.data() + c * per_cell, per_cell) / per_cell;
    return cells;
}

Vector embed_values(const Grid& grid, const Vector& cells, int level)
{
    const ScaleHierarchy hierarchy(grid);
    hierarchy.require_level(level);
    const int per_cell = hierarchy.points_per_cell(level);
    Vector fine(grid.points());
    for (int c = 0; c < cells.size(); ++c)
        fine.segment(c * per_cell, per_cell).setConstant(cells[c]);
    return fine;
}

CoarseDensity project(const FineDensity& rho, int level)
{
    return CoarseDensity{rho.grid, level, project_values(rho.grid, rho.values, level), rho.particles};
}

CoarseDensity refine(const CoarseDensity& rho, int level)
{
    if (level < rho.level)
        throw InvalidArgument("refine: target level is coarser than the density");
    const Vector fine = embed_values(rho.grid, rho.values, rho.level);
    return CoarseDensity{rho.grid, level, project_values(rho.grid, fine, level), rho.particles};
}

FineDensity embed(const CoarseDensity& rho)
{
    return FineDensity{rho.grid, embed_values(rho.grid, rho.values, rho.level), rho.particles};
}

Potential refine(const Potential& v, int level)
{
    if (level < v.level)
        throw InvalidArgument("refine: target level is coarser than the potential");
    const Vector fine = embed_values(v.grid, v.values, v.level);
    return Potential{v.grid, level, project_values(v.grid, fine, level), v.gauge_offset};
}

Vector fine_values(const Potential& v) { return embed_values(v.grid, v.values, v.level); }

Scalar norm_lp(const FineDensity& rho, Scalar p) { return lp_norm(rho.values, rho.grid.spacing(), p); }

Scalar norm_lp(const CoarseDensity& rho, Scalar p) { return lp_norm(rho.values, rho.cell_width(), p); }

Scalar distance_lp(const CoarseDensity& a, const CoarseDensity& b, Scalar p)
{
    check_same_grid(a.grid, b.grid);
    const int level = std::max(a.level, b.level);
    const Vector diff = refine(a, level).values - refine(b, level).values;
    return lp_norm(diff, ScaleHierarchy(a.grid).cell_width(level), p);
}

Scalar distance_lp(const FineDensity& a, const FineDensity& b, Scalar p)
{
    check_same_grid(a.grid, b.grid);
    return lp_norm(a.values - b.values, a.grid.spacing(), p);
}

Scalar inner(const Potential& v, const CoarseDensity& rho)
{
    check_same_grid(v.grid, rho.grid);
    if (v.level > rho.level)
        throw InvalidArgument("inner: potential is finer than the coarse density");
    const Vector cells = refine(v, rho.level).values;
    return rho.cell_width() * cells.dot(rho.values);
}

Scalar inner(const Potential& v, const FineDensity& rho)
{
    check_same_grid(v.grid, rho.grid);
    return rho.grid.spacing() * fine_values(v).dot(rho.values);
}

Vector discrete_gradient(const FineDensity& rho)
{
    const int m = rho.grid.points();
    const Scalar h = rho.grid.spacing();
    const Vector& f = rho.values;
    Vector g(m);
    g[0] = (f[1] - f[0]) / h;
    g[m - 1] = (f[m - 1] - f[m - 2]) / h;
    for (int i = 1; i < m - 1; ++i)
        g[i] = (f[i + 1] - f[i - 1]) / (2 * h);
    return g;
}

VonWeizsacker von_weizsacker(const FineDensity& rho, WallTerms walls)
{
    if (!rho.is_nonnegative())
        throw InvalidArgument("von_weizsacker: density has negative values");
    const int m = rho.grid.points();
    const Scalar h = rho.grid.spacing();
    const Vector grad = discrete_gradient(rho);

    VonWeizsacker out;
    for (int i = 0; i < m; ++i) {
        if (rho.values[i] == 0) {
            if (grad[i] != 0) {
                out.value = out.gradient_form = kInfinity;
                out.discrepancy = 0;
                return out;
            }
            continue;
        }
        out.gradient_form += h * grad[i] * grad[i] / (8 * rho.values[i]);
    }

    const Vector root = rho.values.cwiseSqrt();
    Scalar sum = 0;
    for (int i = 0; i + 1 < m; ++i)
        sum += (root[i + 1] - root[i]) * (root[i + 1] - root[i]);
    if (walls == WallTerms::include)
        sum += root[0] * root[0] + root[m - 1] * root[m - 1];
    out.value = 0.5 * sum / h;
    out.discrepancy = std::abs(out.value - out.gradient_form);
    return out;
}

Scalar sqrt_h1_seminorm_sq(const FineDensity& rho, WallTerms walls)
{
    return 2 * von_weizsacker(rho, walls).value;
}

}  // namespace cgdft
