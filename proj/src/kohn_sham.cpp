#include "cgdft/kohn_sham.hpp"

#include <string>

namespace cgdft {

namespace {

/// h * sum_j K(x_i - x_j) f_j on the fine grid.
Vector hartree_field(const ModelSpec& spec, const Vector& fine)
{
    const Grid& grid = spec.grid;
    const int m = grid.points();
    const Scalar h = grid.spacing();
    Vector kernel(m);
    for (int d = 0; d < m; ++d)
        kernel[d] = spec.pair_interaction(d * h);
    Vector field = Vector::Zero(m);
    for (int i = 0; i < m; ++i) {
        Scalar sum = 0;
        for (int j = 0; j < m; ++j)
            sum += kernel[std::abs(i - j)] * fine[j];
        field[i] = h * sum;
    }
    return field;
}

}  // namespace

Engine non_interacting(const Engine& engine) { return Engine(engine.spec().non_interacting(), engine.options()); }

InversionResult ts(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts)
{
    return lieb_maximize(non_interacting(engine), rho, opts);
}

Scalar hartree_energy(const ModelSpec& spec, const CoarseDensity& rho)
{
    const Vector fine = embed_values(rho.grid, rho.values, rho.level);
    return 0.5 * spec.grid.spacing() * fine.dot(hartree_field(spec, fine));
}

Potential hartree_potential(const ModelSpec& spec, const CoarseDensity& rho)
{
    const Vector fine = embed_values(rho.grid, rho.values, rho.level);
    return Potential{rho.grid, rho.level, project_values(rho.grid, hartree_field(spec, fine), rho.level), 0};
}

Potential exchange_correlation_potential(const Potential& v, const Potential& v_s, const Potential& phi)
{
    if (v.level != v_s.level || v.level != phi.level)
        throw InvalidArgument("exchange_correlation_potential: potentials live on different levels");
    return Potential{v.grid, v.level, v_s.values - v.values - phi.values, v_s.gauge_offset - v.gauge_offset};
}

KsReport ks_decompose(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts)
{
    KsReport r;
    r.level = rho.level;
    r.interacting = lieb_maximize(engine, rho, opts);
    if (!r.interacting.converged)
        throw NonConvergence("ks_decompose: interacting inversion failed (residual " +
                             std::to_string(r.interacting.residual) + ")");
    r.kohn_sham = ts(engine, rho, opts);
    if (!r.kohn_sham.converged)
        throw NonConvergence("ks_decompose: non-interacting inversion failed (residual " +
                             std::to_string(r.kohn_sham.residual) + ")");
    r.F = r.interacting.F_value;
    r.T_s = r.kohn_sham.F_value;
    r.E_H = hartree_energy(engine.spec(), rho);
    r.E_xc = r.F - r.T_s - r.E_H;
    r.v = r.interacting.potential;
    r.v_s = r.kohn_sham.potential;
    r.phi = hartree_potential(engine.spec(), rho);
    r.v_xc = exchange_correlation_potential(r.v, r.v_s, r.phi);
    return r;
}

}  // namespace cgdft
