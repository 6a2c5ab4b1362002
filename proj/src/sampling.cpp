#include "cgdft/sampling.hpp"

#include <numbers>

namespace cgdft {

FineDensity random_smooth_density(const Grid& grid, int particles, Rng& rng, const SmoothDensityOptions& opts)
{
    std::normal_distribution<Scalar> gauss;
    Vector coeff(opts.modes);
    for (int k = 0; k < opts.modes; ++k)
        coeff[k] = opts.amplitude / (k + 1) * gauss(rng);
    const Scalar l = grid.length();
    Vector values(grid.points());
    for (int i = 0; i < grid.points(); ++i) {
        const Scalar x = grid.coordinate(i);
        Scalar exponent = 0;
        for (int k = 0; k < opts.modes; ++k)
            exponent += coeff[k] * std::sin((k + 1) * std::numbers::pi * x / l);
        Scalar value = std::exp(exponent);
        if (opts.wall_envelope) {
            const Scalar s = std::sin(std::numbers::pi * x / l);
            value *= s * s;
        }
        values[i] = value;
    }
    return normalized_density(grid, std::move(values), particles);
}

CoarseDensity random_interior_density(const Grid& grid, int level, int particles, Rng& rng, Scalar spread)
{
    std::uniform_real_distribution<Scalar> uniform(-1, 1);
    Vector values(1 << level);
    for (auto& value : values)
        value = 1 + spread * uniform(rng);
    return normalized_coarse_density(grid, level, std::move(values), particles);
}

Vector random_direction(const Grid& grid, int level, Rng& rng)
{
    std::normal_distribution<Scalar> gauss;
    const int cells = 1 << level;
    if (cells < 2)
        return Vector::Zero(cells);
    Vector d(cells);
    for (auto& value : d)
        value = gauss(rng);
    d.array() -= d.mean();
    return d / lp_norm(d, ScaleHierarchy(grid).cell_width(level), 1);
}

Potential random_smooth_potential(const Grid& grid, int level, Rng& rng, Scalar amplitude, int modes)
{
    const ScaleHierarchy hierarchy(grid);
    std::normal_distribution<Scalar> gauss;
    Vector coeff(modes);
    for (auto& c : coeff)
        c = amplitude * gauss(rng) / std::sqrt(static_cast<Scalar>(modes));
    Vector values(hierarchy.cell_count(level));
    for (int c = 0; c < values.size(); ++c) {
        const Scalar x = hierarchy.cell_center(c, level);
        Scalar v = 0;
        for (int k = 0; k < modes; ++k)
            v += coeff[k] * std::cos((k + 1) * std::numbers::pi * x / grid.length());
        values[c] = v;
    }
    return make_potential(grid, level, std::move(values));
}

Potential random_potential(const Grid& grid, int level, Rng& rng, Scalar amplitude)
{
    std::uniform_real_distribution<Scalar> uniform(-amplitude, amplitude);
    Vector values(1 << level);
    for (auto& value : values)
        value = uniform(rng);
    return make_potential(grid, level, std::move(values));
}

}  // namespace cgdft
