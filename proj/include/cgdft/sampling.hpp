#pragma once

#include "cgdft/density.hpp"

#include <random>

namespace cgdft {

using Rng = std::mt19937_64;

struct SmoothDensityOptions {
    /// Number of Fourier modes in the log-density.
    int modes = 4;
    /// Amplitude of mode k is drawn from N(0, (amplitude / k)^2).
    Scalar amplitude = 0.5;
    /// Multiply by sin^2(pi x / L) so the density vanishes at the walls.
    bool wall_envelope = true;
};

/// Strictly positive smooth density exp(sum_k a_k sin(k pi x / L)) (times the
/// wall envelope), normalized to `particles`.
FineDensity random_smooth_density(const Grid& grid, int particles, Rng& rng, const SmoothDensityOptions& opts = {});

/// Interior coarse density: cell averages proportional to 1 + spread * u with
/// u uniform in [-1, 1] (spread < 1 keeps every cell positive).
CoarseDensity random_interior_density(const Grid& grid, int level, int particles, Rng& rng, Scalar spread = 0.6);

/// Sum-zero cell vector with ||delta||_1 = 1 (cell widths included).
Vector random_direction(const Grid& grid, int level, Rng& rng);

/// Smooth potential sampled at cell centres: sum_k b_k cos(k pi x / L), k = 1..modes.
Potential random_smooth_potential(const Grid& grid, int level, Rng& rng, Scalar amplitude = 10, int modes = 3);

/// Cell-wise i.i.d. uniform potential in [-amplitude, amplitude].
Potential random_potential(const Grid& grid, int level, Rng& rng, Scalar amplitude = 10);

}  // namespace cgdft
