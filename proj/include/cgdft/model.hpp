#pragma once

#include "cgdft/grid.hpp"
#include "cgdft/types.hpp"

#include <cmath>

namespace cgdft {

/// N spinless fermions in the hard-wall box with a soft-Coulomb pair interaction
/// V_ee(x, x') = coupling / sqrt((x - x')^2 + softening^2). Units hbar = m = 1.
struct ModelSpec {
    Grid grid;
    int particles = 1;
    Scalar coupling = 1.0;
    Scalar softening = 0.5;

    Scalar pair_interaction(Scalar separation) const
    {
        return coupling / std::sqrt(separation * separation + softening * softening);
    }

    /// Same grid and particle number with the interaction switched off.
    ModelSpec non_interacting() const
    {
        ModelSpec out = *this;
        out.coupling = 0;
        return out;
    }
};

/// Throws InvalidArgument unless N in {1, 2}, coupling >= 0 and softening > 0.
void validate(const ModelSpec& spec);

/// Ground-state intrinsic energy of `particles` fermions confined by hard
/// walls to a single level-n cell (all cells are identical). Uses the
/// coupling and softening of `spec`; +inf when the cell has fewer grid points
/// than particles.
Scalar f_max(const ModelSpec& spec, int level);

}  // namespace cgdft
