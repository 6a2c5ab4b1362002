#pragma once

#include "cgdft/duality.hpp"

namespace cgdft {

/// The same model with the pair interaction switched off.
Engine non_interacting(const Engine& engine);

/// T_s[rho]: the intrinsic energy of the non-interacting system.
InversionResult ts(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts = {});

/// Hartree energy of the cell-uniform charge embed(rho) with the model's
/// soft-Coulomb kernel, as an exact double sum over grid points. Quasi-densities
/// (negative cells) are allowed.
Scalar hartree_energy(const ModelSpec& spec, const CoarseDensity& rho);

/// Cell averages of the Hartree field of embed(rho); linear in rho and the
/// exact derivative of hartree_energy.
Potential hartree_potential(const ModelSpec& spec, const CoarseDensity& rho);

/// v_xc = v_s - v - phi, cell by cell.
Potential exchange_correlation_potential(const Potential& v, const Potential& v_s, const Potential& phi);

struct KsReport {
    int level = 0;
    Scalar F = 0;
    Scalar T_s = 0;
    Scalar E_H = 0;
    Scalar E_xc = 0;
    /// Interacting and Kohn-Sham potentials, each gauge fixed so its own E = 0.
    Potential v;
    Potential v_s;
    Potential phi;
    Potential v_xc;
    InversionResult interacting;
    InversionResult kohn_sham;
};

/// Exact Kohn-Sham split by double inversion: E_xc = F - T_s - E_H and
/// v_xc = v_s - v - phi. Throws NonConvergence naming the system that failed.
KsReport ks_decompose(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts = {});

}  // namespace cgdft
