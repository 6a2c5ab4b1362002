#pragma once

#include "cgdft/density.hpp"
#include "cgdft/engine.hpp"
#include "cgdft/sampling.hpp"
#include "cgdft/types.hpp"

#include <optional>
#include <stop_token>
#include <vector>

namespace cgdft {

struct InversionOptions {
    /// Stop once ||pi_n rho_v - rho||_1 <= tolerance.
    Scalar tolerance = 1e-6;
    int max_iterations = 2000;
    /// Give up early once the best residual has not dropped by 10% over this
    /// many iterations (tunnelling-limited targets oscillate indefinitely).
    int stall_iterations = 200;
    Scalar gauge_tolerance = 1e-8;
    /// Extra Newton steps taken after the tolerance is met, while they keep
    /// shrinking the residual.
    int polish_steps = 3;
    /// Warm start; may live on any level not finer than the target density.
    std::optional<Potential> initial;
    /// Largest ground-space degeneracy handled by the mixing solve.
    int max_degeneracy = 8;
    /// Accept densities with zero cell averages; the ascent then only
    /// approaches F from below and never reports convergence there.
    bool allow_boundary = false;
    std::stop_token stop;
};

struct IterationRecord {
    int iteration = 0;
    Scalar residual = 0;
    Scalar dual_value = 0;
    Scalar step = 0;
    int degeneracy = 1;
};

/// Outcome of the density-to-potential inversion at one level.
struct InversionResult {
    int level = 0;
    CoarseDensity target;
    /// F^n[rho] (the maximal dual value E[v] - <v, rho>).
    Scalar F_value = 0;
    /// Representing potential, gauge fixed so that E[v] = 0.
    Potential potential;
    /// Fine-grid ensemble ground density of `potential` (an element of Lambda_n rho).
    FineDensity lambda_density;
    Vector mixing_weights;
    int degeneracy = 1;
    Scalar residual = kInfinity;
    int iterations = 0;
    bool converged = false;
    bool cancelled = false;
    /// |E[potential]| after gauge fixing.
    Scalar gauge_error = 0;
    /// |F + <potential, rho>|, the other form of the gauge convention.
    Scalar gauge_identity_error = 0;
    std::vector<IterationRecord> trace;
};

/// The dual objective G(v) = E[v] - <v, rho> and its supergradient at one
/// level-n cell potential.
struct DualEvaluation {
    Vector cells;
    GroundSpace ground;
    Vector weights;
    FineDensity density;
    /// |R| (pi_n rho_v - rho)_R.
    Vector gradient;
    Scalar dual = 0;
    /// L1 norm of the gradient, i.e. ||pi_n rho_v - rho||_1.
    Scalar residual = 0;
};

DualEvaluation evaluate_dual(const Engine& engine, const CoarseDensity& rho, const Vector& cells,
                             const Vector& warm_start = {}, int max_degeneracy = 8);

/// -chi at the evaluated point (positive semidefinite, constants in the kernel).
Matrix dual_curvature(const Engine& engine, const CoarseDensity& rho, const DualEvaluation& point);

/// E[v]: ground energy of T + V_ee + v.
Scalar ground_energy(const Engine& engine, const Potential& v);

/// Weights w >= 0, sum w = 1 minimizing ||A w - b||_2 (A: one column per
/// candidate density). Exact active-set enumeration; at most 8 columns.
Vector simplex_least_squares(const Matrix& a, const Vector& b);

/// Maximize the concave map v -> E[v] - <v, rho> over level-n cell potentials.
///
/// The supergradient is the cell-occupation mismatch |R| (pi_n rho_v - rho)_R.
/// Steps are Newton steps on the exact static response (damped and
/// backtracked on the dual value), which is an accelerated supergradient
/// ascent. At a degenerate ground space the ensemble weights solve a
/// simplex-constrained least-squares fit of the target. Throws
/// NotInteriorDensity unless every cell average is positive; a hit iteration
/// cap is reported through `converged`.
InversionResult lieb_maximize(const Engine& engine, const CoarseDensity& rho, const InversionOptions& opts = {});

struct ExcessReport {
    Scalar delta = 0;
    Scalar F_part = 0;
    Scalar pairing_part = 0;
    Scalar E_part = 0;
};

/// Delta[rho, v] = F[rho] + <v, rho> - E[v] with F taken from a finished inversion.
ExcessReport energetic_excess(const Engine& engine, const InversionResult& rho_inversion, const Potential& v);
/// Inverts rho first; throws NonConvergence if that inversion fails.
ExcessReport energetic_excess(const Engine& engine, const CoarseDensity& rho, const Potential& v,
                              const InversionOptions& opts = {});

struct SubgradientCheck {
    bool holds = true;
    int evaluated = 0;
    /// min over samples of F[rho'] - F[rho] + <v, rho' - rho>.
    Scalar worst_slack = kInfinity;
    std::optional<CoarseDensity> violation;
};

/// Checks F[rho'] >= F[rho] - <v, rho' - rho> (i.e. -v is a subgradient of F
/// at rho) within 1e-8. Each cell direction rho +- t (e_R - mean) is scanned
/// first, then `sample_count` random interior rho' at the same level.
SubgradientCheck subgradient_check(const Engine& engine, const CoarseDensity& rho, const Potential& v,
                                   int sample_count, Rng& rng, const InversionOptions& opts = {});

}  // namespace cgdft
