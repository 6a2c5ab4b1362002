#pragma once

#include "cgdft/duality.hpp"

#include <string>
#include <vector>

namespace cgdft {

/// F^n at a level-n point that may sit on or outside the positive cone.
struct FunctionalValue {
    /// +inf outside the cone (some negative cell average).
    Scalar value = kInfinity;
    /// False on the cone boundary, where `value` is the best dual lower bound.
    bool converged = false;
    Scalar residual = kInfinity;
};

struct CalculusOptions {
    InversionOptions inversion;
    /// Iteration cap for points with a zero cell average (F is finite there
    /// but no potential represents it).
    int boundary_iterations = 60;
};

FunctionalValue evaluate_functional(const Engine& engine, const CoarseDensity& rho, const CalculusOptions& opts = {});

struct QuotientTrace {
    std::vector<Scalar> s_values;
    /// (F[rho + s delta] - F[rho]) / s, +inf where rho + s delta leaves the cone.
    std::vector<Scalar> quotients;
    /// False where the inversion at rho + s delta stopped short (the quotient
    /// then uses a lower bound for F).
    std::vector<bool> converged;
    Scalar limit_estimate = kInfinity;
    /// Largest increase between consecutive finite quotients as s decreases.
    Scalar monotone_violation = 0;
    /// True when rho + s delta leaves the cone for some scheduled s.
    bool leaves_domain = false;
};

/// s = 2^-k, k = 3..12.
std::vector<Scalar> default_schedule();

/// One-sided directional derivative F'[rho; delta] from difference quotients.
///
/// `delta` is a level-n cell vector with zero total mass (throws otherwise).
/// The limit is the smallest-s quotient improved by one Richardson step.
QuotientTrace directional_derivative(const Engine& engine, const CoarseDensity& rho, const Vector& delta,
                                     const std::vector<Scalar>& schedule = default_schedule(),
                                     const CalculusOptions& opts = {});

enum class SliceClass { finite_both_sides, finite_one_side, isolated_point };

std::string to_string(SliceClass c);

struct SliceReport {
    std::vector<Scalar> s_grid;
    std::vector<Scalar> F_values;
    std::vector<bool> converged;
    SliceClass classification = SliceClass::isolated_point;
    /// Most negative second difference over consecutive finite points (0 if none).
    Scalar convexity_violation = 0;
    bool convex = true;
};

/// F^n along the line rho + s delta; `rho` may have zero cell averages.
SliceReport slice_scan(const Engine& engine, const CoarseDensity& rho, const Vector& delta,
                       const std::vector<Scalar>& s_grid, const CalculusOptions& opts = {});

/// Delta[rho, v] <= eps, i.e. v is an eps-subgradient (with the sign convention of F).
bool epsilon_subdifferential_check(const Engine& engine, const CoarseDensity& rho, const Potential& v, Scalar eps,
                                   const InversionOptions& opts = {});
bool epsilon_subdifferential_check(const Engine& engine, const InversionResult& rho_inversion, const Potential& v,
                                   Scalar eps);

struct EkelandRepair {
    bool found = false;
    CoarseDensity density;
    Potential potential;
    /// ||rho~ - rho||_1 and ||v~ - v||_inf.
    Scalar density_distance = 0;
    Scalar potential_distance = 0;
    /// Delta[rho~, v~] after re-inverting rho~.
    Scalar excess = 0;
    Scalar initial_excess = 0;
    int iterations = 0;
    std::string message;
};

/// Nearby exact pair for an eps-approximate pair (rho, v).
///
/// Maximizes u -> E[v + u] - <u, rho> over the box ||u||_inf <= eps / lambda
/// by projected Newton (at most 50 steps) and returns v~ = v + u together
/// with rho~ = pi_n(ground density of v~). At an exact maximizer
/// ||rho~ - rho||_1 <= Delta[rho, v] / (eps / lambda) <= lambda. Throws
/// InvalidArgument if Delta[rho, v] > eps or lambda <= 0; a search that misses
/// the certificates is reported through `found` and `message`.
EkelandRepair ekeland_repair(const Engine& engine, const CoarseDensity& rho, const Potential& v, Scalar eps,
                             Scalar lambda, const InversionOptions& opts = {});

}  // namespace cgdft
