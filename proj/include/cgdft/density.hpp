#pragma once

#include "cgdft/grid.hpp"
#include "cgdft/types.hpp"

#include <cmath>

namespace cgdft {

/// Grid-resolved density (units 1/length).
///
/// `particles` is the nominal particle number; factories check
/// h * sum(values) == particles. Perturbations in the sum-zero space use
/// particles == 0.
struct FineDensity {
    Grid grid;
    Vector values;
    int particles = 0;

    Scalar mass() const { return grid.spacing() * values.sum(); }
    bool is_nonnegative() const { return (values.array() >= 0).all(); }
    bool is_positive() const { return (values.array() > 0).all(); }
};

/// Per-cell averages of a density over the level-n partition.
struct CoarseDensity {
    Grid grid;
    int level = 0;
    Vector values;
    int particles = 0;

    Scalar cell_width() const { return ScaleHierarchy(grid).cell_width(level); }
    Scalar mass() const { return cell_width() * values.sum(); }
    /// Membership in X+ (all averages >= 0).
    bool is_nonnegative() const { return (values.array() >= 0).all(); }
    /// Membership in X++ (all averages > 0).
    bool is_interior() const { return (values.array() > 0).all(); }
};

/// Cell-wise constant external potential.
///
/// `gauge_offset` records the constant that has been added to `values` by
/// gauge fixing; it is bookkeeping only.
struct Potential {
    Grid grid;
    int level = 0;
    Vector values;
    Scalar gauge_offset = 0;

    Scalar sup_norm() const { return values.cwiseAbs().maxCoeff(); }
};

/// Normalization tolerance used by the validating factories.
inline constexpr Scalar kMassTolerance = 1e-10;

FineDensity make_fine_density(const Grid& grid, Vector values, int particles);
CoarseDensity make_coarse_density(const Grid& grid, int level, Vector values, int particles);
Potential make_potential(const Grid& grid, int level, Vector values);

/// Uniform density N / (M h) on the grid.
FineDensity uniform_density(const Grid& grid, int particles);
/// Rescale non-negative values so that h * sum = particles.
FineDensity normalized_density(const Grid& grid, Vector values, int particles);
CoarseDensity normalized_coarse_density(const Grid& grid, int level, Vector values, int particles);

/// v + c, with the shift recorded in gauge_offset.
Potential shifted(const Potential& v, Scalar c);

/// Cell averages of fine values over the level-n partition.
Vector project_values(const Grid& grid, const Vector& fine, int level);
/// Piecewise-constant fine values of a level-n cell vector.
Vector embed_values(const Grid& grid, const Vector& cells, int level);

/// The scale-n projection: cell averages, particle number preserved.
CoarseDensity project(const FineDensity& rho, int level);
/// Coarse density at a finer level m >= rho.level (exact refinement).
CoarseDensity refine(const CoarseDensity& rho, int level);
/// The isometric embedding as a piecewise-constant fine density.
FineDensity embed(const CoarseDensity& rho);
/// Potential lifted to a finer level (or the grid when level = depth).
Potential refine(const Potential& v, int level);
/// Fine-grid values of a cell-wise potential.
Vector fine_values(const Potential& v);

/// L^p norm (h * sum |f|^p)^(1/p) of raw grid values; p = kInfinity gives the max norm.
template <typename Derived>
Scalar lp_norm(const Eigen::MatrixBase<Derived>& values, Scalar weight, Scalar p)
{
    if (!(p >= 1))
        throw InvalidArgument("lp_norm: p must be >= 1");
    if (values.size() == 0)
        return 0;
    if (std::isinf(p))
        return values.cwiseAbs().maxCoeff();
    if (p == 1)
        return weight * values.cwiseAbs().sum();
    if (p == 2)
        return std::sqrt(weight * values.squaredNorm());
    return std::pow(weight * values.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

Scalar norm_lp(const FineDensity& rho, Scalar p);
/// Norm of the embedded coarse density.
Scalar norm_lp(const CoarseDensity& rho, Scalar p);
/// ||a - b||_p on the embedded values of two coarse densities, at the finer of the two levels.
Scalar distance_lp(const CoarseDensity& a, const CoarseDensity& b, Scalar p);
Scalar distance_lp(const FineDensity& a, const FineDensity& b, Scalar p);

/// Pairing sum_R v_R rho_R |R|. The potential level must not exceed the density level.
Scalar inner(const Potential& v, const CoarseDensity& rho);
/// Grid quadrature of v * rho; exact because v is piecewise constant.
Scalar inner(const Potential& v, const FineDensity& rho);

/// Central differences in the interior, one-sided differences at the two end points.
Vector discrete_gradient(const FineDensity& rho);

enum class WallTerms {
    /// The density continues as zero beyond the walls (the Dirichlet box).
    include,
    /// Only differences between interior grid points enter.
    exclude,
};

struct VonWeizsacker {
    /// (1/2) h sum |D sqrt(rho)|^2 with forward differences (exact kinetic
    /// energy of the nodeless orbital sqrt(rho h)).
    Scalar value = 0;
    /// h sum |grad rho|^2 / (8 rho) with the central-difference gradient.
    Scalar gradient_form = 0;
    /// |value - gradient_form|.
    Scalar discrepancy = 0;
};

/// von Weizsacker kinetic energy in units hbar = m = 1 (kinetic operator -1/2 d^2/dx^2).
///
/// Returns +inf in both forms when rho vanishes at a point where its gradient
/// does not; points with rho = 0 and zero gradient are dropped.
VonWeizsacker von_weizsacker(const FineDensity& rho, WallTerms walls = WallTerms::include);

/// Squared H^1 seminorm of sqrt(rho): integral |grad sqrt(rho)|^2 = 2 T_W.
Scalar sqrt_h1_seminorm_sq(const FineDensity& rho, WallTerms walls = WallTerms::include);

}  // namespace cgdft
