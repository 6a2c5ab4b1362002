#pragma once

#include "cgdft/types.hpp"

#include <cstddef>

namespace cgdft {

/// Uniform interior grid of a hard-wall box [0, L].
///
/// Points sit at x_i = (i + 1) h, i = 0..M-1, with h = L / (M + 1); the
/// wavefunction vanishes on the walls x = 0 and x = L. Each point carries a
/// quadrature weight h (midpoint rule), so a density is normalized by
/// h * sum(values) = N and the region covered by the quadrature has length
/// M h.
class Grid {
public:
    Grid() = default;
    Grid(Scalar length, int points);

    Scalar length() const { return length_; }
    int points() const { return points_; }
    Scalar spacing() const { return spacing_; }
    /// Total quadrature length M h.
    Scalar span() const { return spacing_ * points_; }
    Scalar coordinate(int i) const { return spacing_ * (i + 1); }
    /// log2(M).
    int depth() const { return depth_; }

    friend bool operator==(const Grid& a, const Grid& b)
    {
        return a.length_ == b.length_ && a.points_ == b.points_;
    }

private:
    Scalar length_ = 1.0;
    int points_ = 16;
    Scalar spacing_ = 1.0 / 17.0;
    int depth_ = 4;
};

/// Nested dyadic partitions of a Grid.
///
/// Level n has 2^n equal contiguous cells of M / 2^n points; level 0 is the
/// whole box and level depth() puts one grid point in each cell. Every cell
/// of level n + 1 is half of a level-n cell.
class ScaleHierarchy {
public:
    ScaleHierarchy() = default;
    explicit ScaleHierarchy(Grid grid) : grid_(grid) {}

    const Grid& grid() const { return grid_; }
    int deepest_level() const { return grid_.depth(); }
    bool has_level(int n) const { return n >= 0 && n <= deepest_level(); }
    void require_level(int n) const;

    int cell_count(int n) const { return 1 << n; }
    int points_per_cell(int n) const { return grid_.points() >> n; }
    /// Quadrature width of one level-n cell (points_per_cell * h).
    Scalar cell_width(int n) const { return points_per_cell(n) * grid_.spacing(); }
    /// Maximum cell diameter D_n.
    Scalar diameter(int n) const { return cell_width(n); }
    /// Wall-to-wall length of the hard-wall box confining a particle to one
    /// level-n cell: (points_per_cell + 1) h.
    Scalar confinement_length(int n) const { return (points_per_cell(n) + 1) * grid_.spacing(); }
    int cell_of(int point, int n) const { return point / points_per_cell(n); }
    int first_point(int cell, int n) const { return cell * points_per_cell(n); }
    /// Coordinate of the centre of a cell.
    Scalar cell_center(int cell, int n) const;

private:
    Grid grid_;
};

}  // namespace cgdft
