#include "cgdft/grid.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace cgdft {

Grid::Grid(Scalar length, int points)
{
    if (!(length > 0) || !std::isfinite(length))
        throw InvalidArgument("Grid: length must be positive and finite");
    if (points < 16 || !std::has_single_bit(static_cast<unsigned>(points)))
        throw InvalidArgument("Grid: points must be a power of two >= 16, got " + std::to_string(points));
    length_ = length;
    points_ = points;
    spacing_ = length / (points + 1);
    depth_ = std::countr_zero(static_cast<unsigned>(points));
}

void ScaleHierarchy::require_level(int n) const
{
    if (!has_level(n))
        throw InvalidArgument("level " + std::to_string(n) + " outside hierarchy [0, " +
                              std::to_string(deepest_level()) + "]");
}

Scalar ScaleHierarchy::cell_center(int cell, int n) const
{
    const int first = first_point(cell, n);
    const int last = first + points_per_cell(n) - 1;
    return 0.5 * (grid_.coordinate(first) + grid_.coordinate(last));
}

}  // namespace cgdft
