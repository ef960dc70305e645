#pragma once

#include <span>
#include <vector>

#include "avt/emission.hpp"

namespace avt {

/// Smallest index l maximizing weights[l] * f_l(x). When every weighted density is zero the
/// point goes to the smallest index of maximal weight.
int voronoi_partition(double x, const std::vector<EmissionModel>& emissions,
                      std::span<const double> weights);

/// Cells S_l as unions of open intervals covering the real line up to boundary points.
/// Boundaries are bracketed on a grid spanning the bulk of every component and refined
/// by bisection.
std::vector<std::vector<Interval>> voronoi_cells(const std::vector<EmissionModel>& emissions,
                                                 std::span<const double> weights);

}  // namespace avt
