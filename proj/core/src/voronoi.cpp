#include "avt/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/tools/roots.hpp>

#include "avt/errors.hpp"

namespace avt {

int voronoi_partition(double x, const std::vector<EmissionModel>& emissions, std::span<const double> weights) {
  int best = -1;
  double best_value = 0.0;
  for (std::size_t l = 0; l < emissions.size(); ++l) {
    const double v = weights[l] * emissions[l].density(x);
    if (v > best_value) {
      best_value = v;
      best = static_cast<int>(l);
    }
  }
  if (best >= 0) return best;
  return static_cast<int>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

namespace {

// Bulk of a continuous component, used to place the search grid.
std::pair<double, double> bulk(const EmissionModel& e) {
  if (const auto* g = std::get_if<Gaussian>(&e.parameters())) {
    const double sd = std::sqrt(g->variance);
    return {g->mean - 12.0 * sd, g->mean + 12.0 * sd};
  }
  const auto& x = std::get<Exponential>(e.parameters());
  const double far = 40.0 / x.rate;
  return x.orientation == HalfLine::Positive ? std::pair{0.0, far} : std::pair{-far, 0.0};
}

}  // namespace

std::vector<std::vector<Interval>> voronoi_cells(const std::vector<EmissionModel>& emissions,
                                                 std::span<const double> weights) {
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& e : emissions) {
    if (e.family() == Family::Discrete) throw Error(ErrorCode::InvalidArgument, "Voronoi cells need continuous emissions");
    const auto [a, b] = bulk(e);
    lo = first ? a : std::min(lo, a);
    hi = first ? b : std::max(hi, b);
    first = false;
  }
  const double margin = 0.01 * (hi - lo) + 1.0;
  lo -= margin;
  hi += margin;

  constexpr std::size_t kGrid = 20000;
  std::set<double> points;
  for (std::size_t i = 0; i <= kGrid; ++i) points.insert(lo + (hi - lo) * static_cast<double>(i) / kGrid);
  for (const auto& e : emissions)
    if (e.family() == Family::Exponential) points.insert(0.0);

  auto label = [&](double x) { return voronoi_partition(x, emissions, weights); };
  std::vector<std::vector<Interval>> cells(emissions.size());
  double start = -std::numeric_limits<double>::infinity();
  auto it = points.begin();
  double prev = *it;
  int current = label(prev);
  for (++it; it != points.end(); ++it) {
    const double x = *it;
    const int next = label(x);
    if (next != current) {
      const int left = current;
      auto sign = [&](double t) { return label(t) == left ? -1.0 : 1.0; };
      const auto [a, b] = boost::math::tools::bisect(sign, prev, x, boost::math::tools::eps_tolerance<double>(52));
      const double boundary = 0.5 * (a + b);
      cells[static_cast<std::size_t>(current)].push_back({start, boundary});
      start = boundary;
      current = next;
    }
    prev = x;
  }
  cells[static_cast<std::size_t>(current)].push_back({start, std::numeric_limits<double>::infinity()});
  return cells;
}

}  // namespace avt
