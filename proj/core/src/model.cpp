#include "avt/model.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <queue>

#include "avt/errors.hpp"

namespace avt {

namespace {

std::string short_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// States reachable from `source` along positive transitions (forward or reversed).
std::vector<int> bfs_levels(const std::vector<std::vector<double>>& p, std::size_t source, bool reversed) {
  const std::size_t k = p.size();
  std::vector<int> level(k, -1);
  std::queue<std::size_t> queue;
  level[source] = 0;
  queue.push(source);
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop();
    for (std::size_t j = 0; j < k; ++j) {
      const double w = reversed ? p[j][i] : p[i][j];
      if (w > 0.0 && level[j] < 0) {
        level[j] = level[i] + 1;
        queue.push(j);
      }
    }
  }
  return level;
}

}  // namespace

std::vector<std::string> diagnose(const ModelDescription& d) {
  std::vector<std::string> out;
  const std::size_t k = d.initial.size();
  if (k == 0) {
    out.push_back("model has no states");
    return out;
  }
  if (k > StateSet::kMaxStates) out.push_back("at most 64 states are supported");
  if (d.transition.size() != k) out.push_back("transition has " + std::to_string(d.transition.size()) +
                                              " rows, expected " + std::to_string(k));
  if (d.emissions.size() != k) out.push_back("emissions has " + std::to_string(d.emissions.size()) +
                                             " entries, expected " + std::to_string(k));
  bool square = d.transition.size() == k;
  for (std::size_t i = 0; i < d.transition.size(); ++i) {
    const auto& row = d.transition[i];
    if (row.size() != k) {
      out.push_back("row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) + " entries");
      square = false;
      continue;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!std::isfinite(row[j]) || row[j] < 0.0)
        out.push_back("entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is negative or not finite");
      sum += row[j];
    }
    if (std::abs(sum - 1.0) > 1e-12) out.push_back("row " + std::to_string(i + 1) + " sums to " + short_number(sum));
  }
  double initial_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::isfinite(d.initial[i]) || d.initial[i] < 0.0)
      out.push_back("initial entry " + std::to_string(i + 1) + " is negative or not finite");
    initial_sum += d.initial[i];
  }
  if (std::abs(initial_sum - 1.0) > 1e-12) out.push_back("initial sums to " + short_number(initial_sum));
  for (std::size_t l = 0; l < d.emissions.size(); ++l)
    for (const auto& problem : d.emissions[l].problems())
      out.push_back("emission " + std::to_string(l + 1) + ": " + problem);

  if (square) {
    const auto forward = bfs_levels(d.transition, 0, false);
    const auto backward = bfs_levels(d.transition, 0, true);
    bool irreducible = true;
    for (std::size_t i = 0; i < k; ++i)
      if (forward[i] < 0 || backward[i] < 0) irreducible = false;
    if (!irreducible) {
      out.push_back("transition matrix is reducible");
    } else {
      // Period = gcd over positive edges i->j of level(i) + 1 - level(j).
      int period = 0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          if (d.transition[i][j] > 0.0) period = std::gcd(period, std::abs(forward[i] + 1 - forward[j]));
      if (period != 1) out.push_back("transition matrix is periodic with period " + std::to_string(period));
    }
  }
  return out;
}

HmmModel::HmmModel(ModelDescription description) {
  auto problems = diagnose(description);
  if (!problems.empty()) throw ModelError(std::move(problems));
  transition_ = std::move(description.transition);
  initial_ = std::move(description.initial);
  emissions_ = std::move(description.emissions);
  const std::size_t k = initial_.size();
  log_transition_ = LogMatrix(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) log_transition_(i, j) = safe_log(transition_[i][j]);
}

std::variant<HmmModel, std::vector<std::string>> validate_model(ModelDescription description) {
  auto problems = diagnose(description);
  if (!problems.empty()) return problems;
  return HmmModel(std::move(description));
}

std::vector<double> HmmModel::log_densities(double x) const {
  std::vector<double> out(states());
  for (std::size_t l = 0; l < states(); ++l) out[l] = emissions_[l].log_density(x);
  return out;
}

HmmModel HmmModel::with_emissions(std::vector<EmissionModel> emissions) const {
  return HmmModel(ModelDescription{transition_, initial_, std::move(emissions)});
}

bool HmmModel::is_mixture() const {
  for (std::size_t i = 1; i < states(); ++i)
    if (transition_[i] != transition_[0]) return false;
  return true;
}

bool HmmModel::all_discrete() const {
  for (const auto& e : emissions_)
    if (e.family() != Family::Discrete) return false;
  return true;
}

std::size_t HmmModel::alphabet_size() const {
  std::size_t v = 0;
  for (const auto& e : emissions_) v = std::max(v, e.alphabet_size());
  return v;
}

std::vector<double> stationary_distribution(const HmmModel& model) {
  // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1; Gaussian elimination
  // with partial pivoting.
  const std::size_t k = model.states();
  std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) a[i][j] = model.transition(j, i) - (i == j ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < k; ++j) a[k - 1][j] = 1.0;
  a[k - 1][k] = 1.0;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= k; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<double> pi(k);
  for (std::size_t i = 0; i < k; ++i) pi[i] = a[i][k] / a[i][i];
  return pi;
}

}  // namespace avt
