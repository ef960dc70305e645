#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avt/logspace.hpp"
#include "avt/model.hpp"
#include "avt/trellis.hpp"

namespace avt {

/// Maximal partial likelihoods p^(r)_ij(u): the best path from state i at u to state j at
/// u+r+1 through r intermediate states, weighting the emissions x[u+1..u+r].
/// Positions are 0-based indices into the observation sequence.
class PartialLikelihood {
 public:
  PartialLikelihood(const HmmModel& model, std::span<const double> obs);

  /// log p^(r)(u) by left-to-right composition. Requires u + r < n.
  LogMatrix matrix(std::size_t u, std::size_t r) const;
  /// Same quantity through the split at intermediate index `split` in 1..r:
  /// p^(r)_ij(u) = max_q p^(split-1)_iq(u) f_q(x[u+split]) p^(r-split)_qj(u+split).
  LogMatrix matrix_split(std::size_t u, std::size_t r, std::size_t split) const;
  /// Single entry via the split at 1 (first intermediate emission).
  double value(std::size_t u, int i, int j, std::size_t r) const;

  const HmmModel& model() const { return *model_; }
  std::size_t length() const { return obs_.size(); }
  const std::vector<double>& log_emissions(std::size_t position) const { return log_f_[position]; }

 private:
  const HmmModel* model_;
  std::span<const double> obs_;
  std::vector<std::vector<double>> log_f_;
};

/// t^(r)(u, j) for r >= 1, from the trellis column u and p^(r-1)(u).
StateSet t_r_set(const ScoreTrellis& trellis, const PartialLikelihood& partial, std::size_t u, int j,
                 std::size_t r);

/// Node criterion: l in t^(r+1)(u, j) for every j, given column u and p^(r)(u).
bool satisfies_node_criterion(std::span<const double> column, const LogMatrix& partial, int l,
                              double tolerance);

/// Whether x[u] is an l-node of order r (requires u + r < n).
bool is_node(const ScoreTrellis& trellis, const PartialLikelihood& partial, std::size_t u, int l,
             std::size_t r);

struct NodeRecord {
  std::size_t u = 0;  // 0-based position
  int l = 0;          // 0-based state
  std::size_t r = 0;  // minimal order
  bool operator==(const NodeRecord&) const = default;
};

/// All (u, l) with their minimal order r <= r_max, sorted by u then l. Orders are bounded by
/// u + r < n - 1 so the looked-ahead observations stay inside the sequence.
std::vector<NodeRecord> detect_nodes(std::span<const double> obs, const HmmModel& model,
                                     std::size_t r_max, double tolerance = kDefaultTieTolerance);

}  // namespace avt
