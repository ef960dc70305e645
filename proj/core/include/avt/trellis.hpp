#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avt/logspace.hpp"
#include "avt/model.hpp"

namespace avt {

/// Where the first column's transition mass comes from: the initial distribution, or the
/// transition row of a designated state (used for segments that follow a node).
class StartRow {
 public:
  static StartRow initial() { return StartRow(-1); }
  static StartRow after(int state) { return StartRow(state); }

  bool is_initial() const { return state_ < 0; }
  int state() const { return state_; }
  double log_weight(const HmmModel& model, int target) const {
    return is_initial() ? safe_log(model.initial(static_cast<std::size_t>(target)))
                        : model.log_transition(static_cast<std::size_t>(state_),
                                               static_cast<std::size_t>(target));
  }

 private:
  explicit StartRow(int state) : state_(state) {}
  int state_;
};

struct Alignment {
  std::vector<int> path;
  double log_likelihood = kNegInf;
};

/// Viterbi scores in log space with full tie sets.
///
/// Columns are stored renormalized (column max subtracted) together with the removed
/// offset, so log_delta() returns the absolute score while comparisons run on O(1) values.
/// Positions are 0-based: column u scores x[0..u].
class ScoreTrellis {
 public:
  std::size_t length() const { return offsets_.size(); }
  std::size_t states() const { return k_; }
  double tolerance() const { return tolerance_; }

  double log_delta(std::size_t u, int l) const {
    const double v = normalized_[u * k_ + static_cast<std::size_t>(l)];
    return v == kNegInf ? kNegInf : v + offsets_[u];
  }
  double normalized(std::size_t u, int l) const { return normalized_[u * k_ + static_cast<std::size_t>(l)]; }
  std::vector<double> normalized_column(std::size_t u) const {
    return {normalized_.begin() + static_cast<std::ptrdiff_t>(u * k_),
            normalized_.begin() + static_cast<std::ptrdiff_t>((u + 1) * k_)};
  }

  /// t(u, j): states l at position u maximizing delta_u(l) + log p_lj. Defined for u < n-1.
  StateSet tie_set(std::size_t u, int j) const { return ties_[u * k_ + static_cast<std::size_t>(j)]; }
  /// States attaining the terminal maximum.
  StateSet terminal_argmax() const;
  double max_terminal() const { return offsets_.back(); }

 private:
  friend ScoreTrellis build_trellis(std::span<const double>, const HmmModel&, StartRow, double);

  std::size_t k_ = 0;
  double tolerance_ = kDefaultTieTolerance;
  std::vector<double> normalized_;
  std::vector<double> offsets_;
  std::vector<StateSet> ties_;
};

/// Throws Error(AllPathsImpossible) once a column is entirely -inf.
ScoreTrellis build_trellis(std::span<const double> obs, const HmmModel& model,
                           StartRow start = StartRow::initial(),
                           double tolerance = kDefaultTieTolerance);

/// Reverse-lexicographic maximum of the Viterbi alignment set.
///
/// The order compares the last differing coordinate, so the maximum fixes v_n first (the
/// largest terminal argmax), then the largest admissible v_{n-1} given v_n, and so on. Every
/// state with a finite score has a non-empty tie set whose members have finite scores, so
/// the greedy largest-index backtrack never gets stuck and returns that maximum.
Alignment canonical_alignment(const ScoreTrellis& trellis);

/// Reverse-lexicographic maximum among paths x[0..u] ending in state l with maximal prefix
/// likelihood. Throws Error(StateUnreachable) if delta_u(l) = -inf.
Alignment constrained_alignment(const ScoreTrellis& trellis, std::size_t u, int l);

/// log pi_{q1} + sum log p + sum log f, with the first factor taken from `start`.
double log_lambda(std::span<const int> path, std::span<const double> obs, const HmmModel& model,
                  StartRow start = StartRow::initial());

struct EnumerationResult {
  double max_log_likelihood = kNegInf;
  std::vector<std::vector<int>> argmax_paths;  // in increasing reverse-lex order
};

struct EnumerationLimits {
  double max_paths = 1e6;           // bound on K^n
  std::size_t max_argmax = 1000000;  // cap on |V|
  double tolerance = kDefaultTieTolerance;
};

/// Exhaustive scoring of all K^n paths. Throws Error(InstanceTooLarge).
EnumerationResult enumerate_alignments(std::span<const double> obs, const HmmModel& model,
                                       StartRow start = StartRow::initial(),
                                       EnumerationLimits limits = {});

/// True when a precedes b in reverse-lexicographic order.
bool reverse_lex_less(std::span<const int> a, std::span<const int> b);

}  // namespace avt
