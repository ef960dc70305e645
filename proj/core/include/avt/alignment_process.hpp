#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "avt/barrier.hpp"
#include "avt/histogram.hpp"
#include "avt/model.hpp"
#include "avt/nodes.hpp"
#include "avt/simulate.hpp"

namespace avt {

/// A node used as a segment boundary: position u (0-based), state l, order r.
struct NodeAnchor {
  std::size_t u = 0;
  int l = 0;
  std::size_t r = 0;
  bool operator==(const NodeAnchor&) const = default;
};

struct SegmentedAlignment {
  std::vector<NodeAnchor> nodes;
  std::vector<std::vector<int>> segments;
  std::vector<int> path;
  double log_likelihood = kNegInf;
  /// Positions [0, frozen_length) end at the last node and never change when more
  /// observations arrive; the rest is the provisional tail.
  std::size_t frozen_length = 0;
};

/// Start positions (0-based) of blocks x[s..s+M-1] in B.
std::vector<std::size_t> barrier_occurrences(std::span<const double> obs, const BarrierSpec& spec);

/// Node positions s + M - 1 - r of barrier occurrences, keeping u_i > u_{i-1} + r and
/// u_i + r < n - 1 (0-based).
std::vector<NodeAnchor> barrier_nodes(std::span<const double> obs, const BarrierSpec& spec);

/// Separated subset of detected nodes: greedy left to right with u_i > u_{i-1} + r_{i-1}.
std::vector<NodeAnchor> separated_detected_nodes(std::span<const double> obs, const HmmModel& model,
                                                 std::size_t r_max);

/// Piecewise alignment between anchors: the first segment from pi ending at l_0, interior
/// segments from row p_{l_{i-1}} ending at l_i, the final segment unconstrained.
SegmentedAlignment segment_at_nodes(std::span<const double> obs, const HmmModel& model,
                                    const std::vector<NodeAnchor>& anchors);

struct SegmentOptions {
  /// Segment at every separated node found by detect_nodes instead of barrier nodes.
  bool use_all_detected_nodes = false;
  std::size_t r_max = 4;
};

SegmentedAlignment segment_alignment(std::span<const double> obs, const HmmModel& model,
                                     const BarrierSpec& barrier, SegmentOptions options = {});

/// Observations attributed to one state. An empty sample carries the fallback marker and
/// stands for the default measure (uniform alphabet or standard Gaussian).
struct EmpiricalMeasure {
  int state = 0;
  std::vector<double> observations;
  bool fallback = false;
  std::size_t count() const { return observations.size(); }
};

std::vector<EmpiricalMeasure> empirical_measures(std::span<const int> path, std::span<const double> obs,
                                                 std::size_t states);

/// Bin masses of a measure; the fallback measure is binned from its default law.
std::vector<double> measure_histogram(const EmpiricalMeasure& measure, const Binning& binning);

struct RenewalLedger {
  std::vector<std::size_t> nu;     // block matches with the hidden word equal to q
  std::vector<std::size_t> theta;  // observable block matches
  std::vector<std::size_t> word;   // hidden word matches
  std::vector<std::size_t> tau;    // nu_i + M - 1 - r
  std::vector<std::size_t> inter_times;  // T_0 = tau_0 (1-based), T_i = nu_i - nu_{i-1}
};

/// Stopping-time bookkeeping on a realization; times are 0-based positions.
RenewalLedger renewal_ledger(const Realization& realization, const BarrierSpec& barrier);

struct RegenerativeOptions {
  std::size_t cycles = 10000;
  std::uint64_t seed = 1;
  std::optional<Binning> binning;  // default: alphabet, or pooled percentiles of the draws
  std::size_t max_cycle_length = 10000000;
  std::size_t rejection_cap = 1000000;
};

struct RegenerativeEstimate {
  Binning binning = Binning::alphabet(1);
  std::vector<EmpiricalMeasure> pooled;           // occupation multisets over all cycles
  std::vector<std::vector<double>> mass;          // [state][bin], ratio estimator
  std::vector<std::vector<double>> standard_error;
  std::vector<std::size_t> cycle_lengths;
};

/// Regenerative Monte-Carlo estimate of the limit measures Q_l. Each cycle starts right
/// after a completed block (states q, observations drawn from the components restricted to
/// B), runs the chain from q_M until the next block match, and aligns the cycle piecewise
/// from row p_l. Throws Error(CycleTimeout).
RegenerativeEstimate estimate_Q_regenerative(const HmmModel& model, const BarrierSpec& barrier,
                                             RegenerativeOptions options = {});

/// Empirical measures of the frozen prefix of a segmented alignment (the Q-hat measures).
std::vector<EmpiricalMeasure> frozen_measures(const SegmentedAlignment& alignment,
                                              std::span<const double> obs, std::size_t states);

}  // namespace avt
