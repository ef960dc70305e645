#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avt/emission.hpp"
#include "avt/model.hpp"

namespace avt {

/// One block component: a finite symbol set, or a union of open intervals.
struct ComponentSet {
  std::vector<int> symbols;         // sorted, used when discrete
  std::vector<Interval> intervals;  // used when continuous

  static ComponentSet of_symbols(std::vector<int> symbols);
  static ComponentSet of_intervals(std::vector<Interval> intervals);

  bool is_discrete() const { return intervals.empty(); }
  bool contains(double x) const;
  bool empty() const { return symbols.empty() && intervals.empty(); }
  bool intersects(const ComponentSet& other) const;
  bool operator==(const ComponentSet&) const = default;
};

enum class CertificateStatus { Unverified, Certified, Inconclusive, Counterexample };

std::string to_string(CertificateStatus status);

struct Certificate {
  CertificateStatus status = CertificateStatus::Unverified;
  std::string method;
  bool start_state_bound = false;  // criterion holds from every start state (prefix-free proof)
  bool closure_complete = false;   // every reachable prefix column was examined
  std::size_t prefix_depth = 0;    // exhaustive prefix length reached by the closure
  std::size_t columns_explored = 0;
  std::size_t trials = 0;
  std::vector<double> counterexample_prefix;
  std::vector<double> counterexample_block;
};

/// Product set B = B_1 x ... x B_M with a state word q and node state l at block offset
/// M - r - 1 (0-based), i.e. the (M - r)-th element.
struct BarrierSpec {
  std::vector<ComponentSet> sets;
  std::vector<int> word;
  int node_state = 0;
  std::size_t order = 0;
  bool separated = false;
  Certificate certificate;

  std::size_t length() const { return sets.size(); }
  std::size_t node_offset() const { return sets.size() - order - 1; }
  bool is_discrete() const;
  /// x[start .. start+M-1] lies in B.
  bool matches(std::span<const double> obs, std::size_t start) const;
  /// Empty when well formed; checks the word and positivity conditions against the model.
  std::vector<std::string> problems(const HmmModel& model) const;
};

struct VerifyOptions {
  std::size_t trials = 10000;               // continuous sampling trials
  std::size_t exhaustive_prefix_len = 8;    // minimum closure depth / max sampled prefix
  std::size_t column_cap = 50000;           // closure budget (distinct prefix columns)
  std::size_t block_state_cap = 200000;     // budget for distinct block partial products
  std::uint64_t seed = 1;
  double tolerance = 1e-9;
};

/// Checks that every element of B forces an l-node of order r after any prefix, including
/// the empty one. Discrete blocks are decided exactly (see barrier.cpp for the algorithm);
/// continuous blocks are sampled and a pass is reported as Inconclusive.
Certificate verify_barrier(const BarrierSpec& spec, const HmmModel& model, VerifyOptions options = {});

/// Intermediate quantities of the discrete construction, kept for inspection and tests.
struct ConstructionDetails {
  bool simple = false;  // revealing-symbol shortcut taken
  std::vector<double> max_incoming;        // p*_i
  double ratio_bound = 1.0;                // A
  double epsilon = 0.0;
  std::vector<std::vector<int>> dominant;  // X_l
  std::vector<int> cluster;                // C
  std::size_t primitivity = 0;             // m
  std::vector<int> buffer;                 // Z
  bool buffer_inside_dominant = false;     // Z taken inside X_s
  int buffer_state = -1;                   // s when buffer_inside_dominant
  double density_min = 0.0;                // delta
  double density_max = 0.0;                // K
  double path_floor = 0.0;                 // q
  std::size_t repetitions = 0;             // k
  std::vector<int> cycle;                  // s_1..s_L
  std::vector<int> approach;               // a_1..a_P
  std::vector<int> entry;                  // b_0..b_R
};

struct ConstructOptions {
  /// Return the length-1 block of a state-revealing symbol when one exists.
  bool prefer_simple = true;
};

struct Construction {
  BarrierSpec spec;
  ConstructionDetails details;
};

/// Constructive barrier for all-discrete models. Throws Error(HypothesisLllFails) naming
/// the offending state, or Error(NoClusterFound).
Construction construct_barrier_set(const HmmModel& model, ConstructOptions options = {});

/// The dominance sets X_l and the epsilon used to build them (discrete models).
std::vector<std::vector<int>> dominance_sets(const HmmModel& model, double* epsilon = nullptr);

/// True when no shift by w in 1..r of an element of B lands in B again.
bool is_separated(const BarrierSpec& spec);

/// Returns a separated spec: the input flagged when already separated, otherwise the input
/// with one component prepended. Throws Error(SeparationFailed) if no prefix works.
BarrierSpec separate_barriers(const BarrierSpec& spec, const HmmModel& model);

/// Order-0 barrier of an i.i.d. mixture: the Voronoi cell of `state` (continuous or discrete).
BarrierSpec mixture_barrier(const HmmModel& model, int state);

/// Barrier used when a caller asks for one automatically: the mixture cell of the first
/// state with a non-empty cell, or the separated discrete construction.
BarrierSpec default_barrier(const HmmModel& model);

}  // namespace avt
