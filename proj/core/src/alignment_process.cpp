#include "avt/alignment_process.hpp"

#include <algorithm>
#include <cmath>

#include "avt/errors.hpp"
#include "avt/trellis.hpp"

namespace avt {

std::vector<std::size_t> barrier_occurrences(std::span<const double> obs, const BarrierSpec& spec) {
  std::vector<std::size_t> out;
  const std::size_t m = spec.length();
  for (std::size_t s = 0; s + m <= obs.size(); ++s)
    if (spec.matches(obs, s)) out.push_back(s);
  return out;
}

std::vector<NodeAnchor> barrier_nodes(std::span<const double> obs, const BarrierSpec& spec) {
  std::vector<NodeAnchor> out;
  const std::size_t n = obs.size();
  const std::size_t r = spec.order;
  for (std::size_t s : barrier_occurrences(obs, spec)) {
    const std::size_t u = s + spec.node_offset();
    if (u + r + 2 > n) break;
    if (!out.empty() && u <= out.back().u + r) continue;
    out.push_back({u, spec.node_state, r});
  }
  return out;
}

std::vector<NodeAnchor> separated_detected_nodes(std::span<const double> obs, const HmmModel& model,
                                                 std::size_t r_max) {
  std::vector<NodeAnchor> out;
  for (const auto& rec : detect_nodes(obs, model, r_max)) {
    if (!out.empty() && rec.u <= out.back().u + out.back().r) continue;
    out.push_back({rec.u, rec.l, rec.r});
  }
  return out;
}

namespace {

// Piecewise alignment of obs with the first factor from `start`; anchors are relative to obs.
std::vector<int> piecewise_path(std::span<const double> obs, const HmmModel& model, StartRow start,
                                const std::vector<NodeAnchor>& anchors) {
  std::vector<int> path;
  path.reserve(obs.size());
  std::size_t begin = 0;
  StartRow row = start;
  for (const auto& a : anchors) {
    const auto piece = obs.subspan(begin, a.u + 1 - begin);
    const ScoreTrellis trellis = build_trellis(piece, model, row);
    const Alignment seg = constrained_alignment(trellis, piece.size() - 1, a.l);
    path.insert(path.end(), seg.path.begin(), seg.path.end());
    begin = a.u + 1;
    row = StartRow::after(a.l);
  }
  if (begin < obs.size()) {
    const ScoreTrellis trellis = build_trellis(obs.subspan(begin), model, row);
    const Alignment seg = canonical_alignment(trellis);
    path.insert(path.end(), seg.path.begin(), seg.path.end());
  }
  return path;
}

}  // namespace

SegmentedAlignment segment_at_nodes(std::span<const double> obs, const HmmModel& model,
                                    const std::vector<NodeAnchor>& anchors) {
  SegmentedAlignment out;
  out.nodes = anchors;
  std::size_t begin = 0;
  StartRow row = StartRow::initial();
  for (const auto& a : anchors) {
    const auto piece = obs.subspan(begin, a.u + 1 - begin);
    const ScoreTrellis trellis = build_trellis(piece, model, row);
    out.segments.push_back(constrained_alignment(trellis, piece.size() - 1, a.l).path);
    begin = a.u + 1;
    row = StartRow::after(a.l);
  }
  if (begin < obs.size()) {
    const ScoreTrellis trellis = build_trellis(obs.subspan(begin), model, row);
    out.segments.push_back(canonical_alignment(trellis).path);
  }
  for (const auto& seg : out.segments) out.path.insert(out.path.end(), seg.begin(), seg.end());
  out.log_likelihood = log_lambda(out.path, obs, model);
  out.frozen_length = anchors.empty() ? 0 : anchors.back().u + 1;
  return out;
}

SegmentedAlignment segment_alignment(std::span<const double> obs, const HmmModel& model, const BarrierSpec& barrier,
                                     SegmentOptions options) {
  const auto anchors = options.use_all_detected_nodes ? separated_detected_nodes(obs, model, options.r_max)
                                                      : barrier_nodes(obs, barrier);
  return segment_at_nodes(obs, model, anchors);
}

std::vector<EmpiricalMeasure> empirical_measures(std::span<const int> path, std::span<const double> obs,
                                                 std::size_t states) {
  if (path.size() != obs.size()) throw Error(ErrorCode::InvalidArgument, "path and observations differ in length");
  std::vector<EmpiricalMeasure> out(states);
  for (std::size_t l = 0; l < states; ++l) out[l].state = static_cast<int>(l);
  for (std::size_t i = 0; i < path.size(); ++i) out[static_cast<std::size_t>(path[i])].observations.push_back(obs[i]);
  for (auto& m : out) m.fallback = m.observations.empty();
  return out;
}

std::vector<EmpiricalMeasure> frozen_measures(const SegmentedAlignment& alignment, std::span<const double> obs,
                                              std::size_t states) {
  const std::size_t len = alignment.frozen_length;
  return empirical_measures(std::span<const int>(alignment.path).first(len), obs.first(len), states);
}

std::vector<double> measure_histogram(const EmpiricalMeasure& measure, const Binning& binning) {
  if (!measure.fallback) return histogram(measure.observations, binning);
  std::vector<double> mass(binning.bins(), 0.0);
  if (mass.empty()) return mass;
  if (binning.discrete()) {
    std::fill(mass.begin(), mass.end(), 1.0 / static_cast<double>(mass.size()));
    return mass;
  }
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  for (std::size_t b = 0; b < mass.size(); ++b) {
    const double lo = b == 0 ? 0.0 : cdf(binning.low(b));
    const double hi = b + 1 == mass.size() ? 1.0 : cdf(binning.high(b));
    mass[b] = hi - lo;
  }
  return mass;
}

RenewalLedger renewal_ledger(const Realization& realization, const BarrierSpec& barrier) {
  RenewalLedger out;
  const std::size_t m = barrier.length();
  const auto& states = realization.states;
  out.theta = barrier_occurrences(realization.observations, barrier);
  for (std::size_t s = 0; s + m <= states.size(); ++s)
    if (std::equal(barrier.word.begin(), barrier.word.end(), states.begin() + static_cast<std::ptrdiff_t>(s)))
      out.word.push_back(s);
  std::set_intersection(out.theta.begin(), out.theta.end(), out.word.begin(), out.word.end(),
                        std::back_inserter(out.nu));
  for (std::size_t i = 0; i < out.nu.size(); ++i) {
    out.tau.push_back(out.nu[i] + barrier.node_offset());
    out.inter_times.push_back(i == 0 ? out.tau[0] + 1 : out.nu[i] - out.nu[i - 1]);
  }
  return out;
}

namespace {

struct Cycle {
  std::vector<int> states;   // aligned states
  std::vector<double> obs;
};

bool word_matches(const std::vector<int>& states, std::size_t s, const std::vector<int>& word) {
  return std::equal(word.begin(), word.end(), states.begin() + static_cast<std::ptrdiff_t>(s));
}

Cycle simulate_cycle(const HmmModel& model, const BarrierSpec& barrier, std::uint64_t seed, std::size_t index,
                     const RegenerativeOptions& options) {
  const std::size_t m = barrier.length();
  const std::size_t r = barrier.order;
  const std::size_t node = barrier.node_offset();
  ChainSampler sampler(model, {index, seed});

  // The completed block that ends the previous cycle.
  std::vector<int> states(barrier.word.begin(), barrier.word.end());
  std::vector<double> obs;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t attempts = 0;
    double x = sampler.emit(states[i]);
    while (!barrier.sets[i].contains(x)) {
      if (++attempts >= options.rejection_cap)
        throw Error(ErrorCode::CycleTimeout, "conditioned draw for block component " + std::to_string(i + 1) +
                                                 " exceeded the rejection cap");
      x = sampler.emit(states[i]);
    }
    obs.push_back(x);
  }

  // Run the chain until the next hidden-and-observed block match.
  std::size_t found = 0;
  while (found == 0) {
    if (states.size() - m >= options.max_cycle_length)
      throw Error(ErrorCode::CycleTimeout, "no regeneration within " + std::to_string(options.max_cycle_length) + " steps");
    const int next = sampler.next_state(states.back());
    states.push_back(next);
    obs.push_back(sampler.emit(next));
    const std::size_t s = states.size() - m;
    if (word_matches(states, s, barrier.word) && barrier.matches(obs, s)) found = s;
  }
  const std::size_t tau = found + node;

  // Observable nodes inside (node, tau], relative to the cycle start node + 1.
  const std::size_t begin = node + 1;
  std::vector<NodeAnchor> anchors;
  std::size_t last = node;
  for (std::size_t s = 1; s <= found; ++s) {
    const std::size_t u = s + node;
    if (u <= last + r || !barrier.matches(obs, s)) continue;
    anchors.push_back({u - begin, barrier.node_state, r});
    last = u;
  }
  const auto span = std::span<const double>(obs).subspan(begin, tau + 1 - begin);
  Cycle out;
  out.states = piecewise_path(span, model, StartRow::after(barrier.node_state), anchors);
  out.obs.assign(span.begin(), span.end());
  return out;
}

}  // namespace

RegenerativeEstimate estimate_Q_regenerative(const HmmModel& model, const BarrierSpec& barrier,
                                             RegenerativeOptions options) {
  if (options.cycles == 0) throw Error(ErrorCode::InvalidArgument, "at least one cycle is required");
  const auto issues = barrier.problems(model);
  if (!issues.empty()) throw Error(ErrorCode::InvalidArgument, "malformed barrier: " + issues.front());
  const std::size_t k = model.states();
  std::vector<Cycle> cycles;
  cycles.reserve(options.cycles);
  for (std::size_t c = 0; c < options.cycles; ++c) cycles.push_back(simulate_cycle(model, barrier, options.seed, c, options));

  RegenerativeEstimate out;
  out.pooled.resize(k);
  for (std::size_t l = 0; l < k; ++l) out.pooled[l].state = static_cast<int>(l);
  std::vector<double> everything;
  for (const auto& cycle : cycles) {
    out.cycle_lengths.push_back(cycle.obs.size());
    for (std::size_t i = 0; i < cycle.obs.size(); ++i) {
      out.pooled[static_cast<std::size_t>(cycle.states[i])].observations.push_back(cycle.obs[i]);
      everything.push_back(cycle.obs[i]);
    }
  }
  for (auto& m : out.pooled) m.fallback = m.observations.empty();
  if (options.binning) out.binning = *options.binning;
  else if (model.all_discrete()) out.binning = Binning::alphabet(model.alphabet_size());
  else out.binning = Binning::pooled(everything);

  const std::size_t bins = out.binning.bins();
  const auto n = static_cast<double>(cycles.size());
  out.mass.assign(k, std::vector<double>(bins, 0.0));
  out.standard_error.assign(k, std::vector<double>(bins, 0.0));
  // Per-cycle counts: X_c = visits to l, Y_c = visits to l inside the bin.
  std::vector<std::vector<double>> visits(cycles.size(), std::vector<double>(k, 0.0));
  std::vector<std::vector<std::vector<double>>> in_bin(cycles.size());
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    in_bin[c].assign(k, std::vector<double>(bins, 0.0));
    for (std::size_t i = 0; i < cycles[c].obs.size(); ++i) {
      const auto l = static_cast<std::size_t>(cycles[c].states[i]);
      visits[c][l] += 1.0;
      in_bin[c][l][out.binning.bin_of(cycles[c].obs[i])] += 1.0;
    }
  }
  for (std::size_t l = 0; l < k; ++l) {
    if (out.pooled[l].fallback) {
      out.mass[l] = measure_histogram(out.pooled[l], out.binning);
      continue;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cycles.size(); ++c) total += visits[c][l];
    const double mean_visits = total / n;
    for (std::size_t b = 0; b < bins; ++b) {
      double hits = 0.0;
      for (std::size_t c = 0; c < cycles.size(); ++c) hits += in_bin[c][l][b];
      const double ratio = hits / total;
      out.mass[l][b] = ratio;
      if (cycles.size() < 2) continue;
      double ss = 0.0;
      for (std::size_t c = 0; c < cycles.size(); ++c) {
        const double resid = in_bin[c][l][b] - ratio * visits[c][l];
        ss += resid * resid;
      }
      out.standard_error[l][b] = std::sqrt(ss / (n - 1.0) / n) / mean_visits;
    }
  }
  return out;
}

}  // namespace avt
