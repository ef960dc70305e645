#include "avt/barrier.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "avt/errors.hpp"
#include "avt/logspace.hpp"
#include "avt/nodes.hpp"
#include "avt/rng.hpp"
#include "avt/simulate.hpp"
#include "avt/trellis.hpp"
#include "avt/voronoi.hpp"

namespace avt {

// ---------------------------------------------------------------------------------------
// Component sets

ComponentSet ComponentSet::of_symbols(std::vector<int> symbols) {
  std::sort(symbols.begin(), symbols.end());
  symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
  ComponentSet c;
  c.symbols = std::move(symbols);
  return c;
}

ComponentSet ComponentSet::of_intervals(std::vector<Interval> intervals) {
  ComponentSet c;
  c.intervals = std::move(intervals);
  return c;
}

bool ComponentSet::contains(double x) const {
  if (is_discrete()) {
    if (x != std::floor(x) || !std::isfinite(x)) return false;
    return std::binary_search(symbols.begin(), symbols.end(), static_cast<int>(x));
  }
  for (const auto& iv : intervals)
    if (iv.contains(x)) return true;
  return false;
}

bool ComponentSet::intersects(const ComponentSet& other) const {
  if (is_discrete() && other.is_discrete()) {
    for (int s : symbols)
      if (std::binary_search(other.symbols.begin(), other.symbols.end(), s)) return true;
    return false;
  }
  if (is_discrete()) {
    for (int s : symbols)
      if (other.contains(s)) return true;
    return false;
  }
  if (other.is_discrete()) return other.intersects(*this);
  for (const auto& a : intervals)
    for (const auto& b : other.intervals)
      if (std::max(a.lo, b.lo) < std::min(a.hi, b.hi)) return true;
  return false;
}

std::string to_string(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::Unverified: return "unverified";
    case CertificateStatus::Certified: return "certified";
    case CertificateStatus::Inconclusive: return "inconclusive";
    case CertificateStatus::Counterexample: return "counterexample";
  }
  return "unknown";
}

bool BarrierSpec::is_discrete() const {
  return std::all_of(sets.begin(), sets.end(), [](const ComponentSet& c) { return c.is_discrete(); });
}

bool BarrierSpec::matches(std::span<const double> obs, std::size_t start) const {
  if (start + sets.size() > obs.size()) return false;
  for (std::size_t i = 0; i < sets.size(); ++i)
    if (!sets[i].contains(obs[start + i])) return false;
  return true;
}

namespace {

// Probability mass of a component under one emission model.
double component_mass(const ComponentSet& set, const EmissionModel& e) {
  if (set.is_discrete()) {
    double total = 0.0;
    for (int s : set.symbols) total += e.density(s);
    return total;
  }
  // Continuous: positive mass iff the interval meets the support hull with positive length.
  const Interval hull = e.support_hull();
  double total = 0.0;
  for (const auto& iv : set.intervals) {
    const double lo = std::max(iv.lo, hull.lo);
    const double hi = std::min(iv.hi, hull.hi);
    if (lo < hi) total += 1.0;
  }
  return total;
}

}  // namespace

std::vector<std::string> BarrierSpec::problems(const HmmModel& model) const {
  std::vector<std::string> out;
  const std::size_t m = sets.size();
  if (m == 0) out.push_back("barrier has no components");
  if (word.size() != m) out.push_back("state word length differs from the block length");
  if (order >= m && m > 0) out.push_back("order must be smaller than the block length");
  if (!out.empty()) return out;
  for (int q : word)
    if (q < 0 || static_cast<std::size_t>(q) >= model.states()) out.push_back("state word leaves the state space");
  if (!out.empty()) return out;
  if (word[node_offset()] != node_state) out.push_back("node state differs from the word at the node offset");
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (model.transition(static_cast<std::size_t>(word[i]), static_cast<std::size_t>(word[i + 1])) <= 0.0)
      out.push_back("word transition " + std::to_string(i + 1) + " has zero probability");
  for (std::size_t i = 0; i < m; ++i)
    if (component_mass(sets[i], model.emission(static_cast<std::size_t>(word[i]))) <= 0.0)
      out.push_back("component " + std::to_string(i + 1) + " has zero mass under its word state");
  return out;
}

// ---------------------------------------------------------------------------------------
// Verification
//
// The node criterion at u = w + offset depends on the prefix x[0..w-1] only through the
// normalized score column after the prefix. For a finite alphabet the block part is handled
// by two dynamic programs over the distinct (quantized) partial products:
//   * backward: column-normalized p^(r) over the r positions after the node offset
//     (left multiplication keeps column constants, which the criterion ignores);
//   * forward: normalized score columns at the node offset for each starting column.
// The criterion is then checked for every pair. Starting columns are
//   * the unit columns e_k ("start-state bound"): passing for every k proves the criterion
//     for every prefix, since for fixed (i, j) the worst case over arbitrary columns is
//     attained at a unit column;
//   * the breadth-first closure of reachable prefix columns, with quotienting by the
//     quantization grid. An exhausted queue means every prefix of every length is covered.

namespace {

using Key = std::vector<long long>;

constexpr double kGrid = 1e-9;

Key quantize(const std::vector<double>& values) {
  Key key(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    key[i] = values[i] == kNegInf ? LLONG_MIN : std::llround(values[i] / kGrid);
  return key;
}

bool all_impossible(const std::vector<double>& column) {
  return std::all_of(column.begin(), column.end(), [](double v) { return v == kNegInf; });
}

struct BlockColumn {
  std::vector<double> column;
  std::vector<int> choice;  // symbols for block positions 0..offset
};

struct BlockPartial {
  LogMatrix partial;
  std::vector<int> choice;  // symbols for block positions offset+1..M-1
};

struct BudgetExceeded {};

class DiscreteVerifier {
 public:
  DiscreteVerifier(const BarrierSpec& spec, const HmmModel& model, const VerifyOptions& options)
      : spec_(spec), model_(model), options_(options), k_(model.states()) {
    const std::size_t v = model.alphabet_size();
    for (std::size_t a = 0; a < v; ++a) {
      auto lf = model.log_densities(static_cast<double>(a));
      if (!all_impossible(lf)) alphabet_.push_back(static_cast<int>(a));
      log_f_.push_back(std::move(lf));
    }
    build_partials();
  }

  Certificate run() {
    Certificate cert;
    cert.method.clear();
    // Start-state bound, including the empty prefix.
    bool bound = true;
    try {
      if (!check_start(std::nullopt, cert)) return cert;
      for (std::size_t k = 0; k < k_ && bound; ++k) {
        std::vector<double> unit(k_, kNegInf);
        unit[k] = 0.0;
        Certificate scratch;
        if (!check_start(unit, scratch)) bound = false;
      }
    } catch (const BudgetExceeded&) {
      cert.status = CertificateStatus::Inconclusive;
      cert.method = "block partial products exceeded the budget";
      return cert;
    }
    cert.start_state_bound = bound;

    // Closure over reachable prefix columns.
    std::map<Key, std::size_t> seen;
    struct Node {
      std::vector<double> column;
      std::size_t parent;
      int symbol;
      std::size_t depth;
    };
    std::vector<Node> nodes;
    std::deque<std::size_t> queue;
    auto push = [&](std::vector<double> column, std::size_t parent, int symbol, std::size_t depth) {
      normalize_column(column);
      if (all_impossible(column)) return;
      auto [it, inserted] = seen.emplace(quantize(column), nodes.size());
      if (!inserted) return;
      nodes.push_back({std::move(column), parent, symbol, depth});
      queue.push_back(nodes.size() - 1);
    };
    const std::size_t none = static_cast<std::size_t>(-1);
    for (int a : alphabet_) {
      std::vector<double> column(k_);
      for (std::size_t j = 0; j < k_; ++j) {
        const double w = safe_log(model_.initial(j));
        column[j] = (w == kNegInf || log_f_[a][j] == kNegInf) ? kNegInf : w + log_f_[a][j];
      }
      push(std::move(column), none, a, 1);
    }
    bool complete = true;
    try {
      while (!queue.empty()) {
        if (nodes.size() > options_.column_cap) {
          complete = false;
          break;
        }
        const std::size_t id = queue.front();
        queue.pop_front();
        cert.prefix_depth = std::max(cert.prefix_depth, nodes[id].depth - 1);
        if (!check_start(nodes[id].column, cert)) {
          std::vector<double> prefix;
          for (std::size_t cur = id; cur != none; cur = nodes[cur].parent)
            prefix.push_back(static_cast<double>(nodes[cur].symbol));
          std::reverse(prefix.begin(), prefix.end());
          cert.counterexample_prefix = std::move(prefix);
          cert.columns_explored = nodes.size();
          return cert;
        }
        for (int a : alphabet_) push(step(nodes[id].column, a), id, a, nodes[id].depth + 1);
      }
    } catch (const BudgetExceeded&) {
      complete = false;
    }
    if (complete) cert.prefix_depth = std::max<std::size_t>(cert.prefix_depth, options_.exhaustive_prefix_len);
    cert.columns_explored = nodes.size();
    cert.closure_complete = complete;
    std::vector<std::string> methods;
    if (complete) methods.emplace_back("prefix-column closure");
    if (bound) methods.emplace_back("start-state bound");
    for (const auto& m : methods) cert.method += (cert.method.empty() ? "" : " + ") + m;
    cert.status = (complete || bound) ? CertificateStatus::Certified : CertificateStatus::Inconclusive;
    if (cert.status == CertificateStatus::Inconclusive) cert.method = "closure budget exhausted";
    return cert;
  }

 private:
  std::vector<double> step(const std::vector<double>& column, int symbol) const {
    const LogMatrix& lp = model_.log_transitions();
    std::vector<double> out(k_, kNegInf);
    for (std::size_t j = 0; j < k_; ++j) {
      if (log_f_[symbol][j] == kNegInf) continue;
      double best = kNegInf;
      for (std::size_t i = 0; i < k_; ++i)
        if (column[i] != kNegInf && lp(i, j) != kNegInf) best = std::max(best, column[i] + lp(i, j));
      if (best != kNegInf) out[j] = best + log_f_[symbol][j];
    }
    return out;
  }

  std::vector<int> symbols_of(const ComponentSet& set) const {
    std::vector<int> out;
    for (int s : set.symbols)
      if (s >= 0 && static_cast<std::size_t>(s) < log_f_.size()) out.push_back(s);
    return out;
  }

  void build_partials() {
    const LogMatrix& lp = model_.log_transitions();
    const std::size_t m = spec_.length();
    const std::size_t offset = spec_.node_offset();
    std::map<Key, BlockPartial> current;
    LogMatrix base = lp;
    base.normalize_columns();
    current.emplace(quantize(base.data()), BlockPartial{base, {}});
    for (std::size_t pos = m; pos-- > offset + 1;) {
      std::map<Key, BlockPartial> next;
      for (const auto& [key, item] : current) {
        for (int a : symbols_of(spec_.sets[pos])) {
          LogMatrix p = max_plus_through(lp, log_f_[a], item.partial);
          p.normalize_columns();
          std::vector<int> choice{a};
          choice.insert(choice.end(), item.choice.begin(), item.choice.end());
          next.emplace(quantize(p.data()), BlockPartial{std::move(p), std::move(choice)});
          if (next.size() > options_.block_state_cap) throw BudgetExceeded{};
        }
      }
      current = std::move(next);
    }
    for (auto& [key, item] : current) partials_.push_back(std::move(item));
  }

  // Runs the block from a prefix column (nullopt = empty prefix) and checks the criterion.
  bool check_start(const std::optional<std::vector<double>>& start, Certificate& cert) const {
    const std::size_t offset = spec_.node_offset();
    std::map<Key, BlockColumn> current;
    for (int a : symbols_of(spec_.sets[0])) {
      std::vector<double> column(k_, kNegInf);
      if (start) {
        column = step(*start, a);
      } else {
        for (std::size_t j = 0; j < k_; ++j) {
          const double w = safe_log(model_.initial(j));
          if (w != kNegInf && log_f_[a][j] != kNegInf) column[j] = w + log_f_[a][j];
        }
      }
      normalize_column(column);
      if (all_impossible(column)) continue;
      current.emplace(quantize(column), BlockColumn{std::move(column), {a}});
    }
    for (std::size_t pos = 1; pos <= offset; ++pos) {
      std::map<Key, BlockColumn> next;
      for (const auto& [key, item] : current) {
        for (int a : symbols_of(spec_.sets[pos])) {
          std::vector<double> column = step(item.column, a);
          normalize_column(column);
          if (all_impossible(column)) continue;
          std::vector<int> choice = item.choice;
          choice.push_back(a);
          next.emplace(quantize(column), BlockColumn{std::move(column), std::move(choice)});
          if (next.size() > options_.block_state_cap) throw BudgetExceeded{};
        }
      }
      current = std::move(next);
    }
    for (const auto& [key, item] : current) {
      for (const auto& partial : partials_) {
        if (!satisfies_node_criterion(item.column, partial.partial, spec_.node_state, options_.tolerance)) {
          cert.status = CertificateStatus::Counterexample;
          cert.method = "prefix-column closure";
          cert.counterexample_block.assign(item.choice.begin(), item.choice.end());
          cert.counterexample_block.insert(cert.counterexample_block.end(), partial.choice.begin(),
                                           partial.choice.end());
          return false;
        }
      }
    }
    return true;
  }

  const BarrierSpec& spec_;
  const HmmModel& model_;
  VerifyOptions options_;
  std::size_t k_;
  std::vector<int> alphabet_;
  std::vector<std::vector<double>> log_f_;
  std::vector<BlockPartial> partials_;
};

double sample_component(const ComponentSet& set, const EmissionModel& emission, Rng& rng) {
  if (set.is_discrete()) return set.symbols[rng.below(set.symbols.size())];
  if (rng.uniform() < 0.5) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const double x = emission.sample(rng);
      if (set.contains(x)) return x;
    }
  }
  // Adversarial extreme of a random interval of the union.
  const Interval& iv = set.intervals[rng.below(set.intervals.size())];
  const bool low_side = rng.uniform() < 0.5;
  constexpr double kFar = 30.0;
  if (low_side) {
    if (std::isfinite(iv.lo)) {
      const double x = iv.lo + 1e-6 * std::max(1.0, std::abs(iv.lo));
      return x < iv.hi ? x : 0.5 * (iv.lo + iv.hi);
    }
    return (std::isfinite(iv.hi) ? iv.hi : 0.0) - kFar;
  }
  if (std::isfinite(iv.hi)) {
    const double x = iv.hi - 1e-6 * std::max(1.0, std::abs(iv.hi));
    return x > iv.lo ? x : 0.5 * (iv.lo + iv.hi);
  }
  return (std::isfinite(iv.lo) ? iv.lo : 0.0) + kFar;
}

Certificate verify_by_sampling(const BarrierSpec& spec, const HmmModel& model, const VerifyOptions& options) {
  Certificate cert;
  cert.method = "sampling";
  const std::size_t offset = spec.node_offset();
  for (std::size_t t = 0; t < options.trials; ++t) {
    Rng rng({options.seed, t, 7});
    const std::size_t w = rng.below(options.exhaustive_prefix_len + 1);
    std::vector<double> seq;
    if (w > 0) seq = simulate(model, w, rng.next()).observations;
    std::vector<double> block;
    for (std::size_t i = 0; i < spec.length(); ++i)
      block.push_back(sample_component(spec.sets[i], model.emission(static_cast<std::size_t>(spec.word[i])), rng));
    seq.insert(seq.end(), block.begin(), block.end());
    ++cert.trials;
    try {
      const ScoreTrellis trellis = build_trellis(seq, model, StartRow::initial(), options.tolerance);
      const PartialLikelihood partial(model, seq);
      if (!is_node(trellis, partial, w + offset, spec.node_state, spec.order)) {
        cert.status = CertificateStatus::Counterexample;
        cert.counterexample_prefix.assign(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(w));
        cert.counterexample_block = block;
        return cert;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllPathsImpossible) throw;  // impossible sequences are vacuous
    }
  }
  cert.status = CertificateStatus::Inconclusive;
  return cert;
}

}  // namespace

Certificate verify_barrier(const BarrierSpec& spec, const HmmModel& model, VerifyOptions options) {
  const auto issues = spec.problems(model);
  if (!issues.empty()) throw Error(ErrorCode::InvalidArgument, "malformed barrier: " + issues.front());
  if (spec.is_discrete() && model.all_discrete()) return DiscreteVerifier(spec, model, options).run();
  return verify_by_sampling(spec, model, options);
}

// ---------------------------------------------------------------------------------------
// Construction for discrete alphabets

namespace {

std::vector<double> max_incoming(const HmmModel& model) {
  const std::size_t k = model.states();
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i] = std::max(out[i], model.transition(j, i));
  return out;
}

// States with positive density at symbol a.
StateSet emitters(const HmmModel& model, int a) {
  StateSet s;
  for (std::size_t l = 0; l < model.states(); ++l)
    if (model.emission(l).density(a) > 0.0) s.insert(static_cast<int>(l));
  return s;
}

// Smallest m <= K^2 with Q^m entrywise positive on the cluster, or 0.
std::size_t primitivity_index(const HmmModel& model, const std::vector<int>& cluster) {
  const std::size_t c = cluster.size();
  std::vector<std::vector<bool>> q(c, std::vector<bool>(c)), power;
  for (std::size_t a = 0; a < c; ++a)
    for (std::size_t b = 0; b < c; ++b)
      q[a][b] = model.transition(static_cast<std::size_t>(cluster[a]), static_cast<std::size_t>(cluster[b])) > 0.0;
  power = q;
  const std::size_t limit = model.states() * model.states();
  for (std::size_t m = 1; m <= limit; ++m) {
    bool positive = true;
    for (const auto& row : power)
      for (bool v : row) positive = positive && v;
    if (positive) return m;
    std::vector<std::vector<bool>> next(c, std::vector<bool>(c, false));
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t mid = 0; mid < c; ++mid)
        if (power[a][mid])
          for (std::size_t b = 0; b < c; ++b) next[a][b] = next[a][b] || q[mid][b];
    power = std::move(next);
  }
  return 0;
}

// Maximum-probability path of exactly `steps` transitions inside the cluster from `from` to
// `to`; returns the states visited before `to` (from, ..., penultimate) and its probability.
std::pair<std::vector<int>, double> best_cluster_path(const HmmModel& model, const std::vector<int>& cluster,
                                                     int from, int to, std::size_t steps) {
  const std::size_t k = model.states();
  StateSet in;
  for (int c : cluster) in.insert(c);
  std::vector<std::vector<double>> best(steps + 1, std::vector<double>(k, 0.0));
  std::vector<std::vector<int>> back(steps + 1, std::vector<int>(k, -1));
  best[0][static_cast<std::size_t>(from)] = 1.0;
  for (std::size_t t = 1; t <= steps; ++t)
    for (int j : cluster)
      for (int i : cluster) {
        const double v = best[t - 1][static_cast<std::size_t>(i)] *
                         model.transition(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (v > best[t][static_cast<std::size_t>(j)]) {
          best[t][static_cast<std::size_t>(j)] = v;
          back[t][static_cast<std::size_t>(j)] = i;
        }
      }
  std::vector<int> path;
  int cur = to;
  for (std::size_t t = steps; t > 0; --t) {
    cur = back[t][static_cast<std::size_t>(cur)];
    if (cur < 0) return {{}, 0.0};
    path.push_back(cur);
  }
  std::reverse(path.begin(), path.end());
  return {path, best[steps][static_cast<std::size_t>(to)]};
}

}  // namespace

std::vector<std::vector<int>> dominance_sets(const HmmModel& model, double* epsilon) {
  const std::size_t k = model.states();
  const auto pstar = max_incoming(model);
  const std::size_t v = model.alphabet_size();
  std::vector<std::vector<std::pair<int, double>>> candidates(k);
  double min_gap = 1.0;
  for (std::size_t a = 0; a < v; ++a) {
    for (std::size_t l = 0; l < k; ++l) {
      const double mine = pstar[l] * model.emission(l).density(static_cast<double>(a));
      if (mine <= 0.0) continue;
      double other = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        if (i != l) other = std::max(other, pstar[i] * model.emission(i).density(static_cast<double>(a)));
      const double gap = 1.0 - other / mine;
      if (gap > 1e-12) {
        candidates[l].emplace_back(static_cast<int>(a), gap);
        min_gap = std::min(min_gap, gap);
      }
    }
  }
  const double eps = 0.5 * min_gap;
  if (epsilon != nullptr) *epsilon = eps;
  std::vector<std::vector<int>> out(k);
  for (std::size_t l = 0; l < k; ++l)
    for (const auto& [a, gap] : candidates[l])
      if (gap > eps) out[l].push_back(a);
  return out;
}

Construction construct_barrier_set(const HmmModel& model, ConstructOptions options) {
  if (!model.all_discrete()) throw Error(ErrorCode::InvalidArgument, "barrier construction needs discrete emissions");
  const std::size_t k = model.states();
  const std::size_t v = model.alphabet_size();
  Construction out;
  ConstructionDetails& d = out.details;

  if (options.prefer_simple) {
    for (std::size_t a = 0; a < v; ++a) {
      const StateSet s = emitters(model, static_cast<int>(a));
      if (s.size() == 1) {
        d.simple = true;
        out.spec.sets = {ComponentSet::of_symbols({static_cast<int>(a)})};
        out.spec.word = {s.smallest()};
        out.spec.node_state = s.smallest();
        out.spec.order = 0;
        return out;
      }
    }
  }

  d.max_incoming = max_incoming(model);
  d.ratio_bound = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (model.transition(j, i) > 0.0) d.ratio_bound = std::max(d.ratio_bound, d.max_incoming[i] / model.transition(j, i));

  d.dominant = dominance_sets(model, &d.epsilon);
  for (std::size_t l = 0; l < k; ++l)
    if (d.dominant[l].empty())
      throw Error(ErrorCode::HypothesisLllFails, "state " + std::to_string(l + 1) + " never dominates");

  // A cluster C has a common support G_C outside every other state's support; any symbol of
  // G_C is emitted exactly by C, so the candidates are the emitter sets of single symbols.
  std::set<std::uint64_t> tried;
  std::vector<std::vector<int>> clusters;
  for (std::size_t a = 0; a < v; ++a) {
    const StateSet s = emitters(model, static_cast<int>(a));
    if (s.empty() || !tried.insert(s.bits()).second) continue;
    bool valid = true;
    for (std::size_t b = 0; b < v && valid; ++b) {
      bool common = true;
      for (int i : s.members()) common = common && model.emission(static_cast<std::size_t>(i)).density(b) > 0.0;
      if (common && !(emitters(model, static_cast<int>(b)) == s)) valid = false;
    }
    if (valid) clusters.push_back(s.members());
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const auto& c : clusters) {
    const std::size_t m = primitivity_index(model, c);
    if (m > 0) {
      d.cluster = c;
      d.primitivity = m;
      break;
    }
  }
  if (d.cluster.empty()) throw Error(ErrorCode::NoClusterFound, "no cluster with a primitive sub-stochastic block");
  const std::vector<int>& cluster = d.cluster;
  const std::size_t m = d.primitivity;

  std::vector<int> common;
  for (std::size_t a = 0; a < v; ++a) {
    bool all = true;
    for (int i : cluster) all = all && model.emission(static_cast<std::size_t>(i)).density(a) > 0.0;
    if (all) common.push_back(static_cast<int>(a));
  }
  auto dominated_by_someone = [&](int a) {
    for (const auto& x : d.dominant)
      if (std::binary_search(x.begin(), x.end(), a)) return true;
    return false;
  };
  for (int a : common)
    if (!dominated_by_someone(a)) d.buffer.push_back(a);
  if (d.buffer.empty()) {
    for (int s : cluster) {
      std::vector<int> inside;
      for (int a : common)
        if (std::binary_search(d.dominant[static_cast<std::size_t>(s)].begin(),
                               d.dominant[static_cast<std::size_t>(s)].end(), a))
          inside.push_back(a);
      if (!inside.empty()) {
        d.buffer = inside;
        d.buffer_inside_dominant = true;
        d.buffer_state = s;
        break;
      }
    }
  }
  d.density_min = 1.0;
  d.density_max = 0.0;
  for (int i : cluster)
    for (int a : d.buffer) {
      const double f = model.emission(static_cast<std::size_t>(i)).density(a);
      d.density_min = std::min(d.density_min, f);
      d.density_max = std::max(d.density_max, f);
    }

  // Chain of maximal incoming transitions until a state repeats.
  std::vector<int> chain{d.buffer_inside_dominant ? d.buffer_state : cluster.front()};
  std::size_t repeat_at = 0;
  for (;;) {
    const int current = chain.back();
    int next = 0;
    for (std::size_t j = 0; j < k; ++j)
      if (model.transition(j, static_cast<std::size_t>(current)) > model.transition(static_cast<std::size_t>(next), static_cast<std::size_t>(current)))
        next = static_cast<int>(j);
    auto it = std::find(chain.begin(), chain.end(), next);
    if (it != chain.end()) {
      repeat_at = static_cast<std::size_t>(it - chain.begin());
      chain.push_back(next);
      break;
    }
    chain.push_back(next);
  }
  const std::size_t last = chain.size() - 1;   // U - 1 (0-based)
  const std::size_t cycle_len = last - repeat_at;  // L
  const int node = chain[repeat_at];
  for (std::size_t i = 1; i <= cycle_len; ++i) d.cycle.push_back(chain[last - i]);
  for (std::size_t i = 1; i <= repeat_at; ++i) d.approach.push_back(chain[repeat_at - i]);

  // Shortest positive path of length >= 1 from the cluster into the node state.
  std::vector<int> to_node(k, -1);
  {
    std::deque<std::size_t> queue{static_cast<std::size_t>(node)};
    to_node[static_cast<std::size_t>(node)] = 0;
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      for (std::size_t i = 0; i < k; ++i)
        if (model.transition(i, j) > 0.0 && to_node[i] < 0) {
          to_node[i] = to_node[j] + 1;
          queue.push_back(i);
        }
    }
  }
  auto length_from = [&](int c) {
    if (c != node) return to_node[static_cast<std::size_t>(c)];
    int best = INT_MAX;
    for (std::size_t j = 0; j < k; ++j)
      if (model.transition(static_cast<std::size_t>(c), j) > 0.0 && to_node[j] >= 0) best = std::min(best, 1 + to_node[j]);
    return best;
  };
  int entry_start = cluster.front();
  for (int c : cluster)
    if (length_from(c) < length_from(entry_start)) entry_start = c;
  d.entry = {entry_start};
  {
    int cur = entry_start;
    int remaining = length_from(entry_start);
    while (remaining > 0) {
      int next = -1;
      for (std::size_t j = 0; j < k && next < 0; ++j)
        if (model.transition(static_cast<std::size_t>(cur), j) > 0.0 && to_node[j] == remaining - 1)
          next = static_cast<int>(j);
      d.entry.push_back(next);
      cur = next;
      --remaining;
    }
  }
  const std::size_t entry_len = d.entry.size() - 1;  // R

  d.path_floor = 1.0;
  for (int i : cluster)
    for (int j : cluster) d.path_floor = std::min(d.path_floor, best_cluster_path(model, cluster, i, j, m).second);

  const double target = 2.0 * std::log(d.path_floor) + 2.0 * static_cast<double>(m) * std::log(d.density_min / d.density_max) -
                        static_cast<double>(entry_len) * std::log(d.ratio_bound);
  const double shrink = std::log(1.0 - d.epsilon);
  d.repetitions = 1;
  while (static_cast<double>(d.repetitions - 1) * shrink >= target) ++d.repetitions;
  const std::size_t reps = d.repetitions;

  // Word q = v_0..v_{m-1}, b_0..b_R, s_1..s_{2Lk}, a_1..a_P, u_1..u_m and matching sets.
  BarrierSpec& spec = out.spec;
  const ComponentSet buffer = ComponentSet::of_symbols(d.buffer);
  auto dom = [&](int state) { return ComponentSet::of_symbols(d.dominant[static_cast<std::size_t>(state)]); };
  const auto lead = best_cluster_path(model, cluster, cluster.front(), entry_start, m).first;
  for (int s : lead) {
    spec.word.push_back(s);
    spec.sets.push_back(buffer);
  }
  spec.word.push_back(entry_start);
  spec.sets.push_back(buffer);
  for (std::size_t i = 1; i <= entry_len; ++i) {
    spec.word.push_back(d.entry[i]);
    spec.sets.push_back(dom(d.entry[i]));
  }
  for (std::size_t i = 0; i < 2 * cycle_len * reps; ++i) {
    const int s = d.cycle[i % cycle_len];
    spec.word.push_back(s);
    spec.sets.push_back(dom(s));
  }
  for (int a : d.approach) {
    spec.word.push_back(a);
    spec.sets.push_back(dom(a));
  }
  int tail = spec.word.back();
  for (std::size_t i = 0; i < m; ++i) {
    int next = -1;
    for (int c : cluster)
      if (next < 0 && model.transition(static_cast<std::size_t>(tail), static_cast<std::size_t>(c)) > 0.0) next = c;
    spec.word.push_back(next);
    spec.sets.push_back(buffer);
    tail = next;
  }
  spec.node_state = node;
  spec.order = reps * cycle_len + d.approach.size() + m;
  return out;
}

// ---------------------------------------------------------------------------------------
// Separation

bool is_separated(const BarrierSpec& spec) {
  const std::size_t m = spec.length();
  for (std::size_t w = 1; w <= spec.order && w < m; ++w) {
    bool disjoint_somewhere = false;
    for (std::size_t i = 0; i + w < m && !disjoint_somewhere; ++i)
      if (!spec.sets[i].intersects(spec.sets[i + w])) disjoint_somewhere = true;
    if (!disjoint_somewhere) return false;
  }
  return true;
}

BarrierSpec separate_barriers(const BarrierSpec& spec, const HmmModel& model) {
  BarrierSpec out = spec;
  if (is_separated(spec)) {
    out.separated = true;
    return out;
  }
  std::vector<std::pair<int, ComponentSet>> candidates;
  if (spec.is_discrete() && model.all_discrete()) {
    const auto dominant = dominance_sets(model);
    for (std::size_t q0 = 0; q0 < model.states(); ++q0)
      if (!dominant[q0].empty()) candidates.emplace_back(static_cast<int>(q0), ComponentSet::of_symbols(dominant[q0]));
    for (std::size_t q0 = 0; q0 < model.states(); ++q0)
      for (int a : model.emission(q0).support_symbols()) {
        bool used = false;
        for (const auto& c : spec.sets) used = used || c.contains(a);
        if (!used) candidates.emplace_back(static_cast<int>(q0), ComponentSet::of_symbols({a}));
      }
  }
  for (const auto& [q0, component] : candidates) {
    if (q0 == spec.node_state) continue;
    if (model.transition(static_cast<std::size_t>(q0), static_cast<std::size_t>(spec.word.front())) <= 0.0) continue;
    BarrierSpec trial = spec;
    trial.sets.insert(trial.sets.begin(), component);
    trial.word.insert(trial.word.begin(), q0);
    if (!is_separated(trial) || !trial.problems(model).empty()) continue;
    trial.separated = true;
    if (!trial.certificate.method.empty()) trial.certificate.method += " + prefixed component";
    return trial;
  }
  throw Error(ErrorCode::SeparationFailed, "no prefixed component separates the barrier");
}

// ---------------------------------------------------------------------------------------
// Mixtures

BarrierSpec mixture_barrier(const HmmModel& model, int state) {
  if (!model.is_mixture()) throw Error(ErrorCode::InvalidArgument, "mixture barrier needs identical transition rows");
  const auto& weights = model.transition_row(0);
  BarrierSpec spec;
  ComponentSet cell;
  if (model.all_discrete()) {
    std::vector<int> symbols;
    for (std::size_t a = 0; a < model.alphabet_size(); ++a)
      if (model.emission(static_cast<std::size_t>(state)).density(a) > 0.0 &&
          voronoi_partition(static_cast<double>(a), model.emissions(), weights) == state)
        symbols.push_back(static_cast<int>(a));
    cell = ComponentSet::of_symbols(symbols);
  } else {
    cell = ComponentSet::of_intervals(voronoi_cells(model.emissions(), weights)[static_cast<std::size_t>(state)]);
  }
  if (cell.empty()) throw Error(ErrorCode::EmptyCell, "state " + std::to_string(state + 1) + " has an empty cell");
  spec.sets = {cell};
  spec.word = {state};
  spec.node_state = state;
  spec.order = 0;
  spec.separated = true;
  // Every cell point is a node when the initial row equals the mixture weights.
  if (model.initial_distribution() == weights) {
    spec.certificate.status = CertificateStatus::Certified;
    spec.certificate.method = "mixture Voronoi cell";
  }
  return spec;
}

BarrierSpec default_barrier(const HmmModel& model) {
  if (model.is_mixture()) {
    for (std::size_t l = 0; l < model.states(); ++l) {
      try {
        return mixture_barrier(model, static_cast<int>(l));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyCell) throw;
      }
    }
    throw Error(ErrorCode::EmptyCell, "every mixture cell is empty");
  }
  if (model.all_discrete()) return separate_barriers(construct_barrier_set(model).spec, model);
  throw Error(ErrorCode::InvalidArgument, "no automatic barrier for continuous non-mixture models");
}

}  // namespace avt
