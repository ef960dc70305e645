#include "avt/trellis.hpp"

#include <cmath>

#include "avt/errors.hpp"

namespace avt {

StateSet ScoreTrellis::terminal_argmax() const {
  const std::size_t u = length() - 1;
  double best = kNegInf;
  for (std::size_t l = 0; l < k_; ++l) best = std::max(best, normalized(u, static_cast<int>(l)));
  StateSet out;
  if (best == kNegInf) return out;
  for (std::size_t l = 0; l < k_; ++l)
    if (reaches(normalized(u, static_cast<int>(l)), best, tolerance_)) out.insert(static_cast<int>(l));
  return out;
}

ScoreTrellis build_trellis(std::span<const double> obs, const HmmModel& model, StartRow start, double tolerance) {
  if (obs.empty()) throw Error(ErrorCode::InvalidArgument, "empty observation sequence");
  const std::size_t n = obs.size();
  const std::size_t k = model.states();
  ScoreTrellis t;
  t.k_ = k;
  t.tolerance_ = tolerance;
  t.normalized_.assign(n * k, kNegInf);
  t.offsets_.assign(n, 0.0);
  t.ties_.assign(n > 0 ? (n - 1) * k : 0, StateSet{});

  std::vector<double> column(k);
  for (std::size_t l = 0; l < k; ++l) {
    const double w = start.log_weight(model, static_cast<int>(l));
    const double f = model.emission(l).log_density(obs[0]);
    column[l] = (w == kNegInf || f == kNegInf) ? kNegInf : w + f;
  }
  auto store = [&](std::size_t u) {
    double best = kNegInf;
    for (double v : column) best = std::max(best, v);
    if (best == kNegInf)
      throw Error(ErrorCode::AllPathsImpossible, "every path has zero likelihood at position " + std::to_string(u + 1));
    for (std::size_t l = 0; l < k; ++l)
      t.normalized_[u * k + l] = column[l] == kNegInf ? kNegInf : column[l] - best;
    // Each column is built on the previous normalized one, so offsets accumulate.
    t.offsets_[u] = (u == 0 ? 0.0 : t.offsets_[u - 1]) + best;
  };
  store(0);

  const LogMatrix& lp = model.log_transitions();
  for (std::size_t u = 1; u < n; ++u) {
    const double* prev = &t.normalized_[(u - 1) * k];
    for (std::size_t j = 0; j < k; ++j) {
      double best = kNegInf;
      for (std::size_t i = 0; i < k; ++i) {
        if (prev[i] == kNegInf || lp(i, j) == kNegInf) continue;
        best = std::max(best, prev[i] + lp(i, j));
      }
      StateSet ties;
      for (std::size_t i = 0; i < k; ++i) {
        const double v = (prev[i] == kNegInf || lp(i, j) == kNegInf) ? kNegInf : prev[i] + lp(i, j);
        if (reaches(v, best, tolerance)) ties.insert(static_cast<int>(i));
      }
      t.ties_[(u - 1) * k + j] = ties;
      const double f = model.emission(j).log_density(obs[u]);
      column[j] = (best == kNegInf || f == kNegInf) ? kNegInf : best + f;
    }
    store(u);
  }
  return t;
}

namespace {

Alignment backtrack(const ScoreTrellis& trellis, std::size_t u, int l) {
  Alignment out;
  out.path.assign(u + 1, 0);
  out.path[u] = l;
  for (std::size_t t = u; t > 0; --t) out.path[t - 1] = trellis.tie_set(t - 1, out.path[t]).largest();
  out.log_likelihood = trellis.log_delta(u, l);
  return out;
}

}  // namespace

Alignment canonical_alignment(const ScoreTrellis& trellis) {
  const StateSet terminal = trellis.terminal_argmax();
  if (terminal.empty()) throw Error(ErrorCode::AllPathsImpossible, "no finite terminal score");
  return backtrack(trellis, trellis.length() - 1, terminal.largest());
}

Alignment constrained_alignment(const ScoreTrellis& trellis, std::size_t u, int l) {
  if (u >= trellis.length()) throw Error(ErrorCode::InvalidArgument, "position beyond the trellis");
  if (trellis.normalized(u, l) == kNegInf)
    throw Error(ErrorCode::StateUnreachable,
                "state " + std::to_string(l + 1) + " has zero score at position " + std::to_string(u + 1));
  return backtrack(trellis, u, l);
}

double log_lambda(std::span<const int> path, std::span<const double> obs, const HmmModel& model, StartRow start) {
  if (path.size() != obs.size()) throw Error(ErrorCode::InvalidArgument, "path and observations differ in length");
  double total = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const double w = t == 0 ? start.log_weight(model, path[0])
                            : model.log_transition(static_cast<std::size_t>(path[t - 1]),
                                                   static_cast<std::size_t>(path[t]));
    const double f = model.emission(static_cast<std::size_t>(path[t])).log_density(obs[t]);
    if (w == kNegInf || f == kNegInf) return kNegInf;
    total += w + f;
  }
  return total;
}

bool reverse_lex_less(std::span<const int> a, std::span<const int> b) {
  for (std::size_t t = a.size(); t > 0; --t) {
    if (a[t - 1] != b[t - 1]) return a[t - 1] < b[t - 1];
  }
  return false;
}

EnumerationResult enumerate_alignments(std::span<const double> obs, const HmmModel& model, StartRow start,
                                       EnumerationLimits limits) {
  const std::size_t n = obs.size();
  const std::size_t k = model.states();
  const double total = std::pow(static_cast<double>(k), static_cast<double>(n));
  if (total > limits.max_paths)
    throw Error(ErrorCode::InstanceTooLarge, "K^n = " + std::to_string(total) + " exceeds the enumeration bound");
  const auto count = static_cast<std::size_t>(total);

  std::vector<double> scores(count);
  std::vector<int> path(n, 0);
  double best = kNegInf;
  for (std::size_t code = 0; code < count; ++code) {
    std::size_t c = code;
    for (std::size_t t = 0; t < n; ++t) {  // last position is the most significant digit
      path[t] = static_cast<int>(c % k);
      c /= k;
    }
    scores[code] = log_lambda(path, obs, model, start);
    best = std::max(best, scores[code]);
  }
  EnumerationResult out;
  out.max_log_likelihood = best;
  if (best == kNegInf) return out;
  for (std::size_t code = 0; code < count; ++code) {
    if (!reaches(scores[code], best, limits.tolerance)) continue;
    if (out.argmax_paths.size() >= limits.max_argmax)
      throw Error(ErrorCode::InstanceTooLarge, "argmax set exceeds the cap");
    std::size_t c = code;
    for (std::size_t t = 0; t < n; ++t) {
      path[t] = static_cast<int>(c % k);
      c /= k;
    }
    out.argmax_paths.push_back(path);
  }
  return out;
}

}  // namespace avt
