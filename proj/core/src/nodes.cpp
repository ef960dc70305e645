#include "avt/nodes.hpp"

#include <algorithm>

#include "avt/errors.hpp"

namespace avt {

PartialLikelihood::PartialLikelihood(const HmmModel& model, std::span<const double> obs)
    : model_(&model), obs_(obs) {
  log_f_.reserve(obs.size());
  for (double x : obs) log_f_.push_back(model.log_densities(x));
}

LogMatrix PartialLikelihood::matrix(std::size_t u, std::size_t r) const {
  if (u + r >= obs_.size()) throw Error(ErrorCode::InvalidArgument, "partial likelihood window leaves the sequence");
  const LogMatrix& lp = model_->log_transitions();
  LogMatrix out = lp;
  for (std::size_t s = 1; s <= r; ++s) out = max_plus_through(out, log_f_[u + s], lp);
  return out;
}

LogMatrix PartialLikelihood::matrix_split(std::size_t u, std::size_t r, std::size_t split) const {
  if (split < 1 || split > r) throw Error(ErrorCode::InvalidArgument, "split point must lie in 1..r");
  const LogMatrix left = matrix(u, split - 1);
  const LogMatrix right = matrix(u + split, r - split);
  return max_plus_through(left, log_f_[u + split], right);
}

double PartialLikelihood::value(std::size_t u, int i, int j, std::size_t r) const {
  const auto a = static_cast<std::size_t>(i);
  const auto b = static_cast<std::size_t>(j);
  if (r == 0) return model_->log_transition(a, b);
  return matrix_split(u, r, 1)(a, b);
}

StateSet t_r_set(const ScoreTrellis& trellis, const PartialLikelihood& partial, std::size_t u, int j, std::size_t r) {
  if (r == 0) throw Error(ErrorCode::InvalidArgument, "t^(r) needs r >= 1");
  const LogMatrix p = partial.matrix(u, r - 1);
  const std::size_t k = trellis.states();
  const auto jj = static_cast<std::size_t>(j);
  std::vector<double> score(k);
  double best = kNegInf;
  for (std::size_t l = 0; l < k; ++l) {
    const double d = trellis.normalized(u, static_cast<int>(l));
    score[l] = (d == kNegInf || p(l, jj) == kNegInf) ? kNegInf : d + p(l, jj);
    best = std::max(best, score[l]);
  }
  StateSet out;
  for (std::size_t l = 0; l < k; ++l)
    if (reaches(score[l], best, trellis.tolerance())) out.insert(static_cast<int>(l));
  return out;
}

bool satisfies_node_criterion(std::span<const double> column, const LogMatrix& partial, int l, double tolerance) {
  const std::size_t k = column.size();
  const auto ll = static_cast<std::size_t>(l);
  for (std::size_t j = 0; j < k; ++j) {
    double best = kNegInf;
    for (std::size_t i = 0; i < k; ++i) {
      if (column[i] == kNegInf || partial(i, j) == kNegInf) continue;
      best = std::max(best, column[i] + partial(i, j));
    }
    const double mine = (column[ll] == kNegInf || partial(ll, j) == kNegInf) ? kNegInf : column[ll] + partial(ll, j);
    if (!reaches(mine, best, tolerance)) return false;
  }
  return true;
}

bool is_node(const ScoreTrellis& trellis, const PartialLikelihood& partial, std::size_t u, int l, std::size_t r) {
  const LogMatrix p = partial.matrix(u, r);
  return satisfies_node_criterion(trellis.normalized_column(u), p, l, trellis.tolerance());
}

std::vector<NodeRecord> detect_nodes(std::span<const double> obs, const HmmModel& model, std::size_t r_max,
                                     double tolerance) {
  std::vector<NodeRecord> out;
  const std::size_t n = obs.size();
  if (n < 2) return out;
  const ScoreTrellis trellis = build_trellis(obs, model, StartRow::initial(), tolerance);
  const PartialLikelihood partial(model, obs);
  const std::size_t k = model.states();
  const LogMatrix& lp = model.log_transitions();

  for (std::size_t u = 0; u + 1 < n; ++u) {
    const std::vector<double> column = trellis.normalized_column(u);
    const std::size_t r_top = std::min(r_max, n - 2 - u);
    std::vector<bool> found(k, false);
    LogMatrix p = lp;
    for (std::size_t r = 0; r <= r_top; ++r) {
      if (r > 0) {
        p = max_plus_through(p, partial.log_emissions(u + r), lp);
        const double top = p.max_entry();
        if (top != kNegInf) p.shift(-top);
      }
      for (std::size_t l = 0; l < k; ++l) {
        if (found[l]) continue;
        if (satisfies_node_criterion(column, p, static_cast<int>(l), tolerance)) {
          found[l] = true;
          out.push_back({u, static_cast<int>(l), r});
        }
      }
      bool all = true;
      for (bool f : found) all = all && f;
      if (all) break;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const NodeRecord& a, const NodeRecord& b) {
    return a.u != b.u ? a.u < b.u : a.l < b.l;
  });
  return out;
}

}  // namespace avt
