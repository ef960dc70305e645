#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "avt/emission.hpp"
#include "avt/logspace.hpp"

namespace avt {

/// Unvalidated model parts as read from a file or assembled by a caller.
struct ModelDescription {
  std::vector<std::vector<double>> transition;
  std::vector<double> initial;
  std::vector<EmissionModel> emissions;
};

/// Validated hidden Markov model: row-stochastic, irreducible, aperiodic transition
/// matrix, an initial distribution and one emission model per state. Immutable.
class HmmModel {
 public:
  /// Throws ModelError listing every violated invariant.
  explicit HmmModel(ModelDescription description);

  std::size_t states() const { return initial_.size(); }
  double transition(std::size_t i, std::size_t j) const { return transition_[i][j]; }
  double log_transition(std::size_t i, std::size_t j) const { return log_transition_(i, j); }
  const std::vector<double>& transition_row(std::size_t i) const { return transition_[i]; }
  const std::vector<std::vector<double>>& transition_matrix() const { return transition_; }
  const LogMatrix& log_transitions() const { return log_transition_; }
  double initial(std::size_t i) const { return initial_[i]; }
  const std::vector<double>& initial_distribution() const { return initial_; }
  const EmissionModel& emission(std::size_t l) const { return emissions_[l]; }
  const std::vector<EmissionModel>& emissions() const { return emissions_; }

  /// log f_l(x) for every state.
  std::vector<double> log_densities(double x) const;

  /// Same chain with replaced emissions (revalidated).
  HmmModel with_emissions(std::vector<EmissionModel> emissions) const;

  /// Every transition row identical, i.e. the observations form an i.i.d. mixture.
  bool is_mixture() const;
  bool all_discrete() const;
  /// Largest alphabet over discrete states (0 when no state is discrete).
  std::size_t alphabet_size() const;

  ModelDescription description() const { return {transition_, initial_, emissions_}; }

 private:
  std::vector<std::vector<double>> transition_;
  std::vector<double> initial_;
  std::vector<EmissionModel> emissions_;
  LogMatrix log_transition_;
};

/// Returns the model when valid, otherwise the list of diagnostics (1-based indices).
std::variant<HmmModel, std::vector<std::string>> validate_model(ModelDescription description);

/// Diagnostics only; empty means valid.
std::vector<std::string> diagnose(const ModelDescription& description);

/// Solves pi P = pi, sum pi = 1 for the validated chain.
std::vector<double> stationary_distribution(const HmmModel& model);

}  // namespace avt
