#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avt/alignment_process.hpp"
#include "avt/barrier.hpp"
#include "avt/model.hpp"

namespace avt {

enum class Algorithm { EM, VT, VA };
enum class AdjustmentMode { None, MixtureQuadrature, RegenerativeMc };
enum class AlignmentKind { Canonical, Segmented };

std::string to_string(Algorithm algorithm);
std::string to_string(AdjustmentMode mode);
Algorithm parse_algorithm(const std::string& text);
AdjustmentMode parse_adjustment_mode(const std::string& text);

struct TrainingConfig {
  Algorithm algorithm = Algorithm::VT;
  std::size_t max_iterations = 100;
  double parameter_tolerance = 1e-6;
  AdjustmentMode adjustment_mode = AdjustmentMode::None;
  std::size_t mc_cycles = 10000;
  std::size_t quadrature_points = 15;  // Gauss-Kronrod rule: 15, 21, 31, 41, 51 or 61
  std::uint64_t seed = 1;
  AlignmentKind alignment = AlignmentKind::Canonical;
  std::optional<BarrierSpec> barrier;  // segmented alignment / regenerative backend

  /// Throws Error(InvalidArgument).
  void validate() const;
};

/// Per-state parameter vectors in the order of EmissionModel::trainable().
using ParameterSet = std::vector<std::vector<double>>;

ParameterSet parameters_of(const HmmModel& model);
double max_norm_difference(const ParameterSet& a, const ParameterSet& b);

/// Maximum-likelihood update of `current` from a non-empty sample; the variance of a
/// Gaussian and the orientation of an exponential are kept. Throws Error(DegenerateSample).
EmissionModel mle_from_measure(const EmpiricalMeasure& measure, const EmissionModel& current);

struct StepResult {
  ParameterSet parameters;                  // theta^{j+1}
  std::vector<std::size_t> subsample_sizes;
  double alignment_log_likelihood = kNegInf;
  ParameterSet delta;                       // VA only
  double data_log_likelihood = kNegInf;     // EM only, at theta^j
};

struct StepOptions {
  AlignmentKind alignment = AlignmentKind::Canonical;
  std::optional<BarrierSpec> barrier;
};

StepResult vt_step(const HmmModel& model, std::span<const double> obs, const StepOptions& options = {});

struct AdjustmentOptions {
  AdjustmentMode mode = AdjustmentMode::MixtureQuadrature;
  std::size_t quadrature_points = 15;
  std::size_t mc_cycles = 10000;
  std::uint64_t seed = 1;
  std::optional<BarrierSpec> barrier;
};

/// mu_l(theta) for an i.i.d. mixture: the MLE of the cell-restricted mixture law
/// q_l ∝ (sum_i p_i f_i) 1_{S_l}. Throws Error(EmptyCell) or Error(QuadratureFailure).
ParameterSet mu_map_mixture(const HmmModel& model, std::size_t quadrature_points = 15);

/// Cell masses Q(S_l) of the mixture.
std::vector<double> mixture_cell_masses(const HmmModel& model, std::size_t quadrature_points = 15);

/// Mass of the cell-restricted mixture law q_l on each interval of a binning.
std::vector<double> mixture_cell_histogram(const HmmModel& model, int state, const Binning& binning,
                                           std::size_t quadrature_points = 15);

/// Delta_l(theta) = theta_l - mu_l(theta); depends only on the model.
ParameterSet adjustment_delta(const HmmModel& model, const AdjustmentOptions& options);

/// VT step followed by theta^{j+1} = mu-hat + Delta(theta^j). Parameters leaving their
/// domain are projected back (probabilities clipped and renormalized, rates floored).
StepResult va_step(const HmmModel& model, std::span<const double> obs, const StepOptions& step,
                   const AdjustmentOptions& adjustment);

/// One Baum-Welch emission update with transition and initial held fixed.
StepResult em_step(const HmmModel& model, std::span<const double> obs);

/// Data log-likelihood log P(x) by the scaled forward pass.
double data_log_likelihood(const HmmModel& model, std::span<const double> obs);

struct IterationRecord {
  std::size_t iteration = 0;
  ParameterSet parameters;
  ParameterSet delta;
  std::vector<std::size_t> subsample_sizes;
  double alignment_log_likelihood = kNegInf;
  double data_log_likelihood = kNegInf;
};

struct TrainingTrace {
  Algorithm algorithm = Algorithm::VT;
  std::vector<IterationRecord> iterations;  // iterations[0] holds theta^0
  bool converged = false;
  std::vector<std::vector<std::string>> parameter_names;
};

/// Iterates the configured step until max_iterations or a max-norm change below tolerance.
TrainingTrace train(const HmmModel& model, std::span<const double> obs, const TrainingConfig& config);

/// The model with a parameter set applied.
HmmModel with_parameters(const HmmModel& model, const ParameterSet& parameters);

}  // namespace avt
