#include "avt/training.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "avt/errors.hpp"
#include "avt/trellis.hpp"
#include "avt/voronoi.hpp"

namespace avt {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::EM: return "EM";
    case Algorithm::VT: return "VT";
    case Algorithm::VA: return "VA";
  }
  return "?";
}

std::string to_string(AdjustmentMode mode) {
  switch (mode) {
    case AdjustmentMode::None: return "none";
    case AdjustmentMode::MixtureQuadrature: return "mixture-quadrature";
    case AdjustmentMode::RegenerativeMc: return "regenerative-mc";
  }
  return "?";
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Algorithm parse_algorithm(const std::string& text) {
  const std::string t = lower(text);
  if (t == "em") return Algorithm::EM;
  if (t == "vt") return Algorithm::VT;
  if (t == "va") return Algorithm::VA;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + text + "' (expected EM, VT or VA)");
}

AdjustmentMode parse_adjustment_mode(const std::string& text) {
  const std::string t = lower(text);
  if (t == "none") return AdjustmentMode::None;
  if (t == "mixture-quadrature") return AdjustmentMode::MixtureQuadrature;
  if (t == "regenerative-mc") return AdjustmentMode::RegenerativeMc;
  throw Error(ErrorCode::InvalidArgument, "unknown adjustment mode '" + text + "'");
}

namespace {

bool supported_rule(std::size_t points) {
  return points == 15 || points == 21 || points == 31 || points == 41 || points == 51 || points == 61;
}

}  // namespace

void TrainingConfig::validate() const {
  if (algorithm == Algorithm::VA && adjustment_mode == AdjustmentMode::None)
    throw Error(ErrorCode::InvalidArgument, "VA needs an adjustment mode");
  if (!(parameter_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "parameter tolerance must be positive");
  if (mc_cycles == 0) throw Error(ErrorCode::InvalidArgument, "mc_cycles must be positive");
  if (!supported_rule(quadrature_points))
    throw Error(ErrorCode::InvalidArgument, "quadrature_points must be one of 15, 21, 31, 41, 51, 61");
  if (alignment == AlignmentKind::Segmented && !barrier)
    throw Error(ErrorCode::InvalidArgument, "segmented alignment needs a barrier");
}

ParameterSet parameters_of(const HmmModel& model) {
  ParameterSet out;
  for (const auto& e : model.emissions()) out.push_back(e.trainable());
  return out;
}

double max_norm_difference(const ParameterSet& a, const ParameterSet& b) {
  double best = 0.0;
  for (std::size_t l = 0; l < std::min(a.size(), b.size()); ++l)
    for (std::size_t i = 0; i < std::min(a[l].size(), b[l].size()); ++i) best = std::max(best, std::abs(a[l][i] - b[l][i]));
  return best;
}

HmmModel with_parameters(const HmmModel& model, const ParameterSet& parameters) {
  std::vector<EmissionModel> emissions;
  for (std::size_t l = 0; l < model.states(); ++l) emissions.push_back(model.emission(l).with_trainable(parameters[l]));
  return model.with_emissions(std::move(emissions));
}

EmissionModel mle_from_measure(const EmpiricalMeasure& measure, const EmissionModel& current) {
  const auto& xs = measure.observations;
  if (xs.empty()) throw Error(ErrorCode::DegenerateSample, "empty sample for state " + std::to_string(measure.state + 1));
  const auto n = static_cast<double>(xs.size());
  switch (current.family()) {
    case Family::Discrete: {
      std::vector<double> freq(current.alphabet_size(), 0.0);
      for (double x : xs) {
        const auto a = static_cast<std::size_t>(x);
        if (x < 0 || a >= freq.size() || x != std::floor(x))
          throw Error(ErrorCode::DegenerateSample, "observation outside the alphabet");
        freq[a] += 1.0;
      }
      for (double& f : freq) f /= n;
      return current.with_trainable(freq);
    }
    case Family::Gaussian: {
      double sum = 0.0;
      for (double x : xs) sum += x;
      return current.with_trainable({sum / n});
    }
    case Family::Exponential: {
      double sum = 0.0;
      for (double x : xs) sum += std::abs(x);
      if (!(sum > 0.0)) throw Error(ErrorCode::DegenerateSample, "exponential sample with zero mean magnitude");
      return current.with_trainable({n / sum});
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown family");
}

namespace {

std::vector<int> alignment_path(const HmmModel& model, std::span<const double> obs, const StepOptions& options,
                                double& log_likelihood) {
  if (options.alignment == AlignmentKind::Segmented) {
    if (!options.barrier) throw Error(ErrorCode::InvalidArgument, "segmented alignment needs a barrier");
    auto seg = segment_alignment(obs, model, *options.barrier);
    log_likelihood = seg.log_likelihood;
    return std::move(seg.path);
  }
  auto a = canonical_alignment(build_trellis(obs, model));
  log_likelihood = a.log_likelihood;
  return std::move(a.path);
}

}  // namespace

StepResult vt_step(const HmmModel& model, std::span<const double> obs, const StepOptions& options) {
  StepResult out;
  const auto path = alignment_path(model, obs, options, out.alignment_log_likelihood);
  const auto measures = empirical_measures(path, obs, model.states());
  for (std::size_t l = 0; l < model.states(); ++l) {
    out.subsample_sizes.push_back(measures[l].count());
    out.parameters.push_back(measures[l].fallback ? model.emission(l).trainable()
                                                  : mle_from_measure(measures[l], model.emission(l)).trainable());
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Mixture quadrature

namespace {

template <unsigned Points, class F>
double integrate_rule(F f, double a, double b, double* error) {
  return boost::math::quadrature::gauss_kronrod<double, Points>::integrate(f, a, b, 15, 1e-12, error);
}

template <class F>
double integrate(F f, double a, double b, std::size_t points) {
  if (!(a < b)) return 0.0;
  // Split at 0, where exponential densities jump.
  if (a < 0.0 && b > 0.0) return integrate(f, a, 0.0, points) + integrate(f, 0.0, b, points);
  double error = 0.0;
  double value = 0.0;
  switch (points) {
    case 15: value = integrate_rule<15>(f, a, b, &error); break;
    case 21: value = integrate_rule<21>(f, a, b, &error); break;
    case 31: value = integrate_rule<31>(f, a, b, &error); break;
    case 41: value = integrate_rule<41>(f, a, b, &error); break;
    case 51: value = integrate_rule<51>(f, a, b, &error); break;
    case 61: value = integrate_rule<61>(f, a, b, &error); break;
    default: throw Error(ErrorCode::InvalidArgument, "unsupported quadrature rule");
  }
  if (!(error <= 1e-8) || !std::isfinite(value))
    throw Error(ErrorCode::QuadratureFailure, "quadrature error estimate " + std::to_string(error) + " exceeds 1e-8");
  return value;
}

struct MixtureView {
  const HmmModel& model;
  const std::vector<double>& weights;

  double density(double x) const {
    double total = 0.0;
    for (std::size_t i = 0; i < model.states(); ++i) total += weights[i] * model.emission(i).density(x);
    return total;
  }
};

void require_mixture(const HmmModel& model) {
  if (!model.is_mixture()) throw Error(ErrorCode::InvalidArgument, "mixture quadrature needs identical transition rows");
}

std::vector<int> discrete_cell(const HmmModel& model, int state) {
  std::vector<int> out;
  for (std::size_t a = 0; a < model.alphabet_size(); ++a)
    if (voronoi_partition(static_cast<double>(a), model.emissions(), model.transition_row(0)) == state)
      out.push_back(static_cast<int>(a));
  return out;
}

// Integral of g * mixture density over the cell of `state`, optionally clipped to [lo, hi].
template <class G>
double cell_integral(const HmmModel& model, const std::vector<Interval>& cell, G g, std::size_t points,
                     double lo = -std::numeric_limits<double>::infinity(),
                     double hi = std::numeric_limits<double>::infinity()) {
  const MixtureView mix{model, model.transition_row(0)};
  double total = 0.0;
  for (const auto& iv : cell)
    total += integrate([&](double x) { return g(x) * mix.density(x); }, std::max(iv.lo, lo), std::min(iv.hi, hi), points);
  return total;
}

}  // namespace

std::vector<double> mixture_cell_masses(const HmmModel& model, std::size_t quadrature_points) {
  require_mixture(model);
  std::vector<double> out;
  if (model.all_discrete()) {
    const MixtureView mix{model, model.transition_row(0)};
    for (std::size_t l = 0; l < model.states(); ++l) {
      double total = 0.0;
      for (int a : discrete_cell(model, static_cast<int>(l))) total += mix.density(a);
      out.push_back(total);
    }
    return out;
  }
  const auto cells = voronoi_cells(model.emissions(), model.transition_row(0));
  for (const auto& cell : cells) out.push_back(cell_integral(model, cell, [](double) { return 1.0; }, quadrature_points));
  return out;
}

ParameterSet mu_map_mixture(const HmmModel& model, std::size_t quadrature_points) {
  require_mixture(model);
  const auto masses = mixture_cell_masses(model, quadrature_points);
  ParameterSet out;
  const MixtureView mix{model, model.transition_row(0)};
  const auto cells = model.all_discrete() ? std::vector<std::vector<Interval>>{}
                                          : voronoi_cells(model.emissions(), model.transition_row(0));
  for (std::size_t l = 0; l < model.states(); ++l) {
    if (masses[l] < 1e-12)
      throw Error(ErrorCode::EmptyCell, "cell of state " + std::to_string(l + 1) + " has mass below 1e-12");
    const EmissionModel& e = model.emission(l);
    switch (e.family()) {
      case Family::Discrete: {
        std::vector<double> q(e.alphabet_size(), 0.0);
        for (int a : discrete_cell(model, static_cast<int>(l)))
          if (static_cast<std::size_t>(a) < q.size()) q[static_cast<std::size_t>(a)] = mix.density(a) / masses[l];
        out.push_back(q);
        break;
      }
      case Family::Gaussian:
        out.push_back({cell_integral(model, cells[l], [](double x) { return x; }, quadrature_points) / masses[l]});
        break;
      case Family::Exponential: {
        const double mean_abs = cell_integral(model, cells[l], [](double x) { return std::abs(x); }, quadrature_points) / masses[l];
        if (!(mean_abs > 0.0)) throw Error(ErrorCode::DegenerateSample, "cell law with zero mean magnitude");
        out.push_back({1.0 / mean_abs});
        break;
      }
    }
  }
  return out;
}

std::vector<double> mixture_cell_histogram(const HmmModel& model, int state, const Binning& binning,
                                           std::size_t quadrature_points) {
  require_mixture(model);
  const auto masses = mixture_cell_masses(model, quadrature_points);
  const double mass = masses[static_cast<std::size_t>(state)];
  if (mass < 1e-12) throw Error(ErrorCode::EmptyCell, "cell of state " + std::to_string(state + 1) + " is empty");
  std::vector<double> out(binning.bins(), 0.0);
  if (binning.discrete()) {
    const MixtureView mix{model, model.transition_row(0)};
    for (int a : discrete_cell(model, state))
      if (static_cast<std::size_t>(a) < out.size()) out[static_cast<std::size_t>(a)] = mix.density(a) / mass;
    return out;
  }
  const auto cell = voronoi_cells(model.emissions(), model.transition_row(0))[static_cast<std::size_t>(state)];
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < out.size(); ++b) {
    const double lo = b == 0 ? -inf : binning.low(b);
    const double hi = b + 1 == out.size() ? inf : binning.high(b);
    out[b] = cell_integral(model, cell, [](double) { return 1.0; }, quadrature_points, lo, hi) / mass;
  }
  return out;
}

ParameterSet adjustment_delta(const HmmModel& model, const AdjustmentOptions& options) {
  const ParameterSet theta = parameters_of(model);
  ParameterSet mu;
  switch (options.mode) {
    case AdjustmentMode::None: {
      ParameterSet zero = theta;
      for (auto& v : zero) std::fill(v.begin(), v.end(), 0.0);
      return zero;
    }
    case AdjustmentMode::MixtureQuadrature:
      mu = mu_map_mixture(model, options.quadrature_points);
      break;
    case AdjustmentMode::RegenerativeMc: {
      const BarrierSpec barrier = options.barrier ? *options.barrier : default_barrier(model);
      RegenerativeOptions ro;
      ro.cycles = options.mc_cycles;
      ro.seed = options.seed;
      const auto estimate = estimate_Q_regenerative(model, barrier, ro);
      for (std::size_t l = 0; l < model.states(); ++l)
        mu.push_back(estimate.pooled[l].fallback ? theta[l]
                                                 : mle_from_measure(estimate.pooled[l], model.emission(l)).trainable());
      break;
    }
  }
  ParameterSet delta = theta;
  for (std::size_t l = 0; l < theta.size(); ++l)
    for (std::size_t i = 0; i < theta[l].size(); ++i) delta[l][i] = theta[l][i] - mu[l][i];
  return delta;
}

namespace {

std::vector<double> project(const EmissionModel& e, std::vector<double> values) {
  switch (e.family()) {
    case Family::Discrete: {
      double total = 0.0;
      for (double& v : values) {
        v = std::max(v, 0.0);
        total += v;
      }
      if (!(total > 0.0)) return e.trainable();
      for (double& v : values) v /= total;
      return values;
    }
    case Family::Exponential:
      values[0] = std::max(values[0], 1e-8);
      return values;
    case Family::Gaussian:
      return values;
  }
  return values;
}

}  // namespace

StepResult va_step(const HmmModel& model, std::span<const double> obs, const StepOptions& step,
                   const AdjustmentOptions& adjustment) {
  StepResult out = vt_step(model, obs, step);
  out.delta = adjustment_delta(model, adjustment);
  for (std::size_t l = 0; l < model.states(); ++l) {
    if (out.subsample_sizes[l] == 0) continue;  // empty subsample keeps theta_l exactly
    std::vector<double> v = out.parameters[l];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += out.delta[l][i];
    out.parameters[l] = project(model.emission(l), std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Baum-Welch

namespace {

struct Posteriors {
  std::vector<std::vector<double>> gamma;  // [t][state]
  double log_likelihood = kNegInf;
};

Posteriors forward_backward(const HmmModel& model, std::span<const double> obs, bool need_backward) {
  const std::size_t n = obs.size();
  const std::size_t k = model.states();
  Posteriors out;
  if (n == 0) {
    out.log_likelihood = 0.0;
    return out;
  }
  std::vector<std::vector<double>> emit(n, std::vector<double>(k, 0.0));
  std::vector<std::vector<double>> alpha(n, std::vector<double>(k, 0.0));
  std::vector<double> scale(n, 0.0);
  double log_l = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto lf = model.log_densities(obs[t]);
    const double top = *std::max_element(lf.begin(), lf.end());
    if (top == kNegInf)
      throw Error(ErrorCode::AllPathsImpossible, "observation " + std::to_string(t + 1) + " has zero density everywhere");
    for (std::size_t j = 0; j < k; ++j) emit[t][j] = std::exp(lf[j] - top);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double in = 0.0;
      if (t == 0) {
        in = model.initial(j);
      } else {
        for (std::size_t i = 0; i < k; ++i) in += alpha[t - 1][i] * model.transition(i, j);
      }
      alpha[t][j] = in * emit[t][j];
      total += alpha[t][j];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::AllPathsImpossible, "every path has zero likelihood");
    for (double& a : alpha[t]) a /= total;
    scale[t] = total;
    log_l += std::log(total) + top;
  }
  out.log_likelihood = log_l;
  if (!need_backward) return out;
  std::vector<std::vector<double>> beta(n, std::vector<double>(k, 1.0));
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < k; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) sum += model.transition(i, j) * emit[t + 1][j] * beta[t + 1][j];
      beta[t][i] = sum / scale[t + 1];
    }
  }
  out.gamma.assign(n, std::vector<double>(k, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += out.gamma[t][j] = alpha[t][j] * beta[t][j];
    for (double& g : out.gamma[t]) g /= total;
  }
  return out;
}

}  // namespace

double data_log_likelihood(const HmmModel& model, std::span<const double> obs) {
  return forward_backward(model, obs, false).log_likelihood;
}

StepResult em_step(const HmmModel& model, std::span<const double> obs) {
  const Posteriors post = forward_backward(model, obs, true);
  StepResult out;
  out.data_log_likelihood = post.log_likelihood;
  for (std::size_t l = 0; l < model.states(); ++l) {
    const EmissionModel& e = model.emission(l);
    double weight = 0.0;
    for (std::size_t t = 0; t < obs.size(); ++t) weight += post.gamma[t][l];
    out.subsample_sizes.push_back(static_cast<std::size_t>(std::llround(weight)));
    if (!(weight > 0.0)) {
      out.parameters.push_back(e.trainable());
      continue;
    }
    switch (e.family()) {
      case Family::Discrete: {
        std::vector<double> freq(e.alphabet_size(), 0.0);
        for (std::size_t t = 0; t < obs.size(); ++t) {
          const auto a = static_cast<std::size_t>(obs[t]);
          if (a < freq.size()) freq[a] += post.gamma[t][l];
        }
        for (double& f : freq) f /= weight;
        out.parameters.push_back(freq);
        break;
      }
      case Family::Gaussian: {
        double sum = 0.0;
        for (std::size_t t = 0; t < obs.size(); ++t) sum += post.gamma[t][l] * obs[t];
        out.parameters.push_back({sum / weight});
        break;
      }
      case Family::Exponential: {
        double sum = 0.0;
        for (std::size_t t = 0; t < obs.size(); ++t) sum += post.gamma[t][l] * std::abs(obs[t]);
        out.parameters.push_back(sum > 0.0 ? std::vector<double>{weight / sum} : e.trainable());
        break;
      }
    }
  }
  return out;
}

TrainingTrace train(const HmmModel& model, std::span<const double> obs, const TrainingConfig& config) {
  config.validate();
  TrainingTrace trace;
  trace.algorithm = config.algorithm;
  for (const auto& e : model.emissions()) trace.parameter_names.push_back(e.trainable_names());

  HmmModel current = model;
  IterationRecord first;
  first.parameters = parameters_of(current);
  if (config.algorithm == Algorithm::EM) first.data_log_likelihood = data_log_likelihood(current, obs);
  trace.iterations.push_back(std::move(first));

  StepOptions step;
  step.alignment = config.alignment;
  step.barrier = config.barrier;
  AdjustmentOptions adjustment;
  adjustment.mode = config.adjustment_mode;
  adjustment.quadrature_points = config.quadrature_points;
  adjustment.mc_cycles = config.mc_cycles;
  adjustment.seed = config.seed;
  adjustment.barrier = config.barrier;

  for (std::size_t j = 0; j < config.max_iterations; ++j) {
    StepResult result;
    switch (config.algorithm) {
      case Algorithm::EM: result = em_step(current, obs); break;
      case Algorithm::VT: result = vt_step(current, obs, step); break;
      case Algorithm::VA: result = va_step(current, obs, step, adjustment); break;
    }
    HmmModel next = with_parameters(current, result.parameters);
    IterationRecord rec;
    rec.iteration = j + 1;
    rec.parameters = result.parameters;
    rec.delta = result.delta;
    rec.subsample_sizes = result.subsample_sizes;
    rec.alignment_log_likelihood = result.alignment_log_likelihood;
    if (config.algorithm == Algorithm::EM) rec.data_log_likelihood = data_log_likelihood(next, obs);
    const double change = max_norm_difference(trace.iterations.back().parameters, rec.parameters);
    trace.iterations.push_back(std::move(rec));
    current = std::move(next);
    if (change < config.parameter_tolerance) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

}  // namespace avt
