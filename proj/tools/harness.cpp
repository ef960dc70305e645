#include "harness.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <openssl/evp.h>

#include <avt/avt.hpp>

#include "json.hpp"

namespace avt::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<Kind, std::string>> kKinds = {
    {Kind::Simulate, "simulate"},          {Kind::Train, "train"},
    {Kind::DetectNodes, "detect-nodes"},   {Kind::CertifyBarrier, "certify-barrier"},
    {Kind::EstimateQ, "estimate-q"},       {Kind::FixedPointSuite, "fixed-point-suite"},
};

bool stochastic(Kind kind, bool has_observations) {
  switch (kind) {
    case Kind::DetectNodes:
    case Kind::Train: return !has_observations;
    case Kind::CertifyBarrier: return false;
    default: return true;
  }
}

}  // namespace

std::string to_string(Kind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "?";
}

Kind parse_kind(const std::string& text) {
  for (const auto& [k, name] : kKinds)
    if (name == text) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown experiment kind '" + text + "'");
}

void ExperimentSpec::validate() const {
  if (model.empty()) throw Error(ErrorCode::InvalidArgument, "a model file is required");
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "an output directory is required");
  if (stochastic(kind, observations.has_value()) && seeds.empty())
    throw Error(ErrorCode::InvalidArgument, "seeds must be non-empty for " + to_string(kind));
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  if (cycles == 0 || bins == 0) throw Error(ErrorCode::InvalidArgument, "cycles and bins must be positive");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "algorithms must be non-empty");
  for (const auto& a : algorithms) parse_algorithm(a);
  parse_adjustment_mode(adjustment_mode);
  if (alignment != "canonical" && alignment != "segmented")
    throw Error(ErrorCode::InvalidArgument, "alignment must be 'canonical' or 'segmented'");
}

std::string ExperimentSpec::canonical_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["model"] = model.generic_string();
  j["out"] = out.generic_string();
  j["observations"] = observations ? json(observations->generic_string()) : json(nullptr);
  j["barrier"] = barrier ? json(barrier->generic_string()) : json(nullptr);
  j["n"] = n;
  j["seeds"] = seeds;
  j["algorithms"] = algorithms;
  j["r_max"] = r_max;
  j["cycles"] = cycles;
  j["bins"] = bins;
  j["max_iterations"] = max_iterations;
  j["tolerance"] = tolerance;
  j["adjustment_mode"] = adjustment_mode;
  j["alignment"] = alignment;
  j["quadrature_points"] = quadrature_points;
  j["verify_trials"] = verify_trials;
  return j.dump(2) + "\n";
}

ExperimentSpec spec_from_json(const std::string& text, const fs::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  auto path = [&](const std::string& key) {
    fs::path p = j.at(key).get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  ExperimentSpec spec;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") spec.kind = parse_kind(value.get<std::string>());
      else if (key == "model") spec.model = path(key);
      else if (key == "out") spec.out = path(key);
      else if (key == "observations") spec.observations = path(key);
      else if (key == "barrier") spec.barrier = path(key);
      else if (key == "n") spec.n = value.get<std::size_t>();
      else if (key == "seeds") spec.seeds = value.get<std::vector<std::uint64_t>>();
      else if (key == "seed") spec.seeds = {value.get<std::uint64_t>()};
      else if (key == "algorithms") spec.algorithms = value.get<std::vector<std::string>>();
      else if (key == "r_max") spec.r_max = value.get<std::size_t>();
      else if (key == "cycles") spec.cycles = value.get<std::size_t>();
      else if (key == "bins") spec.bins = value.get<std::size_t>();
      else if (key == "max_iterations") spec.max_iterations = value.get<std::size_t>();
      else if (key == "tolerance") spec.tolerance = value.get<double>();
      else if (key == "adjustment_mode") spec.adjustment_mode = value.get<std::string>();
      else if (key == "alignment") spec.alignment = value.get<std::string>();
      else if (key == "quadrature_points") spec.quadrature_points = value.get<std::size_t>();
      else if (key == "verify_trials") spec.verify_trials = value.get<std::size_t>();
      else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  return spec;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return 2;
    case ErrorCode::InvalidModel: return 3;
    case ErrorCode::Io: return 4;
    case ErrorCode::AllPathsImpossible: return 5;
    case ErrorCode::InstanceTooLarge: return 6;
    case ErrorCode::StateUnreachable: return 7;
    case ErrorCode::HypothesisLllFails: return 8;
    case ErrorCode::NoClusterFound: return 9;
    case ErrorCode::CycleTimeout: return 10;
    case ErrorCode::DegenerateSample: return 11;
    case ErrorCode::EmptyCell: return 12;
    case ErrorCode::QuadratureFailure: return 13;
    case ErrorCode::SeparationFailed: return 14;
  }
  return 1;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return out;
}

json parameters_json(const ParameterSet& p) {
  json out = json::array();
  for (const auto& v : p) out.push_back(v);
  return out;
}

BarrierSpec resolve_barrier(const ExperimentSpec& spec, const HmmModel& model) {
  if (spec.barrier) return barrier_from_json(read_text(*spec.barrier));
  return default_barrier(model);
}

std::string seed_suffix(std::uint64_t seed) { return "_seed" + std::to_string(seed); }

json run_simulate(const ExperimentSpec& spec, const HmmModel& model, ResultBundle& bundle) {
  json runs = json::array();
  for (auto seed : spec.seeds) {
    const Realization r = simulate(model, spec.n, seed);
    bundle.files["realization" + seed_suffix(seed) + ".csv"] = realization_csv(r);
    std::vector<std::size_t> counts(model.states(), 0);
    for (int s : r.states) ++counts[static_cast<std::size_t>(s)];
    runs.push_back({{"seed", seed}, {"n", spec.n}, {"state_counts", counts}});
  }
  return {{"runs", runs}};
}

std::vector<std::pair<std::string, std::vector<double>>> observation_sets(const ExperimentSpec& spec,
                                                                          const HmmModel& model) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  if (spec.observations) {
    out.emplace_back("", load_observations(*spec.observations));
    return out;
  }
  for (auto seed : spec.seeds) out.emplace_back(seed_suffix(seed), simulate(model, spec.n, seed).observations);
  return out;
}

json run_detect_nodes(const ExperimentSpec& spec, const HmmModel& model, ResultBundle& bundle) {
  json runs = json::array();
  for (const auto& [suffix, obs] : observation_sets(spec, model)) {
    const auto records = detect_nodes(obs, model, spec.r_max);
    bundle.files["nodes" + suffix + ".csv"] = nodes_csv(records);
    json listed = json::array();
    const ScoreTrellis trellis = build_trellis(obs, model);
    const PartialLikelihood partial(model, obs);
    constexpr std::size_t kListed = 1000;
    for (std::size_t i = 0; i < records.size() && i < kListed; ++i) {
      const auto& rec = records[i];
      std::vector<std::size_t> orders;
      for (std::size_t r = rec.r; r <= spec.r_max && rec.u + r + 2 <= obs.size(); ++r)
        if (is_node(trellis, partial, rec.u, rec.l, r)) orders.push_back(r);
      listed.push_back({{"u", rec.u + 1}, {"l", rec.l + 1}, {"r", rec.r}, {"valid_orders", orders}});
    }
    runs.push_back({{"source", suffix.empty() ? spec.observations->filename().string() : "simulated" + suffix},
                    {"n", obs.size()},
                    {"node_count", records.size()},
                    {"nodes", listed}});
  }
  return {{"runs", runs}, {"r_max", spec.r_max}};
}

json run_train(const ExperimentSpec& spec, const HmmModel& model, ResultBundle& bundle) {
  json runs = json::array();
  const auto sets = observation_sets(spec, model);
  for (const auto& name : spec.algorithms) {
    TrainingConfig config;
    config.algorithm = parse_algorithm(name);
    config.max_iterations = spec.max_iterations;
    config.parameter_tolerance = spec.tolerance;
    config.adjustment_mode =
        config.algorithm == Algorithm::VA ? parse_adjustment_mode(spec.adjustment_mode) : AdjustmentMode::None;
    config.mc_cycles = spec.cycles;
    config.quadrature_points = spec.quadrature_points;
    config.seed = spec.seeds.empty() ? 1 : spec.seeds.front();
    config.alignment = spec.alignment == "segmented" ? AlignmentKind::Segmented : AlignmentKind::Canonical;
    if (config.alignment == AlignmentKind::Segmented || config.adjustment_mode == AdjustmentMode::RegenerativeMc)
      config.barrier = resolve_barrier(spec, model);
    for (const auto& [suffix, obs] : sets) {
      const TrainingTrace trace = train(model, obs, config);
      bundle.files["trace_" + to_string(config.algorithm) + suffix + ".csv"] = trace_csv(trace);
      runs.push_back({{"algorithm", to_string(config.algorithm)},
                      {"source", suffix.empty() ? "observations" : "simulated" + suffix},
                      {"iterations", trace.iterations.size() - 1},
                      {"converged", trace.converged},
                      {"initial", parameters_json(trace.iterations.front().parameters)},
                      {"final", parameters_json(trace.iterations.back().parameters)}});
    }
  }
  return {{"runs", runs}};
}

json run_certify(const ExperimentSpec& spec, const HmmModel& model, ResultBundle& bundle) {
  json summary;
  BarrierSpec barrier;
  if (spec.barrier) {
    barrier = barrier_from_json(read_text(*spec.barrier));
    summary["source"] = "file";
  } else if (model.all_discrete() && !model.is_mixture()) {
    const Construction c = construct_barrier_set(model);
    barrier = separate_barriers(c.spec, model);
    summary["source"] = c.details.simple ? "revealing symbol" : "cluster construction";
    if (!c.details.simple)
      summary["construction"] = {{"epsilon", c.details.epsilon},
                                 {"cluster", c.details.cluster},
                                 {"m", c.details.primitivity},
                                 {"k", c.details.repetitions}};
  } else {
    barrier = default_barrier(model);
    summary["source"] = "mixture cell";
  }
  VerifyOptions options;
  options.trials = spec.verify_trials;
  options.seed = spec.seeds.empty() ? 1 : spec.seeds.front();
  barrier.certificate = verify_barrier(barrier, model, options);
  barrier.separated = is_separated(barrier);
  bundle.files["barrier.json"] = barrier_to_json(barrier);
  const auto& c = barrier.certificate;
  summary["status"] = to_string(c.status);
  summary["method"] = c.method;
  summary["closure_complete"] = c.closure_complete;
  summary["start_state_bound"] = c.start_state_bound;
  summary["M"] = barrier.length();
  summary["r"] = barrier.order;
  summary["l"] = barrier.node_state + 1;
  summary["separated"] = barrier.separated;
  if (c.status == CertificateStatus::Counterexample)
    summary["counterexample"] = {{"prefix", c.counterexample_prefix}, {"block", c.counterexample_block}};
  return summary;
}

json run_estimate_q(const ExperimentSpec& spec, const HmmModel& model, ResultBundle& bundle) {
  const BarrierSpec barrier = resolve_barrier(spec, model);
  const std::uint64_t seed = spec.seeds.front();
  const Realization real = simulate(model, spec.n, seed);
  RegenerativeOptions options;
  options.cycles = spec.cycles;
  options.seed = seed;
  options.binning = model.all_discrete() ? Binning::alphabet(model.alphabet_size())
                                         : Binning::pooled(real.observations, spec.bins);
  const RegenerativeEstimate estimate = estimate_Q_regenerative(model, barrier, options);
  const SegmentedAlignment seg = segment_alignment(real.observations, model, barrier);
  const auto q_hat = frozen_measures(seg, real.observations, model.states());
  const auto canonical = canonical_alignment(build_trellis(real.observations, model));
  const auto p_hat = empirical_measures(canonical.path, real.observations, model.states());

  std::vector<std::vector<double>> q_mass, p_mass;
  json states = json::array();
  for (std::size_t l = 0; l < model.states(); ++l) {
    q_mass.push_back(measure_histogram(q_hat[l], estimate.binning));
    p_mass.push_back(measure_histogram(p_hat[l], estimate.binning));
    states.push_back({{"state", l + 1},
                      {"tv_qhat_regenerative", total_variation(q_mass[l], estimate.mass[l])},
                      {"sup_phat_qhat", sup_distance(p_mass[l], q_mass[l])},
                      {"cycle_visits", estimate.pooled[l].count()},
                      {"fallback", estimate.pooled[l].fallback}});
  }
  bundle.files["q_regenerative.csv"] = measures_csv(estimate.mass, estimate.binning);
  bundle.files["q_standard_error.csv"] = measures_csv(estimate.standard_error, estimate.binning);
  bundle.files["q_hat.csv"] = measures_csv(q_mass, estimate.binning);
  bundle.files["p_hat.csv"] = measures_csv(p_mass, estimate.binning);
  bundle.files["ledger.csv"] = ledger_csv(renewal_ledger(real, barrier));
  std::string cycles = "cycle,length\n";
  for (std::size_t c = 0; c < estimate.cycle_lengths.size(); ++c)
    cycles += std::to_string(c + 1) + "," + std::to_string(estimate.cycle_lengths[c]) + "\n";
  bundle.files["cycles.csv"] = cycles;
  std::vector<double> lengths(estimate.cycle_lengths.begin(), estimate.cycle_lengths.end());
  const MeanSe len = mean_se(lengths);
  return {{"states", states},
          {"cycles", spec.cycles},
          {"n", spec.n},
          {"mean_cycle_length", len.mean},
          {"mean_cycle_length_se", len.se},
          {"barrier_M", barrier.length()},
          {"barrier_r", barrier.order}};
}

json run_fixed_point(const ExperimentSpec& spec, const HmmModel& model, ResultBundle& bundle) {
  const ParameterSet truth = parameters_of(model);
  AdjustmentOptions adjustment;
  adjustment.mode = parse_adjustment_mode(spec.adjustment_mode);
  adjustment.quadrature_points = spec.quadrature_points;
  adjustment.mc_cycles = spec.cycles;
  adjustment.seed = spec.seeds.front();
  if (adjustment.mode == AdjustmentMode::RegenerativeMc) adjustment.barrier = resolve_barrier(spec, model);
  StepOptions step;
  if (spec.alignment == "segmented") {
    step.alignment = AlignmentKind::Segmented;
    step.barrier = resolve_barrier(spec, model);
  }
  const std::size_t k = truth.size();
  std::vector<double> vt_disp, va_disp;
  std::vector<std::vector<double>> vt_state(k), va_state(k);
  std::size_t va_better = 0;
  std::string per_seed = "seed,state,vt_displacement,va_displacement\n";
  std::string params = "seed,state,param_name,true_value,vt_value,va_value\n";
  for (auto seed : spec.seeds) {
    const Realization r = simulate(model, spec.n, seed);
    const StepResult vt = vt_step(model, r.observations, step);
    const StepResult va = va_step(model, r.observations, step, adjustment);
    const double dv = max_norm_difference(truth, vt.parameters);
    const double da = max_norm_difference(truth, va.parameters);
    vt_disp.push_back(dv);
    va_disp.push_back(da);
    if (da < dv) ++va_better;
    for (std::size_t l = 0; l < k; ++l) {
      const double sv = max_norm_difference({truth[l]}, {vt.parameters[l]});
      const double sa = max_norm_difference({truth[l]}, {va.parameters[l]});
      vt_state[l].push_back(sv);
      va_state[l].push_back(sa);
      per_seed += std::to_string(seed) + "," + std::to_string(l + 1) + "," + format_number(sv) + "," +
                  format_number(sa) + "\n";
      const auto names = model.emission(l).trainable_names();
      for (std::size_t i = 0; i < truth[l].size(); ++i)
        params += std::to_string(seed) + "," + std::to_string(l + 1) + "," + names[i] + "," + format_number(truth[l][i]) +
                  "," + format_number(vt.parameters[l][i]) + "," + format_number(va.parameters[l][i]) + "\n";
    }
  }
  bundle.files["per_seed.csv"] = per_seed;
  bundle.files["parameters.csv"] = params;
  const MeanSe vt = mean_se(vt_disp);
  const MeanSe va = mean_se(va_disp);
  json by_state = json::array();
  for (std::size_t l = 0; l < k; ++l) {
    const MeanSe sv = mean_se(vt_state[l]);
    const MeanSe sa = mean_se(va_state[l]);
    by_state.push_back({{"state", l + 1},
                        {"vt_displacement", {{"mean", sv.mean}, {"stderr", sv.se}}},
                        {"va_displacement", {{"mean", sa.mean}, {"stderr", sa.se}}}});
  }
  json summary = {{"n", spec.n},
                  {"seeds", spec.seeds.size()},
                  {"backend", spec.adjustment_mode},
                  {"vt_displacement", {{"mean", vt.mean}, {"stderr", vt.se}}},
                  {"va_displacement", {{"mean", va.mean}, {"stderr", va.se}}},
                  {"va_better_count", va_better}};
  if (model.is_mixture() && !model.all_discrete()) {
    const ParameterSet mu = mu_map_mixture(model, spec.quadrature_points);
    summary["quadrature_bias"] = max_norm_difference(mu, truth);
    summary["mu"] = parameters_json(mu);
    for (std::size_t l = 0; l < k; ++l) by_state[l]["quadrature_bias"] = max_norm_difference({mu[l]}, {truth[l]});
  } else {
    summary["quadrature_bias"] = nullptr;
  }
  summary["by_state"] = by_state;
  return summary;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

ResultBundle compute_bundle(const ExperimentSpec& spec) {
  spec.validate();
  const HmmModel model = load_model(spec.model);
  ResultBundle bundle;
  json summary;
  switch (spec.kind) {
    case Kind::Simulate: summary = run_simulate(spec, model, bundle); break;
    case Kind::Train: summary = run_train(spec, model, bundle); break;
    case Kind::DetectNodes: summary = run_detect_nodes(spec, model, bundle); break;
    case Kind::CertifyBarrier: summary = run_certify(spec, model, bundle); break;
    case Kind::EstimateQ: summary = run_estimate_q(spec, model, bundle); break;
    case Kind::FixedPointSuite: summary = run_fixed_point(spec, model, bundle); break;
  }
  summary["kind"] = to_string(spec.kind);
  bundle.summary = summary.dump(2) + "\n";
  return bundle;
}

ResultBundle run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();

  // Fail on an unwritable destination before any computation.
  const fs::path out = fs::absolute(spec.out);
  const fs::path staging = out.parent_path() / ("." + out.filename().string() + ".partial");
  std::error_code ec;
  fs::create_directories(out.parent_path(), ec);
  fs::remove_all(staging, ec);
  if (!fs::create_directory(staging, ec) || ec)
    throw Error(ErrorCode::Io, "cannot create output staging directory " + staging.string());

  try {
    ResultBundle bundle = compute_bundle(spec);
    const std::string spec_text = spec.canonical_json();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json files = json::array();
    for (const auto& [name, content] : bundle.files) files.push_back(name);
    const json manifest = {{"spec_sha256", sha256_hex(spec_text)},
                           {"library_version", std::string(version())},
                           {"wall_clock", {{"started_utc", started_utc}, {"elapsed_seconds", elapsed}}},
                           {"files", files}};
    bundle.manifest = manifest.dump(2) + "\n";
    write_text(staging / "spec.json", spec_text);
    write_text(staging / "manifest.json", bundle.manifest);
    write_text(staging / "summary.json", bundle.summary);
    for (const auto& [name, content] : bundle.files) write_text(staging / name, content);
    fs::remove_all(out, ec);
    fs::rename(staging, out, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move results into " + out.string() + ": " + ec.message());
    return bundle;
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
}

}  // namespace avt::harness
