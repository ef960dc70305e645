#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <avt/errors.hpp>
#include <avt/io.hpp>

#include "CLI11.hpp"
#include "harness.hpp"

namespace fs = std::filesystem;
using avt::harness::ExperimentSpec;

namespace {

struct Flags {
  std::string model;
  std::string config;
  std::string out;
  std::string observations;
  std::string barrier;
  std::vector<std::uint64_t> seeds;
  std::size_t n = 0;
  std::vector<std::string> algorithms;
  std::size_t r_max = 0;
  std::size_t cycles = 0;
  std::size_t bins = 0;
  std::size_t max_iterations = 0;
  std::string adjustment;
  std::string alignment;
  std::size_t verify_trials = 0;
  bool quiet = false;
};

void add_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--model,-m", f.model, "Model JSON file");
  sub.add_option("--config,-c", f.config, "Experiment config JSON (flags override it)");
  sub.add_option("--out,-o", f.out, "Output directory (replaced atomically)");
  sub.add_option("--observations", f.observations, "Observation CSV instead of simulated data");
  sub.add_option("--barrier", f.barrier, "Barrier JSON instead of the automatic one");
  sub.add_option("--seed,--seeds", f.seeds, "Seed list (repeat or comma-separate)")->delimiter(',');
  sub.add_option("--n", f.n, "Sequence length");
  sub.add_option("--algo", f.algorithms, "Algorithms: EM, VT, VA")->delimiter(',');
  sub.add_option("--r-max", f.r_max, "Largest node order searched");
  sub.add_option("--cycles", f.cycles, "Regeneration cycles");
  sub.add_option("--bins", f.bins, "Histogram bins for continuous measures");
  sub.add_option("--max-iterations", f.max_iterations, "Training iterations");
  sub.add_option("--adjustment", f.adjustment, "none | mixture-quadrature | regenerative-mc");
  sub.add_option("--alignment", f.alignment, "canonical | segmented");
  sub.add_option("--verify-trials", f.verify_trials, "Sampling trials for continuous barriers");
  sub.add_flag("--quiet,-q", f.quiet, "Do not print the summary");
}

ExperimentSpec build_spec(const CLI::App& sub, const Flags& f, avt::harness::Kind kind) {
  ExperimentSpec spec;
  if (!f.config.empty()) {
    const fs::path cfg = f.config;
    spec = avt::harness::spec_from_json(avt::read_text(cfg), cfg.parent_path());
  }
  spec.kind = kind;
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--model")) spec.model = f.model;
  if (given("--out")) spec.out = f.out;
  if (given("--observations")) spec.observations = fs::path(f.observations);
  if (given("--barrier")) spec.barrier = fs::path(f.barrier);
  if (given("--seed")) spec.seeds = f.seeds;
  if (given("--n")) spec.n = f.n;
  if (given("--algo")) spec.algorithms = f.algorithms;
  if (given("--r-max")) spec.r_max = f.r_max;
  if (given("--cycles")) spec.cycles = f.cycles;
  if (given("--bins")) spec.bins = f.bins;
  if (given("--max-iterations")) spec.max_iterations = f.max_iterations;
  if (given("--adjustment")) spec.adjustment_mode = f.adjustment;
  if (given("--alignment")) spec.alignment = f.alignment;
  if (given("--verify-trials")) spec.verify_trials = f.verify_trials;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viterbi alignment, node detection and adjusted Viterbi training experiments"};
  app.require_subcommand(1);
  const std::vector<std::pair<avt::harness::Kind, std::string>> kinds = {
      {avt::harness::Kind::Simulate, "Simulate (Y, X) realizations"},
      {avt::harness::Kind::Train, "Run EM / VT / VA training loops"},
      {avt::harness::Kind::DetectNodes, "List l-nodes with their minimal order"},
      {avt::harness::Kind::CertifyBarrier, "Construct or load a barrier and verify it"},
      {avt::harness::Kind::EstimateQ, "Regenerative estimate of the limit measures Q_l"},
      {avt::harness::Kind::FixedPointSuite, "One-step VT vs VA displacement from the true parameters"},
  };
  Flags flags;
  std::vector<std::pair<CLI::App*, avt::harness::Kind>> subs;
  for (const auto& [kind, help] : kinds) {
    CLI::App* sub = app.add_subcommand(avt::harness::to_string(kind), help);
    add_flags(*sub, flags);
    subs.emplace_back(sub, kind);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const auto& [sub, kind] : subs) {
      if (!sub->parsed()) continue;
      const ExperimentSpec spec = build_spec(*sub, flags, kind);
      const auto bundle = avt::harness::run_experiment(spec);
      if (!flags.quiet) std::cout << bundle.summary;
    }
    return 0;
  } catch (const avt::ModelError& e) {
    std::string joined;
    for (const auto& d : e.diagnostics()) joined += (joined.empty() ? "" : "; ") + d;
    std::cerr << "avt: invalid model: " << joined << "\n";
    return avt::harness::exit_code(e.code());
  } catch (const avt::Error& e) {
    std::cerr << "avt: " << e.what() << "\n";
    return avt::harness::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "avt: internal error: " << e.what() << "\n";
    return 1;
  }
}
