#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <avt/errors.hpp>

namespace avt::harness {

enum class Kind { Simulate, Train, DetectNodes, CertifyBarrier, EstimateQ, FixedPointSuite };

std::string to_string(Kind kind);
Kind parse_kind(const std::string& text);

/// One experiment: what to run, on which model, with which seeds, and where to write.
struct ExperimentSpec {
  Kind kind = Kind::Simulate;
  std::filesystem::path model;
  std::filesystem::path out;
  std::optional<std::filesystem::path> observations;
  std::optional<std::filesystem::path> barrier;
  std::size_t n = 1000;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> algorithms{"VT"};
  std::size_t r_max = 4;
  std::size_t cycles = 10000;
  std::size_t bins = 64;
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
  std::string adjustment_mode = "mixture-quadrature";
  std::string alignment = "canonical";
  std::size_t quadrature_points = 15;
  std::size_t verify_trials = 10000;

  /// Throws Error(InvalidArgument) on an inconsistent spec.
  void validate() const;
  /// Canonical JSON form (sorted keys, fixed formatting); hashed into the manifest.
  std::string canonical_json() const;
};

/// Fields from a JSON config; relative paths resolve against `base`.
ExperimentSpec spec_from_json(const std::string& text, const std::filesystem::path& base = {});

struct ResultBundle {
  std::map<std::string, std::string> files;  // data files by name (CSV, JSON)
  std::string summary;                       // summary.json
  std::string manifest;                      // manifest.json
};

/// Runs the experiment and commits the bundle to spec.out through a sibling temp directory.
ResultBundle run_experiment(const ExperimentSpec& spec);

/// Computes the bundle without touching the file system (manifest left empty).
ResultBundle compute_bundle(const ExperimentSpec& spec);

/// Process exit code for a library error; 1 for anything unrecognized.
int exit_code(ErrorCode code);

std::string sha256_hex(const std::string& bytes);

}  // namespace avt::harness
