#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include <avt/avt.hpp>

#include "harness.hpp"
#include "json.hpp"
#include "support/fixtures.hpp"

using namespace avt;
using avt::testing::fixture_path;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("avt_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

harness::ExperimentSpec spec_for(harness::Kind kind, const std::string& model) {
  harness::ExperimentSpec spec;
  spec.kind = kind;
  spec.model = fixture_path("models/" + model + ".json");
  spec.out = scratch_dir(harness::to_string(kind) + "_" + model);
  return spec;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AVT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Harness, SimulateSingleState) {
  auto spec = spec_for(harness::Kind::Simulate, "k1");
  spec.n = 5;
  spec.seeds = {1};
  const auto bundle = harness::run_experiment(spec);
  const std::string csv = read_text(spec.out / "realization_seed1.csv");
  EXPECT_EQ(bundle.files.at("realization_seed1.csv"), csv);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "step,state,observation");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",1,", 0), 0U) << line;
  }
  EXPECT_EQ(rows, 5);
  for (const char* f : {"spec.json", "manifest.json", "summary.json"}) EXPECT_TRUE(fs::exists(spec.out / f));
  EXPECT_FALSE(fs::exists(spec.out.parent_path() / ("." + spec.out.filename().string() + ".partial")));
}

TEST(Harness, DetectNodesOnExampleFixture) {
  const fs::path config = fixture_path("configs/detect_nodes_example_2_4.json");
  auto spec = harness::spec_from_json(read_text(config), config.parent_path());
  spec.out = scratch_dir("detect");
  const auto bundle = harness::run_experiment(spec);
  const auto summary = json::parse(bundle.summary);
  bool found = false;
  for (const auto& node : summary["runs"][0]["nodes"]) {
    if (node["u"] == 1 && node["l"] == 1) {
      found = true;
      EXPECT_EQ(node["r"], 1);
      const auto orders = node["valid_orders"].get<std::vector<int>>();
      EXPECT_NE(std::find(orders.begin(), orders.end(), 2), orders.end());
    }
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(bundle.files.at("nodes.csv").rfind("u,l,r\n1,1,1\n", 0), 0U);
}

TEST(Harness, ManifestHashesSpec) {
  EXPECT_EQ(harness::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto spec = spec_for(harness::Kind::Simulate, "revealing_2state");
  spec.n = 10;
  harness::run_experiment(spec);
  const auto manifest = json::parse(read_text(spec.out / "manifest.json"));
  EXPECT_EQ(manifest["spec_sha256"], harness::sha256_hex(read_text(spec.out / "spec.json")));
  EXPECT_EQ(manifest["library_version"], std::string(version()));
  EXPECT_TRUE(manifest["wall_clock"].contains("started_utc"));
  const auto parsed = json::parse(read_text(spec.out / "spec.json"));
  EXPECT_EQ(parsed["kind"], "simulate");
}

TEST(Harness, BundlesAreDeterministic) {
  for (auto kind : {harness::Kind::Simulate, harness::Kind::DetectNodes, harness::Kind::Train, harness::Kind::EstimateQ}) {
    auto spec = spec_for(kind, "revealing_2state");
    spec.n = 2000;
    spec.seeds = {3, 4};
    spec.cycles = 500;
    spec.max_iterations = 3;
    const auto a = harness::compute_bundle(spec);
    const auto b = harness::compute_bundle(spec);
    EXPECT_EQ(a.files, b.files) << harness::to_string(kind);
    EXPECT_EQ(a.summary, b.summary);
  }
}

TEST(Harness, CertifyRevealing) {
  auto spec = spec_for(harness::Kind::CertifyBarrier, "revealing_2state");
  const auto bundle = harness::compute_bundle(spec);
  const auto summary = json::parse(bundle.summary);
  EXPECT_EQ(summary["status"], "certified");
  EXPECT_EQ(summary["M"], 1);
  const auto barrier = barrier_from_json(bundle.files.at("barrier.json"));
  EXPECT_EQ(barrier.certificate.status, CertificateStatus::Certified);
}

TEST(Harness, CertifyReportsCounterexampleForFileBarrier) {
  const fs::path dir = scratch_dir("cex_input");
  fs::create_directories(dir);
  write_text(dir / "b.json", R"({"M": 1, "sets": [[4]], "q": [1], "l": 1, "r": 0})");
  auto spec = spec_for(harness::Kind::CertifyBarrier, "example_2_5_discrete");
  spec.barrier = dir / "b.json";
  const auto summary = json::parse(harness::compute_bundle(spec).summary);
  EXPECT_EQ(summary["status"], "counterexample");
  EXPECT_TRUE(summary.contains("counterexample"));
}

TEST(Harness, FixedPointSuiteSummary) {
  auto spec = spec_for(harness::Kind::FixedPointSuite, "mixture_overlap");
  spec.n = 20000;
  spec.seeds = {1, 2, 3, 4};
  const auto summary = json::parse(harness::compute_bundle(spec).summary);
  EXPECT_NEAR(summary["quadrature_bias"].get<double>(), 0.16663094, 1e-6);
  EXPECT_TRUE(summary["vt_displacement"].contains("stderr"));
  EXPECT_LE(summary["va_better_count"].get<int>(), 4);
}

TEST(Harness, FarFixedPointDisplacementsSmall) {
  const fs::path config = fixture_path("configs/fixed_point_far.json");
  auto spec = harness::spec_from_json(read_text(config), config.parent_path());
  spec.out = scratch_dir("far");
  const auto summary = json::parse(harness::compute_bundle(spec).summary);
  const double vt = summary["vt_displacement"]["mean"];
  const double va = summary["va_displacement"]["mean"];
  EXPECT_LT(vt, 0.05);
  EXPECT_LT(va, 0.05);
  const double se = std::hypot(summary["vt_displacement"]["stderr"].get<double>(),
                               summary["va_displacement"]["stderr"].get<double>());
  EXPECT_LE(std::abs(vt - va), 2.0 * se + 1e-9);
}

TEST(Harness, OverlapVtDisplacementMatchesBias) {
  const fs::path config = fixture_path("configs/fixed_point_overlap.json");
  auto spec = harness::spec_from_json(read_text(config), config.parent_path());
  spec.out = scratch_dir("overlap");
  for (std::size_t n : {spec.n, 2 * spec.n}) {
    spec.n = n;
    const auto summary = json::parse(harness::compute_bundle(spec).summary);
    for (const auto& s : summary["by_state"]) {
      const double bias = s["quadrature_bias"];
      const double vt = s["vt_displacement"]["mean"];
      const double vt_se = s["vt_displacement"]["stderr"];
      EXPECT_LE(std::abs(vt - bias), 2.0 * vt_se) << "n=" << n << " state " << s["state"];
    }
    EXPECT_GE(summary["va_better_count"].get<int>(), 18);
  }
}

TEST(Harness, VaDisplacementShrinksWithSampleSize) {
  auto spec = spec_for(harness::Kind::FixedPointSuite, "mixture_overlap");
  spec.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) spec.seeds.push_back(s);
  spec.n = 100000;
  const double small = json::parse(harness::compute_bundle(spec).summary)["va_displacement"]["mean"];
  spec.n = 200000;
  const double large = json::parse(harness::compute_bundle(spec).summary)["va_displacement"]["mean"];
  EXPECT_LT(large, small);
}

TEST(Harness, UnwritableOutputIsIo) {
  const fs::path dir = scratch_dir("blocker");
  fs::create_directories(dir.parent_path());
  write_text(dir, "not a directory");
  auto spec = spec_for(harness::Kind::Simulate, "k1");
  spec.out = dir / "inner" / "result";
  try {
    harness::run_experiment(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Harness, ExitCodesAreDistinct) {
  const std::vector<ErrorCode> codes{ErrorCode::InvalidModel,      ErrorCode::InvalidArgument, ErrorCode::Io,
                                     ErrorCode::AllPathsImpossible, ErrorCode::InstanceTooLarge, ErrorCode::StateUnreachable,
                                     ErrorCode::HypothesisLllFails, ErrorCode::NoClusterFound,  ErrorCode::SeparationFailed,
                                     ErrorCode::CycleTimeout,       ErrorCode::DegenerateSample, ErrorCode::EmptyCell,
                                     ErrorCode::QuadratureFailure};
  std::set<int> seen;
  for (auto c : codes) {
    const int code = harness::exit_code(c);
    EXPECT_GE(code, 2);
    EXPECT_TRUE(seen.insert(code).second) << to_string(c);
  }
  EXPECT_EQ(harness::exit_code(ErrorCode::InvalidArgument), 2);
}

TEST(Harness, ConfigParsing) {
  const auto spec = harness::spec_from_json(R"({"kind": "train", "model": "m.json", "seed": 7, "algorithms": ["EM", "VA"]})", "/cfg");
  EXPECT_EQ(spec.kind, harness::Kind::Train);
  EXPECT_EQ(spec.model, fs::path("/cfg/m.json"));
  EXPECT_EQ(spec.seeds, std::vector<std::uint64_t>{7});
  EXPECT_THROW(harness::spec_from_json(R"({"kind": "train", "bogus": 1})"), Error);
  EXPECT_THROW(harness::spec_from_json(R"({"kind": "dance"})"), Error);
  EXPECT_THROW(harness::spec_from_json("{"), Error);
  auto bad = spec_for(harness::Kind::Train, "k1");
  bad.algorithms = {"XX"};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Cli, ExitCodes) {
  const std::string models = fixture_path("models").string();
  const fs::path out = scratch_dir("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("simulate --model " + models + "/k1.json --out " + out.string() + " --n 5 --seed 1 -q"), 0);
  EXPECT_TRUE(fs::exists(out / "realization_seed1.csv"));
  EXPECT_EQ(run_cli("simulate --bogus-flag"), 2);
  EXPECT_EQ(run_cli("nonsense"), 2);
  EXPECT_EQ(run_cli("simulate --model " + models + "/missing.json --out " + out.string()), 4);
  EXPECT_EQ(run_cli("certify-barrier --model " + models + "/example_2_3_discrete.json --out " + out.string() + "_c"), 9);
  const fs::path broken = out.parent_path() / "broken.json";
  write_text(broken, R"({"transition": [[0.5, 0.6], [0.5, 0.5]], "emissions": [{"family": "gaussian", "params": {"mean": 0, "variance": 1}}, {"family": "gaussian", "params": {"mean": 0, "variance": 1}}]})");
  EXPECT_EQ(run_cli("simulate --model " + broken.string() + " --out " + out.string() + "_b"), 3);
}
