#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avt/alignment_process.hpp"
#include "avt/barrier.hpp"
#include "avt/model.hpp"
#include "avt/nodes.hpp"
#include "avt/simulate.hpp"
#include "avt/training.hpp"
#include "avt/trellis.hpp"

namespace avt {

/// Shortest round-trip decimal form; deterministic across runs.
std::string format_number(double value);

ModelDescription model_description_from_json(const std::string& text);
HmmModel model_from_json(const std::string& text);
std::string model_to_json(const HmmModel& model);
HmmModel load_model(const std::filesystem::path& path);

BarrierSpec barrier_from_json(const std::string& text);
std::string barrier_to_json(const BarrierSpec& spec);

/// Reads observations from a CSV with an `observation` column, or one value per line.
std::vector<double> load_observations(const std::filesystem::path& path);

// CSV exports. States and positions are written 1-based.
std::string realization_csv(const Realization& realization);
std::string trellis_csv(const ScoreTrellis& trellis);
std::string nodes_csv(const std::vector<NodeRecord>& nodes);
std::string measures_csv(const std::vector<std::vector<double>>& mass, const Binning& binning);
std::string ledger_csv(const RenewalLedger& ledger);
std::string trace_csv(const TrainingTrace& trace);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace avt
