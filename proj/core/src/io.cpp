#include "avt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "avt/errors.hpp"
#include "json.hpp"

namespace avt {

using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return {buffer, result.ptr};
}

namespace {

double bound_of(const json& j, double infinite) {
  if (j.is_null()) return infinite;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::InvalidArgument, "bad interval bound '" + s + "'");
  }
  return j.get<double>();
}

json bound_json(double x) { return std::isinf(x) ? json(nullptr) : json(x); }

HalfLine orientation_of(const std::string& text) {
  if (text == "positive") return HalfLine::Positive;
  if (text == "negative") return HalfLine::Negative;
  throw Error(ErrorCode::InvalidArgument, "exponential support must be 'positive' or 'negative'");
}

EmissionModel emission_from_json(const json& j, std::size_t index) {
  const std::string where = "emission " + std::to_string(index + 1) + ": ";
  const auto family = j.at("family").get<std::string>();
  const json params = j.value("params", json::object());
  if (family == "discrete") {
    if (!params.contains("probabilities")) throw ModelError({where + "discrete emission needs params.probabilities"});
    return EmissionModel::discrete(params.at("probabilities").get<std::vector<double>>());
  }
  if (family == "gaussian") return EmissionModel::gaussian(params.at("mean").get<double>(), params.value("variance", 1.0));
  if (family == "exponential") {
    std::string side = "positive";
    if (j.contains("support") && j.at("support").is_string()) side = j.at("support").get<std::string>();
    if (params.contains("orientation")) side = params.at("orientation").get<std::string>();
    return EmissionModel::exponential(params.at("rate").get<double>(), orientation_of(side));
  }
  throw ModelError({where + "unknown family '" + family + "'"});
}

json emission_to_json(const EmissionModel& e) {
  json j;
  j["family"] = to_string(e.family());
  if (const auto* d = std::get_if<DiscreteTable>(&e.parameters())) {
    j["params"] = {{"probabilities", d->probabilities}};
    j["support"] = d->probabilities.size();
  } else if (const auto* g = std::get_if<Gaussian>(&e.parameters())) {
    j["params"] = {{"mean", g->mean}, {"variance", g->variance}};
    j["support"] = "real";
  } else {
    const auto& x = std::get<Exponential>(e.parameters());
    j["params"] = {{"rate", x.rate}};
    j["support"] = x.orientation == HalfLine::Positive ? "positive" : "negative";
  }
  return j;
}

}  // namespace

ModelDescription model_description_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError({std::string("model file is not valid JSON: ") + e.what()});
  }
  try {
    ModelDescription d;
    d.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    const auto& emissions = j.at("emissions");
    for (std::size_t l = 0; l < emissions.size(); ++l) d.emissions.push_back(emission_from_json(emissions[l], l));
    if (j.contains("states") && j.at("states").get<std::size_t>() != d.transition.size())
      throw ModelError({"states is " + std::to_string(j.at("states").get<std::size_t>()) + " but the transition matrix has " +
                        std::to_string(d.transition.size()) + " rows"});
    const json initial = j.value("initial", json("stationary"));
    if (initial.is_string()) {
      if (initial.get<std::string>() != "stationary") throw ModelError({"initial must be a vector or \"stationary\""});
      ModelDescription probe = d;
      probe.initial.assign(d.transition.size(), d.transition.empty() ? 0.0 : 1.0 / static_cast<double>(d.transition.size()));
      auto checked = validate_model(probe);
      if (auto* issues = std::get_if<std::vector<std::string>>(&checked)) throw ModelError(*issues);
      d.initial = stationary_distribution(std::get<HmmModel>(checked));
    } else {
      d.initial = initial.get<std::vector<double>>();
    }
    return d;
  } catch (const json::exception& e) {
    throw ModelError({std::string("model file: ") + e.what()});
  } catch (const ModelError&) {
    throw;
  } catch (const Error& e) {
    throw ModelError({e.what()});
  }
}

HmmModel model_from_json(const std::string& text) { return HmmModel(model_description_from_json(text)); }

std::string model_to_json(const HmmModel& model) {
  json j;
  j["states"] = model.states();
  j["transition"] = model.transition_matrix();
  j["initial"] = model.initial_distribution();
  j["emissions"] = json::array();
  for (const auto& e : model.emissions()) j["emissions"].push_back(emission_to_json(e));
  return j.dump(2) + "\n";
}

HmmModel load_model(const std::filesystem::path& path) { return model_from_json(read_text(path)); }

BarrierSpec barrier_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    BarrierSpec spec;
    for (const auto& set : j.at("sets")) {
      if (!set.empty() && set.front().is_array()) {
        std::vector<Interval> ivs;
        for (const auto& iv : set)
          ivs.push_back({bound_of(iv.at(0), -std::numeric_limits<double>::infinity()),
                         bound_of(iv.at(1), std::numeric_limits<double>::infinity())});
        spec.sets.push_back(ComponentSet::of_intervals(std::move(ivs)));
      } else {
        spec.sets.push_back(ComponentSet::of_symbols(set.get<std::vector<int>>()));
      }
    }
    for (int q : j.at("q").get<std::vector<int>>()) spec.word.push_back(q - 1);
    spec.node_state = j.at("l").get<int>() - 1;
    spec.order = j.at("r").get<std::size_t>();
    spec.separated = j.value("separated", false);
    if (j.contains("M") && j.at("M").get<std::size_t>() != spec.sets.size())
      throw Error(ErrorCode::InvalidArgument, "barrier M differs from the number of sets");
    if (j.contains("certificate")) {
      const auto& c = j.at("certificate");
      const std::string status = c.value("status", "unverified");
      if (status == "certified") spec.certificate.status = CertificateStatus::Certified;
      else if (status == "inconclusive") spec.certificate.status = CertificateStatus::Inconclusive;
      else if (status == "counterexample") spec.certificate.status = CertificateStatus::Counterexample;
      spec.certificate.method = c.value("method", "");
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("barrier file: ") + e.what());
  }
}

std::string barrier_to_json(const BarrierSpec& spec) {
  json j;
  j["M"] = spec.length();
  j["sets"] = json::array();
  for (const auto& set : spec.sets) {
    if (set.is_discrete()) {
      j["sets"].push_back(set.symbols);
    } else {
      json ivs = json::array();
      for (const auto& iv : set.intervals) ivs.push_back({bound_json(iv.lo), bound_json(iv.hi)});
      j["sets"].push_back(ivs);
    }
  }
  std::vector<int> word;
  for (int q : spec.word) word.push_back(q + 1);
  j["q"] = word;
  j["l"] = spec.node_state + 1;
  j["r"] = spec.order;
  j["separated"] = spec.separated;
  const auto& c = spec.certificate;
  j["certificate"] = {{"status", to_string(c.status)},
                      {"method", c.method},
                      {"start_state_bound", c.start_state_bound},
                      {"closure_complete", c.closure_complete},
                      {"prefix_depth", c.prefix_depth},
                      {"columns_explored", c.columns_explored},
                      {"trials", c.trials},
                      {"counterexample_prefix", c.counterexample_prefix},
                      {"counterexample_block", c.counterexample_block}};
  return j.dump(2) + "\n";
}

std::vector<double> load_observations(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<double> out;
  std::ptrdiff_t column = -1;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      const auto it = std::find(cells.begin(), cells.end(), "observation");
      if (it != cells.end()) {
        column = it - cells.begin();
        continue;
      }
      column = cells.size() == 1 ? 0 : -1;
      if (column < 0) throw Error(ErrorCode::Io, path.string() + ": expected an 'observation' column");
    }
    if (static_cast<std::size_t>(column) >= cells.size())
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": missing observation");
    double x = 0.0;
    const std::string& text = cells[static_cast<std::size_t>(column)];
    const auto result = std::from_chars(text.data(), text.data() + text.size(), x);
    if (result.ec != std::errc() || result.ptr != text.data() + text.size())
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": not a number '" + text + "'");
    out.push_back(x);
  }
  return out;
}

namespace {

std::string join_states(StateSet s) {
  std::string out;
  for (int l : s.members()) out += (out.empty() ? "" : ";") + std::to_string(l + 1);
  return out;
}

}  // namespace

std::string realization_csv(const Realization& realization) {
  std::string out = "step,state,observation\n";
  for (std::size_t t = 0; t < realization.states.size(); ++t)
    out += std::to_string(t + 1) + "," + std::to_string(realization.states[t] + 1) + "," +
           format_number(realization.observations[t]) + "\n";
  return out;
}

std::string trellis_csv(const ScoreTrellis& trellis) {
  std::string out = "u,state,log_delta,tie_set\n";
  for (std::size_t u = 0; u < trellis.length(); ++u)
    for (std::size_t l = 0; l < trellis.states(); ++l) {
      const std::string ties = u + 1 < trellis.length() ? join_states(trellis.tie_set(u, static_cast<int>(l))) : "";
      out += std::to_string(u + 1) + "," + std::to_string(l + 1) + "," +
             format_number(trellis.log_delta(u, static_cast<int>(l))) + "," + ties + "\n";
    }
  return out;
}

std::string nodes_csv(const std::vector<NodeRecord>& nodes) {
  std::string out = "u,l,r\n";
  for (const auto& n : nodes) out += std::to_string(n.u + 1) + "," + std::to_string(n.l + 1) + "," + std::to_string(n.r) + "\n";
  return out;
}

std::string measures_csv(const std::vector<std::vector<double>>& mass, const Binning& binning) {
  std::string out = "state,bin_low,bin_high,mass\n";
  for (std::size_t l = 0; l < mass.size(); ++l)
    for (std::size_t b = 0; b < mass[l].size(); ++b)
      out += std::to_string(l + 1) + "," + format_number(binning.low(b)) + "," + format_number(binning.high(b)) + "," +
             format_number(mass[l][b]) + "\n";
  return out;
}

std::string ledger_csv(const RenewalLedger& ledger) {
  std::string out = "kind,index,time\n";
  auto rows = [&](const char* kind, const std::vector<std::size_t>& times) {
    for (std::size_t i = 0; i < times.size(); ++i)
      out += std::string(kind) + "," + std::to_string(i) + "," + std::to_string(times[i] + 1) + "\n";
  };
  rows("nu", ledger.nu);
  rows("theta", ledger.theta);
  rows("tau", ledger.tau);
  return out;
}

std::string trace_csv(const TrainingTrace& trace) {
  std::string out = "iteration,state,param_name,value,delta_applied,subsample_size,log_likelihood\n";
  for (const auto& rec : trace.iterations) {
    const double ll = trace.algorithm == Algorithm::EM ? rec.data_log_likelihood : rec.alignment_log_likelihood;
    for (std::size_t l = 0; l < rec.parameters.size(); ++l)
      for (std::size_t i = 0; i < rec.parameters[l].size(); ++i) {
        const double delta = rec.delta.empty() ? 0.0 : rec.delta[l][i];
        const std::string size = rec.subsample_sizes.empty() ? "" : std::to_string(rec.subsample_sizes[l]);
        out += std::to_string(rec.iteration) + "," + std::to_string(l + 1) + "," + trace.parameter_names[l][i] + "," +
               format_number(rec.parameters[l][i]) + "," + format_number(delta) + "," + size + "," +
               (ll == kNegInf ? "" : format_number(ll)) + "\n";
      }
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace avt
