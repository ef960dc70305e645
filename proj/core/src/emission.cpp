#include "avt/emission.hpp"

#include <cmath>
#include <numbers>

#include "avt/errors.hpp"
#include "avt/logspace.hpp"

namespace avt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Symbol index of x, or -1 when x is not a valid symbol of an alphabet of size v.
long symbol_index(double x, std::size_t v) {
  if (!std::isfinite(x) || x < 0.0 || x != std::floor(x) || x >= static_cast<double>(v)) return -1;
  return static_cast<long>(x);
}

bool on_half_line(double x, HalfLine orientation) {
  return orientation == HalfLine::Positive ? x >= 0.0 : x <= 0.0;
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::Discrete: return "discrete";
    case Family::Gaussian: return "gaussian";
    case Family::Exponential: return "exponential";
  }
  return "unknown";
}

EmissionModel EmissionModel::discrete(std::vector<double> probabilities) {
  return EmissionModel(DiscreteTable{std::move(probabilities)});
}

EmissionModel EmissionModel::gaussian(double mean, double variance) {
  return EmissionModel(Gaussian{mean, variance});
}

EmissionModel EmissionModel::exponential(double rate, HalfLine orientation) {
  return EmissionModel(Exponential{rate, orientation});
}

Family EmissionModel::family() const {
  return std::visit(Overloaded{[](const DiscreteTable&) { return Family::Discrete; },
                               [](const Gaussian&) { return Family::Gaussian; },
                               [](const Exponential&) { return Family::Exponential; }},
                    parameters_);
}

double EmissionModel::density(double x) const {
  const double lf = log_density(x);
  return lf == kNegInf ? 0.0 : std::exp(lf);
}

double EmissionModel::log_density(double x) const {
  return std::visit(
      Overloaded{[x](const DiscreteTable& d) {
                   const long s = symbol_index(x, d.probabilities.size());
                   return s < 0 ? kNegInf : safe_log(d.probabilities[static_cast<std::size_t>(s)]);
                 },
                 [x](const Gaussian& g) {
                   if (!std::isfinite(x)) return kNegInf;
                   const double z = x - g.mean;
                   return -0.5 * std::log(2.0 * std::numbers::pi * g.variance) - z * z / (2.0 * g.variance);
                 },
                 [x](const Exponential& e) {
                   if (!std::isfinite(x) || !on_half_line(x, e.orientation)) return kNegInf;
                   return std::log(e.rate) - e.rate * std::abs(x);
                 }},
      parameters_);
}

double EmissionModel::sample(Rng& rng) const {
  return std::visit(
      Overloaded{[&rng](const DiscreteTable& d) { return static_cast<double>(rng.categorical(d.probabilities)); },
                 [&rng](const Gaussian& g) { return g.mean + std::sqrt(g.variance) * rng.normal(); },
                 [&rng](const Exponential& e) {
                   const double magnitude = rng.exponential(e.rate);
                   return e.orientation == HalfLine::Positive ? magnitude : -magnitude;
                 }},
      parameters_);
}

std::size_t EmissionModel::alphabet_size() const {
  if (const auto* d = std::get_if<DiscreteTable>(&parameters_)) return d->probabilities.size();
  return 0;
}

std::vector<int> EmissionModel::support_symbols() const {
  std::vector<int> out;
  if (const auto* d = std::get_if<DiscreteTable>(&parameters_))
    for (std::size_t s = 0; s < d->probabilities.size(); ++s)
      if (d->probabilities[s] > 0.0) out.push_back(static_cast<int>(s));
  return out;
}

Interval EmissionModel::support_hull() const {
  if (const auto* e = std::get_if<Exponential>(&parameters_)) {
    return e->orientation == HalfLine::Positive ? Interval{0.0, Interval{}.hi} : Interval{Interval{}.lo, 0.0};
  }
  if (const auto* d = std::get_if<DiscreteTable>(&parameters_))
    return Interval{0.0, static_cast<double>(d->probabilities.size()) - 1.0};
  return Interval{};
}

std::vector<double> EmissionModel::trainable() const {
  return std::visit(Overloaded{[](const DiscreteTable& d) { return d.probabilities; },
                               [](const Gaussian& g) { return std::vector<double>{g.mean}; },
                               [](const Exponential& e) { return std::vector<double>{e.rate}; }},
                    parameters_);
}

std::vector<std::string> EmissionModel::trainable_names() const {
  return std::visit(Overloaded{[](const DiscreteTable& d) {
                                 std::vector<std::string> names;
                                 for (std::size_t s = 0; s < d.probabilities.size(); ++s)
                                   names.push_back("p" + std::to_string(s));
                                 return names;
                               },
                               [](const Gaussian&) { return std::vector<std::string>{"mean"}; },
                               [](const Exponential&) { return std::vector<std::string>{"rate"}; }},
                    parameters_);
}

EmissionModel EmissionModel::with_trainable(const std::vector<double>& values) const {
  return std::visit(
      Overloaded{[&](const DiscreteTable&) { return EmissionModel(DiscreteTable{values}); },
                 [&](const Gaussian& g) { return EmissionModel(Gaussian{values.at(0), g.variance}); },
                 [&](const Exponential& e) { return EmissionModel(Exponential{values.at(0), e.orientation}); }},
      parameters_);
}

std::vector<std::string> EmissionModel::problems() const {
  std::vector<std::string> out;
  std::visit(Overloaded{[&](const DiscreteTable& d) {
                          if (d.probabilities.empty()) out.push_back("empty probability table");
                          double sum = 0.0;
                          for (std::size_t s = 0; s < d.probabilities.size(); ++s) {
                            const double p = d.probabilities[s];
                            if (!std::isfinite(p) || p < 0.0)
                              out.push_back("symbol " + std::to_string(s) + " has invalid probability");
                            sum += p;
                          }
                          if (!d.probabilities.empty() && std::abs(sum - 1.0) > 1e-12)
                            out.push_back("probabilities do not sum to 1");
                        },
                        [&](const Gaussian& g) {
                          if (!std::isfinite(g.mean)) out.push_back("mean is not finite");
                          if (!(g.variance > 0.0) || !std::isfinite(g.variance))
                            out.push_back("variance must be positive");
                        },
                        [&](const Exponential& e) {
                          if (!(e.rate > 0.0) || !std::isfinite(e.rate)) out.push_back("rate must be positive");
                        }},
             parameters_);
  return out;
}

bool EmissionModel::operator==(const EmissionModel& other) const {
  if (family() != other.family()) return false;
  return std::visit(
      Overloaded{[&](const DiscreteTable& d) {
                   return d.probabilities == std::get<DiscreteTable>(other.parameters_).probabilities;
                 },
                 [&](const Gaussian& g) {
                   const auto& o = std::get<Gaussian>(other.parameters_);
                   return g.mean == o.mean && g.variance == o.variance;
                 },
                 [&](const Exponential& e) {
                   const auto& o = std::get<Exponential>(other.parameters_);
                   return e.rate == o.rate && e.orientation == o.orientation;
                 }},
      parameters_);
}

}  // namespace avt
