#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "avt/rng.hpp"

namespace avt {

struct DiscreteTable {
  std::vector<double> probabilities;  // over symbols 0..V-1
};

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;  // known; not trained
};

enum class HalfLine { Positive, Negative };

/// rate * exp(-rate * |x|) on the closed half-line selected by the orientation.
struct Exponential {
  double rate = 1.0;
  HalfLine orientation = HalfLine::Positive;
};

enum class Family { Discrete, Gaussian, Exponential };

std::string to_string(Family family);

/// Open interval (lo, hi) of the real line; either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lo && x < hi; }
  bool operator==(const Interval&) const = default;
};

/// One state's emission distribution.
///
/// Discrete symbols are carried as integral doubles; a non-integral or out-of-range value
/// has density zero under a discrete table.
class EmissionModel {
 public:
  using Parameters = std::variant<DiscreteTable, Gaussian, Exponential>;

  explicit EmissionModel(Parameters parameters) : parameters_(std::move(parameters)) {}

  static EmissionModel discrete(std::vector<double> probabilities);
  static EmissionModel gaussian(double mean, double variance);
  static EmissionModel exponential(double rate, HalfLine orientation = HalfLine::Positive);

  const Parameters& parameters() const { return parameters_; }
  Family family() const;

  double density(double x) const;
  /// Natural log of the density; exactly -inf where the density is zero.
  double log_density(double x) const;
  double sample(Rng& rng) const;

  /// Alphabet size for discrete tables; 0 otherwise.
  std::size_t alphabet_size() const;
  /// Symbols with positive probability (discrete only).
  std::vector<int> support_symbols() const;
  /// Closed support as an interval hull (continuous only; boundary points carry density).
  Interval support_hull() const;

  /// Trainable parameter vector: probabilities, the mean, or the rate.
  std::vector<double> trainable() const;
  std::vector<std::string> trainable_names() const;
  /// Same family with the trainable vector replaced (variance and orientation kept).
  EmissionModel with_trainable(const std::vector<double>& values) const;

  /// Empty when valid; otherwise human-readable problems.
  std::vector<std::string> problems() const;

  bool operator==(const EmissionModel& other) const;

 private:
  Parameters parameters_;
};

}  // namespace avt
