#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace avt {

/// Fixed binning for measure comparison: the alphabet itself, or equal-width bins whose
/// first and last bins absorb the tails.
class Binning {
 public:
  static Binning alphabet(std::size_t symbols);
  static Binning equal_width(double lo, double hi, std::size_t bins = 64);
  /// Equal-width bins over the pooled 0.1 - 99.9 percentile range.
  static Binning pooled(std::span<const double> values, std::size_t bins = 64);

  bool discrete() const { return discrete_; }
  std::size_t bins() const { return bins_; }
  std::size_t bin_of(double x) const;
  double low(std::size_t bin) const;
  double high(std::size_t bin) const;

 private:
  bool discrete_ = true;
  std::size_t bins_ = 0;
  double lo_ = 0.0;
  double width_ = 1.0;
};

/// Normalized bin masses of a sample (all zeros for an empty sample).
std::vector<double> histogram(std::span<const double> values, const Binning& binning);

double total_variation(std::span<const double> p, std::span<const double> q);
double sup_distance(std::span<const double> p, std::span<const double> q);

}  // namespace avt
