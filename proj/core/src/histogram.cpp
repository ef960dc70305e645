#include "avt/histogram.hpp"

#include <algorithm>
#include <cmath>

#include "avt/errors.hpp"

namespace avt {

Binning Binning::alphabet(std::size_t symbols) {
  Binning b;
  b.discrete_ = true;
  b.bins_ = symbols;
  return b;
}

Binning Binning::equal_width(double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw Error(ErrorCode::InvalidArgument, "binning needs lo < hi and at least one bin");
  Binning b;
  b.discrete_ = false;
  b.bins_ = bins;
  b.lo_ = lo;
  b.width_ = (hi - lo) / static_cast<double>(bins);
  return b;
}

Binning Binning::pooled(std::span<const double> values, std::size_t bins) {
  if (values.empty()) return equal_width(-1.0, 1.0, bins);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, sorted.size() - 1);
    return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
  };
  double lo = quantile(0.001);
  double hi = quantile(0.999);
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return equal_width(lo, hi, bins);
}

std::size_t Binning::bin_of(double x) const {
  if (bins_ == 0) return 0;
  const double pos = discrete_ ? x : std::floor((x - lo_) / width_);
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), bins_ - 1);
}

double Binning::low(std::size_t bin) const {
  return discrete_ ? static_cast<double>(bin) : lo_ + width_ * static_cast<double>(bin);
}

double Binning::high(std::size_t bin) const {
  return discrete_ ? static_cast<double>(bin) : lo_ + width_ * static_cast<double>(bin + 1);
}

std::vector<double> histogram(std::span<const double> values, const Binning& binning) {
  std::vector<double> mass(binning.bins(), 0.0);
  if (values.empty() || mass.empty()) return mass;
  for (double x : values) mass[binning.bin_of(x)] += 1.0;
  for (double& m : mass) m /= static_cast<double>(values.size());
  return mass;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < std::min(p.size(), q.size()); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double sup_distance(std::span<const double> p, std::span<const double> q) {
  double best = 0.0;
  for (std::size_t i = 0; i < std::min(p.size(), q.size()); ++i) best = std::max(best, std::abs(p[i] - q[i]));
  return best;
}

}  // namespace avt
