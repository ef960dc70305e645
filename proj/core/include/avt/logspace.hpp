#pragma once

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace avt {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kDefaultTieTolerance = 1e-9;

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

/// True when `value` is within the relative tie band below `best` (or above it).
/// An all-impossible comparison (best = -inf) admits every candidate.
inline bool reaches(double value, double best, double tolerance) {
  if (best == kNegInf) return true;
  if (value == kNegInf) return false;
  return value >= best - tolerance * std::max(1.0, std::abs(best));
}

/// Subset of states {0..63}.
class StateSet {
 public:
  static constexpr std::size_t kMaxStates = 64;

  StateSet() = default;
  static StateSet all(std::size_t k) {
    StateSet s;
    s.bits_ = k >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << k) - 1);
    return s;
  }
  static StateSet single(int state) {
    StateSet s;
    s.insert(state);
    return s;
  }

  void insert(int state) { bits_ |= std::uint64_t{1} << state; }
  bool contains(int state) const { return (bits_ >> state) & 1U; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  int largest() const {
    assert(!empty());
    return 63 - std::countl_zero(bits_);
  }
  int smallest() const {
    assert(!empty());
    return std::countr_zero(bits_);
  }
  std::vector<int> members() const {
    std::vector<int> out;
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
  }
  StateSet operator|(StateSet other) const {
    StateSet s;
    s.bits_ = bits_ | other.bits_;
    return s;
  }
  StateSet& operator|=(StateSet other) {
    bits_ |= other.bits_;
    return *this;
  }
  bool operator==(const StateSet&) const = default;
  std::uint64_t bits() const { return bits_; }

 private:
  std::uint64_t bits_ = 0;
};

/// Square matrix of log-probabilities, row-major.
class LogMatrix {
 public:
  LogMatrix() = default;
  explicit LogMatrix(std::size_t k, double fill = kNegInf) : k_(k), data_(k * k, fill) {}

  std::size_t size() const { return k_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * k_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * k_ + j]; }
  const std::vector<double>& data() const { return data_; }

  double max_entry() const {
    double best = kNegInf;
    for (double v : data_) best = std::max(best, v);
    return best;
  }

  /// Adds c to every finite entry.
  void shift(double c) {
    for (double& v : data_)
      if (v != kNegInf) v += c;
  }

  /// Subtracts the column maximum from each column with a finite entry.
  void normalize_columns() {
    for (std::size_t j = 0; j < k_; ++j) {
      double best = kNegInf;
      for (std::size_t i = 0; i < k_; ++i) best = std::max(best, (*this)(i, j));
      if (best == kNegInf) continue;
      for (std::size_t i = 0; i < k_; ++i)
        if ((*this)(i, j) != kNegInf) (*this)(i, j) -= best;
    }
  }

 private:
  std::size_t k_ = 0;
  std::vector<double> data_;
};

/// (A ⊗ B)_ij = max_q A_iq + B_qj.
inline LogMatrix max_plus(const LogMatrix& a, const LogMatrix& b) {
  const std::size_t k = a.size();
  LogMatrix out(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t q = 0; q < k; ++q) {
      const double aiq = a(i, q);
      if (aiq == kNegInf) continue;
      for (std::size_t j = 0; j < k; ++j) {
        const double v = aiq + b(q, j);
        if (v > out(i, j)) out(i, j) = v;
      }
    }
  return out;
}

/// A ⊗ diag(w) ⊗ B, the one-step extension through an intermediate emission.
inline LogMatrix max_plus_through(const LogMatrix& a, const std::vector<double>& weights,
                                  const LogMatrix& b) {
  const std::size_t k = a.size();
  LogMatrix scaled = a;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t q = 0; q < k; ++q)
      scaled(i, q) = (a(i, q) == kNegInf || weights[q] == kNegInf) ? kNegInf : a(i, q) + weights[q];
  return max_plus(scaled, b);
}

/// Subtracts the maximum finite entry; returns the amount removed (0 if all -inf).
inline double normalize_column(std::vector<double>& column) {
  double best = kNegInf;
  for (double v : column) best = std::max(best, v);
  if (best == kNegInf) return 0.0;
  for (double& v : column)
    if (v != kNegInf) v -= best;
  return best;
}

}  // namespace avt
