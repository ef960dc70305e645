#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace avt {

/// Portable seeded generator.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq from the 32-bit halves of
/// the key words, so a key such as {seed, stream} names an independent substream. All
/// variates are produced by explicit transforms (no std distributions) to keep draws
/// identical across standard library implementations.
///
/// Stream convention used by the library: stream 0 drives the hidden chain, stream 1 + l
/// drives emissions of state l. Cycle-structured simulations prepend the cycle index.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng({seed}) {}
  Rng(std::initializer_list<std::uint64_t> key) : Rng(std::span<const std::uint64_t>(key.begin(), key.size())) {}
  explicit Rng(std::span<const std::uint64_t> key);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  double exponential(double rate);
  /// Index drawn proportionally to non-negative weights (which need not sum to one).
  std::size_t categorical(std::span<const double> weights);
  /// Uniform integer in [0, bound).
  std::size_t below(std::size_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace avt
