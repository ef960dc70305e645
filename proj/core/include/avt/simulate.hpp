#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "avt/model.hpp"
#include "avt/rng.hpp"

namespace avt {

struct Realization {
  std::vector<int> states;
  std::vector<double> observations;
  std::uint64_t seed = 0;
};

/// Draws n steps of (Y, X). Pure in (model, n, seed).
Realization simulate(const HmmModel& model, std::size_t n, std::uint64_t seed);

/// Step-by-step sampler sharing the stream convention of simulate().
class ChainSampler {
 public:
  ChainSampler(const HmmModel& model, std::initializer_list<std::uint64_t> key);

  int initial_state();
  int next_state(int current);
  double emit(int state);

 private:
  const HmmModel* model_;
  Rng chain_;
  std::vector<Rng> emitters_;
};

}  // namespace avt
