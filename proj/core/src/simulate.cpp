#include "avt/simulate.hpp"

namespace avt {

ChainSampler::ChainSampler(const HmmModel& model, std::initializer_list<std::uint64_t> key)
    : model_(&model), chain_([&] {
        std::vector<std::uint64_t> k(key);
        k.push_back(0);
        return Rng(std::span<const std::uint64_t>(k));
      }()) {
  for (std::size_t l = 0; l < model.states(); ++l) {
    std::vector<std::uint64_t> k(key);
    k.push_back(1 + l);
    emitters_.emplace_back(std::span<const std::uint64_t>(k));
  }
}

int ChainSampler::initial_state() {
  return static_cast<int>(chain_.categorical(model_->initial_distribution()));
}

int ChainSampler::next_state(int current) {
  return static_cast<int>(chain_.categorical(model_->transition_row(static_cast<std::size_t>(current))));
}

double ChainSampler::emit(int state) {
  return model_->emission(static_cast<std::size_t>(state)).sample(emitters_[static_cast<std::size_t>(state)]);
}

Realization simulate(const HmmModel& model, std::size_t n, std::uint64_t seed) {
  ChainSampler sampler(model, {seed});
  Realization out;
  out.seed = seed;
  out.states.reserve(n);
  out.observations.reserve(n);
  int state = -1;
  for (std::size_t t = 0; t < n; ++t) {
    state = t == 0 ? sampler.initial_state() : sampler.next_state(state);
    out.states.push_back(state);
    out.observations.push_back(sampler.emit(state));
  }
  return out;
}

}  // namespace avt
