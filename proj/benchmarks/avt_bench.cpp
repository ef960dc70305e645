#include <benchmark/benchmark.h>

#include <avt/avt.hpp>

namespace {

avt::HmmModel model(const char* name) {
  return avt::load_model(std::string(AVT_FIXTURE_DIR) + "/models/" + name + ".json");
}

void BM_Trellis(benchmark::State& state) {
  const auto m = model("mixture_overlap");
  const auto obs = avt::simulate(m, static_cast<std::size_t>(state.range(0)), 1).observations;
  for (auto _ : state) benchmark::DoNotOptimize(avt::canonical_alignment(avt::build_trellis(obs, m)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Trellis)->Arg(1000)->Arg(100000);

void BM_DetectNodes(benchmark::State& state) {
  const auto m = model("revealing_2state");
  const auto obs = avt::simulate(m, 2000, 2).observations;
  for (auto _ : state) benchmark::DoNotOptimize(avt::detect_nodes(obs, m, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_DetectNodes)->Arg(0)->Arg(4)->Arg(16);

void BM_VerifyBarrier(benchmark::State& state) {
  const auto m = model("example_2_5_discrete");
  const auto spec = avt::construct_barrier_set(m, {.prefer_simple = false}).spec;
  for (auto _ : state) benchmark::DoNotOptimize(avt::verify_barrier(spec, m));
}
BENCHMARK(BM_VerifyBarrier)->Unit(benchmark::kMillisecond);

void BM_Regenerative(benchmark::State& state) {
  const auto m = model("revealing_2state");
  const auto barrier = avt::construct_barrier_set(m).spec;
  for (auto _ : state)
    benchmark::DoNotOptimize(avt::estimate_Q_regenerative(m, barrier, {.cycles = static_cast<std::size_t>(state.range(0)), .seed = 3}));
}
BENCHMARK(BM_Regenerative)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
