#include <benchmark/benchmark.h>

#include <filesystem>
#include <vector>

#include "mbrl/dirichlet.hpp"
#include "mbrl/domain.hpp"
#include "mbrl/learner.hpp"
#include "mbrl/planner.hpp"

namespace {

using namespace mbrl;

const DomainSpec& robot() {
  static const DomainSpec d = load_domain(std::filesystem::path(MBRL_DATA_DIR) / "robot.json");
  return d;
}

ModelKind kind_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ModelKind::Multinomial : ModelKind::Rules;
}

void BM_SelectAction(benchmark::State& state) {
  const auto& d = robot();
  const auto model = TransitionModel::from_domain(d, kind_of(state));
  PlanConfig cfg;
  cfg.obs_top_k = static_cast<std::size_t>(state.range(1));
  const Planner planner(RewardModel(d), cfg);
  const auto b = BeliefState::uniform_intentions(d, 0);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(planner.select_action(b, model, rng));
}
BENCHMARK(BM_SelectAction)->Args({0, 3})->Args({0, 32})->Args({1, 3})->Args({1, 32})->Unit(benchmark::kMillisecond);

void BM_BeliefUpdate(benchmark::State& state) {
  const auto& d = robot();
  const auto model = TransitionModel::from_domain(d, kind_of(state));
  const auto b = BeliefState::uniform(d);
  const auto a = d.action_labels.at("Confirm(PickUp(Box))");
  const NBestList o({{d.user_acts.at("Affirm"), 0.7}, {d.user_acts.at("Disconfirm"), 0.2}});
  for (auto _ : state) benchmark::DoNotOptimize(belief_update(model, b, a, o));
}
BENCHMARK(BM_BeliefUpdate)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ParameterUpdate(benchmark::State& state) {
  const auto& d = robot();
  LearnerState ls{TransitionModel::from_domain(d, kind_of(state)), BeliefState::uniform(d), {}, 0};
  ls.config.theta_samples = static_cast<std::size_t>(state.range(1));
  const auto a = d.action_labels.at("Confirm(PickUp(Box))");
  const NBestList o({{d.user_acts.at("Affirm"), 0.7}, {d.user_acts.at("Disconfirm"), 0.2}});
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(parameter_update(ls, a, o, rng));
}
BENCHMARK(BM_ParameterUpdate)->Args({0, 50})->Args({1, 50})->Args({1, 1000})->Unit(benchmark::kMillisecond);

void BM_FitDirichlet(benchmark::State& state) {
  const DirichletParams truth({5.4, 0.52, 1.6});
  Rng rng(3);
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(state.range(0)));
  for (auto& x : samples) x = truth.sample_vector(rng);
  for (auto _ : state) benchmark::DoNotOptimize(fit_dirichlet(samples));
}
BENCHMARK(BM_FitDirichlet)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
