/*
 Copyright 2026 The jcc-control authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "jcc/dual.hpp"
#include "jcc/model.hpp"
#include "jcc/sim.hpp"

#include <benchmark/benchmark.h>

namespace {

jcc::GriddedMdp unicycle_model(int cells) {
    auto spec = jcc::build_unicycle('b');
    spec.cells_per_dim = {cells, cells};
    return jcc::build_mdp_from_spec(spec);
}

void BM_KernelBuild(benchmark::State& state) {
    auto spec = jcc::build_unicycle('b');
    const int cells = static_cast<int>(state.range(0));
    spec.cells_per_dim = {cells, cells};
    for (auto _ : state) {
        benchmark::DoNotOptimize(jcc::build_mdp_from_spec(spec));
    }
    state.SetItemsProcessed(state.iterations() * cells * cells * 8);
}
BENCHMARK(BM_KernelBuild)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_LambdaRecursion(benchmark::State& state) {
    const jcc::GriddedMdp mdp = unicycle_model(static_cast<int>(state.range(0)));
    const jcc::AugmentedMdp aug(mdp);
    const jcc::Solution mc = jcc::min_cost_recursion(mdp);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jcc::lambda_recursion(aug, 1e4, &mc));
    }
    state.SetItemsProcessed(state.iterations() * mdp.num_states * mdp.horizon *
                            mdp.num_actions);
}
BENCHMARK(BM_LambdaRecursion)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_BooleRecursion(benchmark::State& state) {
    const jcc::GriddedMdp mdp = unicycle_model(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(jcc::boole_recursion(mdp, 1e4));
    }
}
BENCHMARK(BM_BooleRecursion)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_PolicyEvaluation(benchmark::State& state) {
    const jcc::GriddedMdp mdp = unicycle_model(static_cast<int>(state.range(0)));
    const jcc::AugmentedMdp aug(mdp);
    const jcc::Solution mc = jcc::min_cost_recursion(mdp);
    const jcc::Solution sol = jcc::lambda_recursion(aug, 1e4, &mc);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jcc::evaluate_policy_safety(aug, sol.policy));
        benchmark::DoNotOptimize(jcc::evaluate_policy_cost(aug, sol.policy));
    }
}
BENCHMARK(BM_PolicyEvaluation)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Rollouts(benchmark::State& state) {
    const jcc::GriddedMdp mdp = unicycle_model(30);
    const jcc::MarkovPolicy policy = jcc::min_cost_recursion(mdp).policy;
    const int n = static_cast<int>(state.range(0));
    const int x0 = mdp.grid_meta->locate(std::vector<double>{19.0, 19.0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(jcc::rollout(mdp, policy, x0, n, 1));
    }
    state.SetItemsProcessed(state.iterations() * n * mdp.horizon);
}
BENCHMARK(BM_Rollouts)->Arg(1000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
