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

#pragma once

#include "jcc/augment.hpp"
#include "jcc/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace jcc {

enum class ValueKind { cost, safety, lambda_penalized, boole };

/// Time-indexed value function. Tables over the augmented model carry two
/// blocks (flag = 1 and flag = 0); base-model tables carry one.
struct ValueTable {
    ValueKind kind = ValueKind::cost;
    int horizon = 0;
    int num_states = 0;
    int blocks = 1;

    std::vector<double> values; // [(N+1) * blocks * S]

    static ValueTable zeros(ValueKind kind, int horizon, int num_states, int blocks);

    double& at(int k, int state, int flag = 1) {
        return values[(static_cast<std::size_t>(k) * blocks + block_of(flag)) * num_states +
                      state];
    }
    double at(int k, int state, int flag = 1) const {
        return values[(static_cast<std::size_t>(k) * blocks + block_of(flag)) * num_states +
                      state];
    }
    /// Pointer to the contiguous [num_states] slice for (k, flag).
    double* slice(int k, int flag = 1) {
        return values.data() +
               (static_cast<std::size_t>(k) * blocks + block_of(flag)) * num_states;
    }
    const double* slice(int k, int flag = 1) const {
        return values.data() +
               (static_cast<std::size_t>(k) * blocks + block_of(flag)) * num_states;
    }

  private:
    // Two-block tables store flag=1 first so `at(k, s)` defaults to the live block.
    int block_of(int flag) const { return blocks == 2 ? 1 - flag : 0; }
};

enum class PolicyKind { min_cost, max_safety, lambda_penalized, boole };

/// Deterministic Markov policy on the augmented model: one action index per
/// (time step, state, flag). Base-model policies carry identical blocks.
struct MarkovPolicy {
    int horizon = 0;
    int num_states = 0;
    PolicyKind kind = PolicyKind::min_cost;
    double lambda = 0.0; // multiplier that produced this policy, if any

    std::vector<int> actions_flag1; // [N * S]
    std::vector<int> actions_flag0; // [N * S]

    static MarkovPolicy zeros(PolicyKind kind, int horizon, int num_states);

    int action(int k, int state, int flag = 1) const {
        const auto& tab = flag ? actions_flag1 : actions_flag0;
        return tab[static_cast<std::size_t>(k) * num_states + state];
    }
    int& action_ref(int k, int state, int flag) {
        auto& tab = flag ? actions_flag1 : actions_flag0;
        return tab[static_cast<std::size_t>(k) * num_states + state];
    }
    void check_against(const GriddedMdp& mdp) const;
};

struct Solution {
    ValueTable values;
    MarkovPolicy policy;
};

/// Minimum expected total cost, backward over k = N-1..0 with
/// C_N = terminal cost. Ties broken toward the lowest action index;
/// next-state sums run in ascending index order (reproducible values).
Solution min_cost_recursion(const GriddedMdp& mdp);

/// Maximum probability of staying in the safe set through time N.
/// V_N = 1_A; unsafe states have value 0 and action 0 at every step.
Solution max_safety_recursion(const GriddedMdp& mdp);

/// Penalized recursion on the augmented model: the terminal cost is
/// l_N(x) - lambda when the trajectory is still safe. The flag=0 block is
/// lambda-independent and equals the plain min-cost solution; pass it in
/// to reuse across a multiplier search (computed on demand otherwise).
Solution lambda_recursion(const AugmentedMdp& aug, double lambda,
                          const Solution* min_cost = nullptr);

/// Baseline recursion on the un-augmented model with per-step penalties:
/// stage cost + lambda for every k with x_k unsafe, terminal likewise.
Solution boole_recursion(const GriddedMdp& mdp, double lambda);

/// Expected cost-to-go of a fixed policy on the augmented model (both
/// blocks; the flag=0 block uses the policy's own flag=0 actions).
ValueTable evaluate_policy_cost(const AugmentedMdp& aug, const MarkovPolicy& policy);

/// Probability of staying safe under a fixed policy, per (k, state, flag).
/// The flag=0 block is identically zero.
ValueTable evaluate_policy_safety(const AugmentedMdp& aug, const MarkovPolicy& policy);

/// State distribution at k = 0..N under a fixed policy started at x0.
/// Tracked on the augmented chain (so flag-dependent policies push forward
/// correctly) and returned marginalized to base states; each row sums to 1.
std::vector<std::vector<double>> forward_distribution(const GriddedMdp& mdp,
                                                      const MarkovPolicy& policy, int x0);

/// Lower bound on the safety of a policy from the union bound:
/// 1 - sum_k P(x_k outside A). Can be negative.
double boole_safety_bound(const GriddedMdp& mdp, const MarkovPolicy& policy, int x0);

/// CSV export of a value table: header k,state,flag,value.
std::string value_table_csv(const ValueTable& table);

} // namespace jcc
