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

#include "jcc/dual.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace jcc {

/// Monte-Carlo rollouts of a (possibly mixed) policy on the gridded model.
struct RolloutBatch {
    int num_rollouts = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<int>> trajectories; // state indices, length N+1
    std::vector<std::uint8_t> used_over;        // which mixture member ran
    std::vector<double> costs;                  // realized cumulative cost
    std::vector<std::uint8_t> safe;             // whole trajectory inside A
};

/// Rollouts are independent given per-rollout derived streams, so results
/// are deterministic for a fixed seed under any parallel schedule. For a
/// mixed policy the member is sampled once per rollout (before any
/// transition draw), then followed for the whole horizon.
RolloutBatch rollout(const GriddedMdp& mdp, const MixedPolicy& policy, int x0,
                     int num_rollouts, std::uint64_t seed);

/// Deterministic-policy convenience wrapper (p_over = 1).
RolloutBatch rollout(const GriddedMdp& mdp, const MarkovPolicy& policy, int x0,
                     int num_rollouts, std::uint64_t seed);

struct EmpiricalStats {
    double mean_cost = 0.0;
    double safety_fraction = 0.0;
    double std_error = 0.0; // binomial standard error of the safety fraction
    double over_fraction = 0.0;
};

EmpiricalStats empirical_stats(const RolloutBatch& batch);

/// CSV rows: rollout_id,sampled_policy,safe,cost,trajectory (semicolon-joined).
std::string rollout_csv(const RolloutBatch& batch);

/// Continuous replay: simulate the continuous system, apply the gridded
/// policy through nearest-cell lookup, flag safety with the continuous state
/// against the spec's safe set.
struct ContinuousRollout {
    std::vector<std::vector<double>> trajectory; // real coordinates, length N+1
    bool used_over = false;
    bool safe = true;
};

std::vector<ContinuousRollout> rollout_continuous(const ContinuousSystemSpec& spec,
                                                  const GriddedMdp& mdp,
                                                  const MixedPolicy& policy,
                                                  int num_rollouts, std::uint64_t seed);

std::string continuous_rollout_csv(const std::vector<ContinuousRollout>& rollouts);

/// One policy's exact (cost, safety) at the initial augmented state.
struct PerformancePoint {
    std::uint64_t policy_id;
    double cost;
    double safety;
};

/// Exhaustively enumerates deterministic Markov policies on the augmented
/// model and evaluates each exactly. Guarded: throws when
/// num_actions^(2*num_states*horizon) exceeds 1e6.
std::vector<PerformancePoint> brute_force_performance_set(const AugmentedMdp& aug, int x0);

/// Enumeration restricted to the flag=1 block over safe states, with the
/// flag=0 block pinned to the min-cost policy. Every policy is weakly
/// dominated (equal safety, no larger cost) by its pinned version and
/// (x, flag=1) states with x unsafe are unreachable, so the lower convex
/// envelope of the performance set is unchanged while the count drops from
/// A^(2SN) to A^(N * #safe). Guarded at 4e6 policies.
std::vector<PerformancePoint> enumerate_flag1_performance_set(const AugmentedMdp& aug, int x0);

/// Cheapest mixture of two points with mixed safety >= alpha (the lower
/// convex envelope of the performance set at alpha). Throws if alpha exceeds
/// every point's safety.
double lower_convex_envelope(const std::vector<PerformancePoint>& points, double alpha);

} // namespace jcc
