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

#include "jcc/sim.hpp"

#include "jcc/rng.hpp"
#include "jcc/threading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <stdexcept>

namespace jcc {

namespace {

int sample_row(const GriddedMdp& mdp, int state, int action, double u) {
    double acc = 0.0;
    const auto row = mdp.kernel.row(state, action);
    for (const auto& e : row) {
        acc += e.p;
        if (u < acc) return e.next;
    }
    return row.back().next; // u landed in the residual rounding mass
}

} // namespace

RolloutBatch rollout(const GriddedMdp& mdp, const MixedPolicy& policy, int x0,
                     int num_rollouts, std::uint64_t seed) {
    if (num_rollouts < 1) throw std::invalid_argument("num_rollouts must be >= 1");
    if (x0 < 0 || x0 >= mdp.num_states) throw std::out_of_range("x0 out of range");
    policy.over.check_against(mdp);
    policy.under.check_against(mdp);

    const int N = mdp.horizon;
    RolloutBatch batch;
    batch.num_rollouts = num_rollouts;
    batch.seed = seed;
    batch.trajectories.resize(num_rollouts);
    batch.used_over.resize(num_rollouts);
    batch.costs.resize(num_rollouts);
    batch.safe.resize(num_rollouts);

    parallel_for(static_cast<std::size_t>(num_rollouts), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Rng rng = Rng::derive(seed, i);
            // The member draw consumes the stream before any transition draw.
            const bool use_over = rng.next_uniform() < policy.p_over;
            const MarkovPolicy& pol = use_over ? policy.over : policy.under;

            auto& traj = batch.trajectories[i];
            traj.resize(N + 1);
            traj[0] = x0;
            int flag = mdp.safe(x0) ? 1 : 0;
            bool all_safe = mdp.safe(x0);
            double cost = 0.0;
            int s = x0;
            for (int k = 0; k < N; ++k) {
                const int a = pol.action(k, s, flag);
                cost += mdp.stage_cost(k, s, a);
                s = sample_row(mdp, s, a, rng.next_uniform());
                traj[k + 1] = s;
                all_safe = all_safe && mdp.safe(s);
                flag &= mdp.safe(s) ? 1 : 0;
            }
            cost += mdp.terminal_cost[s];
            batch.used_over[i] = use_over ? 1 : 0;
            batch.costs[i] = cost;
            batch.safe[i] = all_safe ? 1 : 0;
        }
    });
    return batch;
}

RolloutBatch rollout(const GriddedMdp& mdp, const MarkovPolicy& policy, int x0,
                     int num_rollouts, std::uint64_t seed) {
    return rollout(mdp, MixedPolicy{policy, policy, 1.0}, x0, num_rollouts, seed);
}

EmpiricalStats empirical_stats(const RolloutBatch& batch) {
    if (batch.num_rollouts < 1) throw std::invalid_argument("empty batch");
    EmpiricalStats st;
    double cost_sum = 0.0;
    int safe_count = 0, over_count = 0;
    for (int i = 0; i < batch.num_rollouts; ++i) {
        cost_sum += batch.costs[i];
        safe_count += batch.safe[i];
        over_count += batch.used_over[i];
    }
    const double n = batch.num_rollouts;
    st.mean_cost = cost_sum / n;
    st.safety_fraction = safe_count / n;
    st.over_fraction = over_count / n;
    st.std_error = std::sqrt(st.safety_fraction * (1.0 - st.safety_fraction) / n);
    return st;
}

std::string rollout_csv(const RolloutBatch& batch) {
    std::string out = "rollout_id,sampled_policy,safe,cost,trajectory\n";
    char buf[96];
    for (int i = 0; i < batch.num_rollouts; ++i) {
        std::snprintf(buf, sizeof buf, "%d,%s,%d,%.17g,", i,
                      batch.used_over[i] ? "over" : "under", int(batch.safe[i]),
                      batch.costs[i]);
        out += buf;
        const auto& traj = batch.trajectories[i];
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (k) out += ';';
            out += std::to_string(traj[k]);
        }
        out += '\n';
    }
    return out;
}

std::vector<ContinuousRollout> rollout_continuous(const ContinuousSystemSpec& spec,
                                                  const GriddedMdp& mdp,
                                                  const MixedPolicy& policy,
                                                  int num_rollouts, std::uint64_t seed) {
    if (!mdp.grid_meta) throw std::invalid_argument("continuous replay needs grid metadata");
    if (spec.initial_state.empty())
        throw std::invalid_argument("spec has no initial state");
    const GridMeta& g = *mdp.grid_meta;
    const int N = mdp.horizon;

    std::vector<ContinuousRollout> out(num_rollouts);
    parallel_for(static_cast<std::size_t>(num_rollouts), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Rng rng = Rng::derive(seed, i, 0x436f6e74ULL);
            const bool use_over = rng.next_uniform() < policy.p_over;
            const MarkovPolicy& pol = use_over ? policy.over : policy.under;

            auto& r = out[i];
            r.used_over = use_over;
            r.trajectory.resize(N + 1);
            std::vector<double> x = spec.initial_state;
            r.trajectory[0] = x;
            r.safe = spec.safe_set.contains(x);
            int flag = r.safe ? 1 : 0;
            for (int k = 0; k < N; ++k) {
                const int cell = g.locate(x);
                const int a = pol.action(k, cell, flag);
                x = continuous_step(spec, x, spec.actions[a], rng);
                r.trajectory[k + 1] = x;
                const bool safe_now = spec.safe_set.contains(x);
                r.safe = r.safe && safe_now;
                flag &= safe_now ? 1 : 0;
            }
        }
    });
    return out;
}

std::string continuous_rollout_csv(const std::vector<ContinuousRollout>& rollouts) {
    std::string out = "rollout_id,sampled_policy,safe,trajectory\n";
    char buf[64];
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        const auto& r = rollouts[i];
        std::snprintf(buf, sizeof buf, "%zu,%s,%d,", i, r.used_over ? "over" : "under",
                      int(r.safe));
        out += buf;
        for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
            if (k) out += ';';
            for (std::size_t d = 0; d < r.trajectory[k].size(); ++d) {
                if (d) out += ' ';
                std::snprintf(buf, sizeof buf, "%.17g", r.trajectory[k][d]);
                out += buf;
            }
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Enumeration oracles

namespace {

double checked_pow(double base, double exp_count, double guard) {
    const double total = std::pow(base, exp_count);
    if (!(total <= guard))
        throw std::invalid_argument("instance too large for exhaustive enumeration");
    return total;
}

// Exact (cost, safety) of one fully specified augmented policy.
PerformancePoint evaluate_point(const AugmentedMdp& aug, const MarkovPolicy& policy,
                                AugState start, std::uint64_t id) {
    const double c = evaluate_policy_cost(aug, policy).at(0, start.state, start.flag);
    const double v = evaluate_policy_safety(aug, policy).at(0, start.state, start.flag);
    return {id, c, v};
}

} // namespace

std::vector<PerformancePoint> brute_force_performance_set(const AugmentedMdp& aug, int x0) {
    const GriddedMdp& mdp = aug.base();
    const AugState start = aug.initial_state(x0);
    const int slots = 2 * mdp.num_states * mdp.horizon;
    const double total = checked_pow(mdp.num_actions, slots, 1e6);

    std::vector<PerformancePoint> points;
    points.reserve(static_cast<std::size_t>(total));
    MarkovPolicy policy = MarkovPolicy::zeros(PolicyKind::min_cost, mdp.horizon, mdp.num_states);
    const std::uint64_t count = static_cast<std::uint64_t>(total);
    for (std::uint64_t id = 0; id < count; ++id) {
        std::uint64_t code = id;
        for (int k = 0; k < mdp.horizon; ++k)
            for (int s = 0; s < mdp.num_states; ++s)
                for (int flag = 0; flag < 2; ++flag) {
                    policy.action_ref(k, s, flag) = static_cast<int>(code % mdp.num_actions);
                    code /= mdp.num_actions;
                }
        points.push_back(evaluate_point(aug, policy, start, id));
    }
    return points;
}

std::vector<PerformancePoint> enumerate_flag1_performance_set(const AugmentedMdp& aug, int x0) {
    const GriddedMdp& mdp = aug.base();
    const AugState start = aug.initial_state(x0);
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    const int A = mdp.num_actions;

    std::vector<int> safe_states;
    for (int s = 0; s < S; ++s)
        if (mdp.safe(s)) safe_states.push_back(s);
    const int slots = N * static_cast<int>(safe_states.size());
    const double total = checked_pow(A, slots, 4e6);
    const std::uint64_t count = static_cast<std::uint64_t>(total);

    Solution min_cost = min_cost_recursion(mdp);

    // Start state unsafe: safety is 0 and the cheapest behaviour is the
    // min-cost policy; the set collapses to a single point.
    if (start.flag == 0) {
        return {evaluate_point(aug, min_cost.policy, start, 0)};
    }

    std::vector<PerformancePoint> points(count);
    parallel_for(count, [&](std::size_t b, std::size_t e) {
        // Per-policy exact evaluation, flag=1 block only: the flag=0 block is
        // the precomputed min-cost cost-to-go.
        std::vector<double> v_next(S), v_cur(S), c_next(S), c_cur(S);
        MarkovPolicy policy = min_cost.policy; // flag0 block pinned
        policy.kind = PolicyKind::min_cost;
        for (std::uint64_t id = b; id < e; ++id) {
            std::uint64_t code = id;
            for (int k = 0; k < N; ++k)
                for (int s : safe_states) {
                    policy.action_ref(k, s, 1) = static_cast<int>(code % A);
                    code /= A;
                }
            for (int s = 0; s < S; ++s) {
                v_next[s] = mdp.safe(s) ? 1.0 : 0.0;
                c_next[s] = mdp.terminal_cost[s];
            }
            for (int k = N - 1; k >= 0; --k) {
                const double* c0_next = min_cost.values.slice(k + 1, 0);
                for (int s : safe_states) {
                    const int a = policy.action(k, s, 1);
                    double av = 0.0, ac = 0.0;
                    for (const auto& en : mdp.kernel.row(s, a)) {
                        if (mdp.safe(en.next)) {
                            av += en.p * v_next[en.next];
                            ac += en.p * c_next[en.next];
                        } else {
                            ac += en.p * c0_next[en.next];
                        }
                    }
                    v_cur[s] = av;
                    c_cur[s] = mdp.stage_cost(k, s, a) + ac;
                }
                for (int s : safe_states) {
                    v_next[s] = v_cur[s];
                    c_next[s] = c_cur[s];
                }
            }
            points[id] = {id, c_next[start.state], v_next[start.state]};
        }
    });
    return points;
}

double lower_convex_envelope(const std::vector<PerformancePoint>& points, double alpha) {
    if (points.empty()) throw std::invalid_argument("empty performance set");
    std::vector<std::pair<double, double>> vc; // (safety, cost)
    vc.reserve(points.size());
    double v_max = -1.0;
    for (const auto& p : points) {
        vc.emplace_back(p.safety, p.cost);
        v_max = std::max(v_max, p.safety);
    }
    if (alpha > v_max) throw std::invalid_argument("alpha unattainable by any point");

    // Lower hull in the (safety, cost) plane; mixing two policies traces the
    // segment between their points, so the envelope is piecewise linear over
    // hull vertices.
    std::sort(vc.begin(), vc.end());
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : vc) {
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull[hull.size() - 1];
            const double cross = (b.first - a.first) * (p.second - a.second) -
                                 (b.second - a.second) * (p.first - a.first);
            if (cross <= 0.0)
                hull.pop_back();
            else
                break;
        }
        if (!hull.empty() && hull.back().first == p.first) {
            if (p.second < hull.back().second) hull.back() = p;
            continue;
        }
        hull.push_back(p);
    }

    // Cheapest hull value over safeties >= alpha. The hull is convex, so scan
    // segments; mixtures never need to exceed two vertices.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
        if (hull[i].first >= alpha) best = std::min(best, hull[i].second);
        if (i + 1 < hull.size() && hull[i].first < alpha && hull[i + 1].first >= alpha) {
            const double t = (alpha - hull[i].first) / (hull[i + 1].first - hull[i].first);
            best = std::min(best, hull[i].second + t * (hull[i + 1].second - hull[i].second));
        }
    }
    return best;
}

} // namespace jcc
