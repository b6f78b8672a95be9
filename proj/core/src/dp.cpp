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

#include "jcc/dp.hpp"

#include "jcc/threading.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace jcc {

ValueTable ValueTable::zeros(ValueKind kind, int horizon, int num_states, int blocks) {
    ValueTable t;
    t.kind = kind;
    t.horizon = horizon;
    t.num_states = num_states;
    t.blocks = blocks;
    t.values.assign(static_cast<std::size_t>(horizon + 1) * blocks * num_states, 0.0);
    return t;
}

MarkovPolicy MarkovPolicy::zeros(PolicyKind kind, int horizon, int num_states) {
    MarkovPolicy p;
    p.kind = kind;
    p.horizon = horizon;
    p.num_states = num_states;
    p.actions_flag1.assign(static_cast<std::size_t>(horizon) * num_states, 0);
    p.actions_flag0.assign(static_cast<std::size_t>(horizon) * num_states, 0);
    return p;
}

void MarkovPolicy::check_against(const GriddedMdp& mdp) const {
    if (horizon != mdp.horizon || num_states != mdp.num_states)
        throw std::invalid_argument("policy shape does not match model");
    for (int a : actions_flag1)
        if (a < 0 || a >= mdp.num_actions) throw std::invalid_argument("policy action out of range");
    for (int a : actions_flag0)
        if (a < 0 || a >= mdp.num_actions) throw std::invalid_argument("policy action out of range");
}

namespace {

// One backward min-step over all states: out[s] = min_a cost(k,s,a) + sum_n p*next[n],
// with next[] already mixed for the target block. Fixed ascending summation order.
void min_step(const GriddedMdp& mdp, int k, const double* next, double* out, int* act) {
    const int A = mdp.num_actions;
    parallel_for(static_cast<std::size_t>(mdp.num_states), [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            double best = 0.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                double acc = 0.0;
                for (const auto& en : mdp.kernel.row(static_cast<int>(s), a))
                    acc += en.p * next[en.next];
                const double q = mdp.stage_cost(k, static_cast<int>(s), a) + acc;
                if (a == 0 || q < best) {
                    best = q;
                    best_a = a;
                }
            }
            out[s] = best;
            act[s] = best_a;
        }
    });
}

} // namespace

Solution min_cost_recursion(const GriddedMdp& mdp) {
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    Solution sol{ValueTable::zeros(ValueKind::cost, N, S, 1),
                 MarkovPolicy::zeros(PolicyKind::min_cost, N, S)};
    for (int s = 0; s < S; ++s) sol.values.at(N, s, 0) = mdp.terminal_cost[s];
    std::vector<int> act(S);
    for (int k = N - 1; k >= 0; --k) {
        min_step(mdp, k, sol.values.slice(k + 1, 0), sol.values.slice(k, 0), act.data());
        for (int s = 0; s < S; ++s) {
            sol.policy.action_ref(k, s, 1) = act[s];
            sol.policy.action_ref(k, s, 0) = act[s];
        }
    }
    return sol;
}

Solution max_safety_recursion(const GriddedMdp& mdp) {
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    const int A = mdp.num_actions;
    Solution sol{ValueTable::zeros(ValueKind::safety, N, S, 1),
                 MarkovPolicy::zeros(PolicyKind::max_safety, N, S)};
    for (int s = 0; s < S; ++s) sol.values.at(N, s, 0) = mdp.safe(s) ? 1.0 : 0.0;
    for (int k = N - 1; k >= 0; --k) {
        const double* next = sol.values.slice(k + 1, 0);
        double* out = sol.values.slice(k, 0);
        parallel_for(static_cast<std::size_t>(S), [&](std::size_t b, std::size_t e) {
            for (std::size_t s = b; s < e; ++s) {
                if (!mdp.safe(static_cast<int>(s))) {
                    out[s] = 0.0; // action stays 0 for unsafe states
                    continue;
                }
                double best = -1.0;
                int best_a = 0;
                for (int a = 0; a < A; ++a) {
                    double acc = 0.0;
                    for (const auto& en : mdp.kernel.row(static_cast<int>(s), a))
                        acc += en.p * next[en.next];
                    if (acc > best) {
                        best = acc;
                        best_a = a;
                    }
                }
                out[s] = std::min(best, 1.0); // guard ulp drift from row sums
                sol.policy.action_ref(k, static_cast<int>(s), 1) = best_a;
                sol.policy.action_ref(k, static_cast<int>(s), 0) = best_a;
            }
        });
    }
    return sol;
}

Solution lambda_recursion(const AugmentedMdp& aug, double lambda, const Solution* min_cost) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    const GriddedMdp& mdp = aug.base();
    const int N = mdp.horizon;
    const int S = mdp.num_states;

    Solution base_owned;
    if (!min_cost) {
        base_owned = min_cost_recursion(mdp);
        min_cost = &base_owned;
    }

    Solution sol{ValueTable::zeros(ValueKind::lambda_penalized, N, S, 2),
                 MarkovPolicy::zeros(PolicyKind::lambda_penalized, N, S)};
    sol.policy.lambda = lambda;
    // flag=0 block: the penalty is already lost; the problem reduces to plain
    // minimum cost, independent of lambda.
    for (int k = 0; k <= N; ++k)
        for (int s = 0; s < S; ++s) sol.values.at(k, s, 0) = min_cost->values.at(k, s, 0);
    sol.policy.actions_flag0 = min_cost->policy.actions_flag1;

    for (int s = 0; s < S; ++s) sol.values.at(N, s, 1) = mdp.terminal_cost[s] - lambda;

    // flag=1 sweep. The next-state value seen from a live trajectory is the
    // flag=1 value where the next state is safe and the flag=0 (min-cost)
    // value where it is not; mixing once per step keeps the inner sums in
    // plain ascending order (and bitwise equal to min_cost at lambda = 0).
    std::vector<double> mixed(S);
    std::vector<int> act(S);
    for (int k = N - 1; k >= 0; --k) {
        const double* next1 = sol.values.slice(k + 1, 1);
        const double* next0 = sol.values.slice(k + 1, 0);
        for (int s = 0; s < S; ++s) mixed[s] = mdp.safe(s) ? next1[s] : next0[s];
        min_step(mdp, k, mixed.data(), sol.values.slice(k, 1), act.data());
        for (int s = 0; s < S; ++s) sol.policy.action_ref(k, s, 1) = act[s];
    }
    return sol;
}

Solution boole_recursion(const GriddedMdp& mdp, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    Solution sol{ValueTable::zeros(ValueKind::boole, N, S, 1),
                 MarkovPolicy::zeros(PolicyKind::boole, N, S)};
    sol.policy.lambda = lambda;
    std::vector<double> penalty(S);
    for (int s = 0; s < S; ++s) penalty[s] = mdp.safe(s) ? 0.0 : lambda;
    for (int s = 0; s < S; ++s) sol.values.at(N, s, 0) = mdp.terminal_cost[s] + penalty[s];

    const int A = mdp.num_actions;
    std::vector<int> act(S);
    for (int k = N - 1; k >= 0; --k) {
        const double* next = sol.values.slice(k + 1, 0);
        double* out = sol.values.slice(k, 0);
        parallel_for(static_cast<std::size_t>(S), [&](std::size_t b, std::size_t e) {
            for (std::size_t s = b; s < e; ++s) {
                double best = 0.0;
                int best_a = 0;
                for (int a = 0; a < A; ++a) {
                    double acc = 0.0;
                    for (const auto& en : mdp.kernel.row(static_cast<int>(s), a))
                        acc += en.p * next[en.next];
                    const double q = mdp.stage_cost(k, static_cast<int>(s), a) + penalty[s] + acc;
                    if (a == 0 || q < best) {
                        best = q;
                        best_a = a;
                    }
                }
                out[s] = best;
                act[s] = best_a;
            }
        });
        for (int s = 0; s < S; ++s) {
            sol.policy.action_ref(k, s, 1) = act[s];
            sol.policy.action_ref(k, s, 0) = act[s];
        }
    }
    return sol;
}

ValueTable evaluate_policy_cost(const AugmentedMdp& aug, const MarkovPolicy& policy) {
    const GriddedMdp& mdp = aug.base();
    policy.check_against(mdp);
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    ValueTable t = ValueTable::zeros(ValueKind::cost, N, S, 2);
    for (int s = 0; s < S; ++s) {
        t.at(N, s, 1) = mdp.terminal_cost[s];
        t.at(N, s, 0) = mdp.terminal_cost[s];
    }
    std::vector<double> mixed(S);
    for (int k = N - 1; k >= 0; --k) {
        const double* next0 = t.slice(k + 1, 0);
        double* out0 = t.slice(k, 0);
        for (int s = 0; s < S; ++s) {
            const int a = policy.action(k, s, 0);
            double acc = 0.0;
            for (const auto& en : mdp.kernel.row(s, a)) acc += en.p * next0[en.next];
            out0[s] = mdp.stage_cost(k, s, a) + acc;
        }
        const double* next1 = t.slice(k + 1, 1);
        for (int s = 0; s < S; ++s) mixed[s] = mdp.safe(s) ? next1[s] : next0[s];
        double* out1 = t.slice(k, 1);
        for (int s = 0; s < S; ++s) {
            const int a = policy.action(k, s, 1);
            double acc = 0.0;
            for (const auto& en : mdp.kernel.row(s, a)) acc += en.p * mixed[en.next];
            out1[s] = mdp.stage_cost(k, s, a) + acc;
        }
    }
    return t;
}

ValueTable evaluate_policy_safety(const AugmentedMdp& aug, const MarkovPolicy& policy) {
    const GriddedMdp& mdp = aug.base();
    policy.check_against(mdp);
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    ValueTable t = ValueTable::zeros(ValueKind::safety, N, S, 2);
    for (int s = 0; s < S; ++s) t.at(N, s, 1) = mdp.safe(s) ? 1.0 : 0.0;
    for (int k = N - 1; k >= 0; --k) {
        const double* next = t.slice(k + 1, 1);
        double* out = t.slice(k, 1);
        for (int s = 0; s < S; ++s) {
            if (!mdp.safe(s)) {
                out[s] = 0.0;
                continue;
            }
            const int a = policy.action(k, s, 1);
            double acc = 0.0;
            for (const auto& en : mdp.kernel.row(s, a)) acc += en.p * next[en.next];
            out[s] = std::min(acc, 1.0);
        }
    }
    return t;
}

std::vector<std::vector<double>> forward_distribution(const GriddedMdp& mdp,
                                                      const MarkovPolicy& policy, int x0) {
    policy.check_against(mdp);
    if (x0 < 0 || x0 >= mdp.num_states) throw std::out_of_range("x0 out of range");
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    // Two-block working distribution so flag-dependent policies are pushed
    // through the chain they actually induce.
    std::vector<double> d1(S, 0.0), d0(S, 0.0);
    (mdp.safe(x0) ? d1 : d0)[x0] = 1.0;

    std::vector<std::vector<double>> out;
    out.reserve(N + 1);
    auto marginal = [&] {
        std::vector<double> m(S);
        for (int s = 0; s < S; ++s) m[s] = d1[s] + d0[s];
        return m;
    };
    out.push_back(marginal());
    std::vector<double> n1(S), n0(S);
    for (int k = 0; k < N; ++k) {
        std::fill(n1.begin(), n1.end(), 0.0);
        std::fill(n0.begin(), n0.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            if (d1[s] > 0.0) {
                for (const auto& en : mdp.kernel.row(s, policy.action(k, s, 1)))
                    (mdp.safe(en.next) ? n1 : n0)[en.next] += d1[s] * en.p;
            }
            if (d0[s] > 0.0) {
                for (const auto& en : mdp.kernel.row(s, policy.action(k, s, 0)))
                    n0[en.next] += d0[s] * en.p;
            }
        }
        d1.swap(n1);
        d0.swap(n0);
        out.push_back(marginal());
    }
    return out;
}

double boole_safety_bound(const GriddedMdp& mdp, const MarkovPolicy& policy, int x0) {
    const auto dist = forward_distribution(mdp, policy, x0);
    double unsafe_mass = 0.0;
    for (const auto& d : dist)
        for (int s = 0; s < mdp.num_states; ++s)
            if (!mdp.safe(s)) unsafe_mass += d[s];
    return 1.0 - unsafe_mass;
}

std::string value_table_csv(const ValueTable& table) {
    std::string out = "k,state,flag,value\n";
    char buf[64];
    for (int k = 0; k <= table.horizon; ++k)
        for (int b = table.blocks - 1; b >= 0; --b)
            for (int s = 0; s < table.num_states; ++s) {
                const int flag = table.blocks == 2 ? b : 1;
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g\n", k, s, flag,
                              table.at(k, s, flag));
                out += buf;
            }
    return out;
}

} // namespace jcc
