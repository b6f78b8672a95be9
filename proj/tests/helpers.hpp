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
#include "jcc/dp.hpp"
#include "jcc/model.hpp"
#include "jcc/rng.hpp"
#include "jcc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace jcc::test {

/// Random dense instance for oracle comparisons. Rows are normalized uniform
/// draws; costs are U[0,1]; each state is safe with probability safe_prob.
inline GriddedMdp random_mdp(Rng& rng, int num_states, int num_actions, int horizon,
                             double safe_prob = 0.6) {
    GriddedMdp m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.horizon = horizon;
    m.kernel = Kernel(num_states, num_actions);
    std::vector<Kernel::Entry> row(num_states);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) {
            double sum = 0.0;
            for (int n = 0; n < num_states; ++n) {
                row[n] = {n, rng.next_uniform()};
                sum += row[n].p;
            }
            for (int n = 0; n < num_states; ++n) row[n].p /= sum;
            m.kernel.append_row(s, a, row);
        }
    m.stage_cost_table.resize(static_cast<std::size_t>(num_states) * num_actions);
    for (auto& c : m.stage_cost_table) c = rng.next_uniform();
    m.terminal_cost.resize(num_states);
    for (auto& c : m.terminal_cost) c = rng.next_uniform();
    m.safe_mask.resize(num_states);
    for (auto& s : m.safe_mask) s = rng.next_uniform() < safe_prob ? 1 : 0;
    m.validate();
    return m;
}

/// Exhaustive trajectory-tree expectation of a fixed policy: walks every
/// state path, accumulating path probability, cumulative cost, and the
/// all-states-safe indicator. Independent of the recursion code paths.
struct TreeResult {
    double expected_cost = 0.0;
    double prob_safe = 0.0;
};

inline void tree_walk(const GriddedMdp& m, const MarkovPolicy& pol, int k, int state, int flag,
                      double prob, double cost, bool all_safe, TreeResult& out) {
    if (k == m.horizon) {
        out.expected_cost += prob * (cost + m.terminal_cost[state]);
        if (all_safe) out.prob_safe += prob;
        return;
    }
    const int a = pol.action(k, state, flag);
    const double c = cost + m.stage_cost(k, state, a);
    for (const auto& e : m.kernel.row(state, a)) {
        const bool safe_next = m.safe(e.next);
        tree_walk(m, pol, k + 1, e.next, flag & (safe_next ? 1 : 0), prob * e.p, c,
                  all_safe && safe_next, out);
    }
}

inline TreeResult trajectory_tree(const GriddedMdp& m, const MarkovPolicy& pol, int x0) {
    TreeResult out;
    tree_walk(m, pol, 0, x0, m.safe(x0) ? 1 : 0, 1.0, 0.0, m.safe(x0), out);
    return out;
}

/// All deterministic base-model policies (identical flag blocks), for
/// brute-force optima on tiny instances.
inline std::vector<MarkovPolicy> all_base_policies(const GriddedMdp& m) {
    const int slots = m.horizon * m.num_states;
    std::uint64_t total = 1;
    for (int i = 0; i < slots; ++i) total *= m.num_actions;
    std::vector<MarkovPolicy> out;
    out.reserve(total);
    for (std::uint64_t id = 0; id < total; ++id) {
        MarkovPolicy p = MarkovPolicy::zeros(PolicyKind::min_cost, m.horizon, m.num_states);
        std::uint64_t code = id;
        for (int k = 0; k < m.horizon; ++k)
            for (int s = 0; s < m.num_states; ++s) {
                p.action_ref(k, s, 1) = static_cast<int>(code % m.num_actions);
                p.action_ref(k, s, 0) = p.action(k, s, 1);
                code /= m.num_actions;
            }
        out.push_back(std::move(p));
    }
    return out;
}

/// Reference envelope: the defining quadratic search over point pairs.
inline double envelope_pairwise(const std::vector<PerformancePoint>& pts, double alpha) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts)
        if (p.safety >= alpha) best = std::min(best, p.cost);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const auto &a = pts[i], &b = pts[j];
            if (a.safety == b.safety) continue;
            // theta on a so the mix hits alpha exactly
            const double t = (alpha - b.safety) / (a.safety - b.safety);
            if (t < 0.0 || t > 1.0) continue;
            best = std::min(best, t * a.cost + (1.0 - t) * b.cost);
        }
    return best;
}

} // namespace jcc::test
