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

#include "jcc/augment.hpp"
#include "jcc/dp.hpp"
#include "jcc/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace jcc;
using namespace jcc::test;

namespace {

// Two-state chain: state 0 safe, state 1 unsafe, one action,
// T(1|0) = 0.3, T(1|1) = 1.
GriddedMdp two_state_chain() {
    GriddedMdp m;
    m.num_states = 2;
    m.num_actions = 1;
    m.horizon = 2;
    m.kernel = Kernel(2, 1);
    const Kernel::Entry row0[] = {{0, 0.7}, {1, 0.3}};
    const Kernel::Entry row1[] = {{1, 1.0}};
    m.kernel.append_row(0, 0, row0);
    m.kernel.append_row(1, 0, row1);
    m.stage_cost_table = {0.0, 0.0};
    m.terminal_cost = {0.0, 0.0};
    m.safe_mask = {1, 0};
    m.validate();
    return m;
}

} // namespace

TEST_CASE("augmented kernel rows are stochastic and respect the flag rule") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const GriddedMdp m = random_mdp(rng, 3, 2, 2);
        const AugmentedMdp aug(m);
        for (int s = 0; s < m.num_states; ++s)
            for (int b : {0, 1})
                for (int a = 0; a < m.num_actions; ++a) {
                    double sum = 0.0;
                    double to_flag1_from_dead = 0.0;
                    for (int n = 0; n < m.num_states; ++n)
                        for (int bn : {0, 1}) {
                            const double p = aug.prob({s, b}, a, {n, bn});
                            sum += p;
                            if (b == 0 && bn == 1) to_flag1_from_dead += p;
                            if (b == 1 && p > 0.0) CHECK(bn == (m.safe(n) ? 1 : 0));
                        }
                    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
                    CHECK(to_flag1_from_dead == 0.0);
                }
    }
}

TEST_CASE("initial augmented state carries the safety indicator") {
    const GriddedMdp m = two_state_chain();
    const AugmentedMdp aug(m);
    CHECK(aug.initial_state(0) == AugState{0, 1});
    CHECK(aug.initial_state(1) == AugState{1, 0});
    CHECK_THROWS_AS(aug.initial_state(2), std::out_of_range);
}

TEST_CASE("two-state chain transition masses from the live flag") {
    const GriddedMdp m = two_state_chain();
    const AugmentedMdp aug(m);
    CHECK(aug.prob({0, 1}, 0, {0, 1}) == doctest::Approx(0.7));
    CHECK(aug.prob({0, 1}, 0, {1, 0}) == doctest::Approx(0.3));
    CHECK(aug.prob({0, 1}, 0, {1, 1}) == 0.0);
    CHECK(aug.prob({0, 0}, 0, {0, 0}) == doctest::Approx(0.7));
    CHECK(aug.prob({0, 0}, 0, {0, 1}) == 0.0);
}

TEST_CASE("all-safe and no-safe corner cases") {
    Rng rng(11);
    GriddedMdp all_safe = random_mdp(rng, 3, 2, 2, /*safe_prob=*/1.1);
    const AugmentedMdp aug_safe(all_safe);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a)
            for (int n = 0; n < 3; ++n) CHECK(aug_safe.prob({s, 1}, a, {n, 0}) == 0.0);

    GriddedMdp none_safe = random_mdp(rng, 3, 2, 2, /*safe_prob=*/-0.1);
    const AugmentedMdp aug_none(none_safe);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a)
            for (int n = 0; n < 3; ++n) CHECK(aug_none.prob({s, 1}, a, {n, 1}) == 0.0);
}

TEST_CASE("terminal flag expectation equals the trajectory-tree safety probability") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const GriddedMdp m = random_mdp(rng, 3, 2, 3);
        const AugmentedMdp aug(m);
        MarkovPolicy pol = MarkovPolicy::zeros(PolicyKind::min_cost, m.horizon, m.num_states);
        for (auto& a : pol.actions_flag1) a = static_cast<int>(rng.next_u64() % m.num_actions);
        for (auto& a : pol.actions_flag0) a = static_cast<int>(rng.next_u64() % m.num_actions);
        for (int x0 = 0; x0 < m.num_states; ++x0) {
            const auto start = aug.initial_state(x0);
            const double v = evaluate_policy_safety(aug, pol).at(0, start.state, start.flag);
            const TreeResult tree = trajectory_tree(m, pol, x0);
            CHECK(v == doctest::Approx(tree.prob_safe).epsilon(1e-12));
        }
    }
}

TEST_CASE("flag zero is absorbing along every reachable transition") {
    Rng rng(31);
    const GriddedMdp m = random_mdp(rng, 4, 2, 2);
    const AugmentedMdp aug(m);
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < m.num_actions; ++a)
            for (int n = 0; n < m.num_states; ++n)
                CHECK(aug.prob({s, 0}, a, {n, 1}) == 0.0);
}
