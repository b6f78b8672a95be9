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

#include "jcc/model.hpp"

#include <stdexcept>
#include <utility>

namespace jcc {

/// Augmented state: the base state plus a flag that is 1 while the whole
/// trajectory so far has stayed in the safe set. The flag starts at
/// 1_A(x_0) and is cleared permanently on the first unsafe state, so its
/// terminal expectation equals the probability that the trajectory is safe.
struct AugState {
    int state;
    int flag; // 0 or 1

    bool operator==(const AugState&) const = default;
};

/// Lazy view of the base model lifted to state x {0,1}.
///
/// The kernel is never materialized: transition probabilities follow from
/// the base kernel and the safe mask (the flag update is deterministic given
/// the next state). The flag=0 block is exactly the base model, which the
/// recursions exploit. Pure reads over an immutable base; shareable across
/// threads.
class AugmentedMdp {
  public:
    explicit AugmentedMdp(const GriddedMdp& base) : base_(&base) {}

    const GriddedMdp& base() const { return *base_; }
    int num_aug_states() const { return 2 * base_->num_states; }

    /// Deterministic flag update: b' = 1_A(x') * b.
    int next_flag(int flag, int next_state) const {
        return flag & (base_->safe(next_state) ? 1 : 0);
    }

    /// Probability of (next.state, next.flag) from (from.state, from.flag)
    /// under the given action.
    double prob(AugState from, int action, AugState next) const {
        if (next.flag != next_flag(from.flag, next.state)) return 0.0;
        for (const auto& e : base_->kernel.row(from.state, action))
            if (e.next == next.state) return e.p;
        return 0.0;
    }

    /// Initial augmented state for a base start state: (x0, 1_A(x0)).
    AugState initial_state(int x0) const {
        if (x0 < 0 || x0 >= base_->num_states)
            throw std::out_of_range("initial state index out of range");
        return {x0, base_->safe(x0) ? 1 : 0};
    }

  private:
    const GriddedMdp* base_;
};

} // namespace jcc
