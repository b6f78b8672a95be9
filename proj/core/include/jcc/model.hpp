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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jcc {

class Rng;

/// Uniform rectangular grid over a box; states are row-major cell indices.
struct GridMeta {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<int> cells;

    int dimension() const { return static_cast<int>(cells.size()); }
    int num_cells() const;
    double width(int dim) const { return (upper[dim] - lower[dim]) / cells[dim]; }
    double center(int dim, int idx) const {
        return lower[dim] + (idx + 0.5) * width(dim);
    }
    /// Cell index of a point, clamped to the grid in every dimension.
    int locate(std::span<const double> point) const;
    std::vector<int> unflatten(int state) const;
    std::vector<double> center_of(int state) const;
};

/// Row-compressed transition kernel: one sorted sparse row per (state, action).
class Kernel {
  public:
    struct Entry {
        int next;
        double p;
    };

    Kernel() = default;
    Kernel(int num_states, int num_actions);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    /// Rows must be appended in (state-major, action-minor) order with
    /// ascending next-state indices.
    void append_row(int state, int action, std::span<const Entry> entries);

    std::span<const Entry> row(int state, int action) const {
        const std::size_t r = static_cast<std::size_t>(state) * num_actions_ + action;
        return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
    }

    double row_sum(int state, int action) const;
    std::size_t entry_count() const { return entries_.size(); }

  private:
    int num_states_ = 0;
    int num_actions_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<Entry> entries_;
    std::size_t rows_filled_ = 0;
};

/// Finite-state, finite-action model over a fixed horizon.
///
/// Stage costs are stored once when time-invariant (the common case; both
/// benchmark systems are) and per time step otherwise.
struct GriddedMdp {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    Kernel kernel;
    bool time_varying_cost = false;
    std::vector<double> stage_cost_table; // [S*A] or [N*S*A]
    std::vector<double> terminal_cost;    // [S]
    std::vector<std::uint8_t> safe_mask;  // [S], 1 iff cell center lies in the safe set
    std::optional<GridMeta> grid_meta;

    /// Per-step constant k such that the modelled reward is k - stage cost
    /// (used by reward-shifted models such as the fishery to report catch).
    double cost_shift = 0.0;

    double stage_cost(int k, int state, int action) const {
        const std::size_t base =
            time_varying_cost
                ? (static_cast<std::size_t>(k) * num_states + state) * num_actions + action
                : static_cast<std::size_t>(state) * num_actions + action;
        return stage_cost_table[base];
    }
    bool safe(int state) const { return safe_mask[state] != 0; }

    /// Checks the structural invariants (row stochasticity within 1e-9,
    /// probabilities in [0,1], non-negative finite costs, horizon >= 1).
    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Geometric description of the safe set, evaluated at cell centers.
/// Either a single axis-aligned box (the safe region) or the complement of a
/// union of axis-aligned boxes.
struct SafeSetSpec {
    enum class Kind { interval, complement_of_boxes };
    struct Box {
        std::vector<double> lower;
        std::vector<double> upper;
        bool contains(std::span<const double> p) const;
    };

    Kind kind = Kind::interval;
    Box interval;           // used when kind == interval
    std::vector<Box> boxes; // used when kind == complement_of_boxes

    bool contains(std::span<const double> point) const;
};

enum class DynamicsKind { unicycle, fishery, additive_gaussian };
enum class KernelMethod { analytic, monte_carlo };

/// Build recipe for a GriddedMdp from continuous stochastic dynamics.
struct ContinuousSystemSpec {
    int dimension = 0;
    std::vector<double> lower_bounds;
    std::vector<double> upper_bounds;
    std::vector<int> cells_per_dim;
    std::vector<std::vector<double>> actions; // explicit finite input list
    DynamicsKind dynamics_kind = DynamicsKind::additive_gaussian;
    SafeSetSpec safe_set;
    KernelMethod kernel_method = KernelMethod::analytic;
    int mc_samples = 10000;
    std::uint64_t mc_seed = 0;
    int horizon = 1;
    std::vector<double> initial_state;

    // Gaussian disturbance (unicycle / additive_gaussian): per-dim variances.
    std::vector<double> noise_cov_diag;
    double unicycle_speed = 3.0;

    // Fishery parameters.
    struct Fishery {
        double biomass_limit = 40.0; // L
        double max_catch = 10.0;     // C
        double mu = 20.0;
        double sigma = 5.0;
        double mortality_mean = 0.2, mortality_std = 0.01;
        double recruitment_mean = 1.0, recruitment_std = 0.36;
        double catch_mean = 1.1, catch_std = 0.04;
    } fishery;

    void validate() const;
};

/// Gridded model construction. Kernel rows are computed independently per
/// (state, action) from the spec plus seed, so builds are deterministic and
/// parallel-safe; the result is immutable after construction.
GriddedMdp build_mdp_from_spec(const ContinuousSystemSpec& spec);

/// Unicycle benchmark: x' = x + speed*[cos u, sin u] + w on [-25,25]^2,
/// 50x50 cells, 8 headings, w ~ N(0, diag(5,5)), cost x'x, N = 20.
/// Variant A starts at [13,13], variant B at [19,19]; the unsafe region is a
/// configurable box (variant A: [3,11]^2 between start and origin, variant B:
/// [-16,16]^2 covering the cheap center).
ContinuousSystemSpec build_unicycle(char variant,
                                    std::optional<SafeSetSpec> safe_set = std::nullopt);

/// Fishery benchmark: biomass dynamics with stochastic mortality, recruitment
/// and catch on [0,60], 60 cells, 6 efforts in [0,1], N = 100, safe set
/// [13,60], Monte-Carlo kernel (10^4 samples per row, seed 0).
/// The stage cost is K - E[catch(x,u)] with K chosen so costs are
/// non-negative; reports recover catch as horizon*K - cost.
ContinuousSystemSpec build_fishery();

/// Fishery closed forms, exposed for tests and the continuous simulator.
double fishery_recruitment(double x, const ContinuousSystemSpec::Fishery& p);
double fishery_catch(double x, double u, double delta,
                     const ContinuousSystemSpec::Fishery& p);

/// One continuous step of a builtin system; used by the continuous-replay
/// rollout mode. The state is clamped to the spec's bounds afterwards.
std::vector<double> continuous_step(const ContinuousSystemSpec& spec,
                                    std::span<const double> state,
                                    std::span<const double> action, Rng& rng);

} // namespace jcc
