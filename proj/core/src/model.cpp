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

#include "jcc/model.hpp"

#include "jcc/rng.hpp"
#include "jcc/threading.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace jcc {

namespace {

constexpr double kRowSumTol = 1e-9;

// Mass dropped from a per-dimension factor; keeps row sums well inside the
// 1e-9 stochasticity tolerance (<= cells * 1e-12 per dimension).
constexpr double kFactorCutoff = 1e-12;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2_v<double> / 2.0); }

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw std::invalid_argument("invalid " + field + ": " + what);
}

} // namespace

// ---------------------------------------------------------------------------
// GridMeta

int GridMeta::num_cells() const {
    int n = 1;
    for (int c : cells) n *= c;
    return n;
}

int GridMeta::locate(std::span<const double> point) const {
    int idx = 0;
    for (int d = 0; d < dimension(); ++d) {
        const double w = width(d);
        int i = static_cast<int>(std::floor((point[d] - lower[d]) / w));
        i = std::clamp(i, 0, cells[d] - 1);
        idx = idx * cells[d] + i;
    }
    return idx;
}

std::vector<int> GridMeta::unflatten(int state) const {
    std::vector<int> out(dimension());
    for (int d = dimension() - 1; d >= 0; --d) {
        out[d] = state % cells[d];
        state /= cells[d];
    }
    return out;
}

std::vector<double> GridMeta::center_of(int state) const {
    const auto idx = unflatten(state);
    std::vector<double> c(dimension());
    for (int d = 0; d < dimension(); ++d) c[d] = center(d, idx[d]);
    return c;
}

// ---------------------------------------------------------------------------
// Kernel

Kernel::Kernel(int num_states, int num_actions)
    : num_states_(num_states), num_actions_(num_actions) {
    offsets_.assign(static_cast<std::size_t>(num_states) * num_actions + 1, 0);
}

void Kernel::append_row(int state, int action, std::span<const Entry> entries) {
    const std::size_t r = static_cast<std::size_t>(state) * num_actions_ + action;
    if (r != rows_filled_) throw std::logic_error("Kernel rows must be appended in order");
    entries_.insert(entries_.end(), entries.begin(), entries.end());
    offsets_[r + 1] = entries_.size();
    ++rows_filled_;
}

double Kernel::row_sum(int state, int action) const {
    double s = 0.0;
    for (const auto& e : row(state, action)) s += e.p;
    return s;
}

// ---------------------------------------------------------------------------
// GriddedMdp

void GriddedMdp::validate() const {
    if (horizon < 1) fail("horizon", "must be >= 1");
    if (num_states < 1 || num_actions < 1) fail("num_states/num_actions", "must be >= 1");
    if (kernel.num_states() != num_states || kernel.num_actions() != num_actions)
        fail("kernel", "shape does not match model");
    const std::size_t want_stage =
        (time_varying_cost ? static_cast<std::size_t>(horizon) : 1u) *
        static_cast<std::size_t>(num_states) * num_actions;
    if (stage_cost_table.size() != want_stage) fail("stage_cost", "wrong size");
    if (terminal_cost.size() != static_cast<std::size_t>(num_states))
        fail("terminal_cost", "wrong size");
    if (safe_mask.size() != static_cast<std::size_t>(num_states))
        fail("safe_mask", "wrong size");
    for (double c : stage_cost_table)
        if (!(c >= 0.0) || !std::isfinite(c)) fail("stage_cost", "entries must be finite and >= 0");
    for (double c : terminal_cost)
        if (!(c >= 0.0) || !std::isfinite(c)) fail("terminal_cost", "entries must be finite and >= 0");
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            double sum = 0.0;
            int prev = -1;
            for (const auto& e : kernel.row(s, a)) {
                if (e.next <= prev || e.next >= num_states) fail("kernel", "bad next-state index");
                if (e.p < 0.0 || e.p > 1.0) fail("kernel", "probability outside [0,1]");
                prev = e.next;
                sum += e.p;
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                fail("kernel", "row (" + std::to_string(s) + "," + std::to_string(a) +
                                   ") sums to " + std::to_string(sum));
        }
    }
}

// ---------------------------------------------------------------------------
// Safe set

bool SafeSetSpec::Box::contains(std::span<const double> p) const {
    for (std::size_t d = 0; d < lower.size(); ++d)
        if (p[d] < lower[d] || p[d] > upper[d]) return false;
    return true;
}

bool SafeSetSpec::contains(std::span<const double> point) const {
    if (kind == Kind::interval) return interval.contains(point);
    for (const auto& b : boxes)
        if (b.contains(point)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Spec validation

void ContinuousSystemSpec::validate() const {
    if (dimension < 1) fail("dimension", "must be >= 1");
    if (lower_bounds.size() != static_cast<std::size_t>(dimension) ||
        upper_bounds.size() != static_cast<std::size_t>(dimension))
        fail("bounds", "need one (lower, upper) pair per dimension");
    for (int d = 0; d < dimension; ++d)
        if (!(lower_bounds[d] < upper_bounds[d])) fail("bounds", "lower must be < upper");
    if (cells_per_dim.size() != static_cast<std::size_t>(dimension))
        fail("cells_per_dim", "need one entry per dimension");
    for (int c : cells_per_dim)
        if (c < 1) fail("cells_per_dim", "must be >= 1");
    if (actions.empty()) fail("actions", "must be non-empty");
    if (horizon < 1) fail("horizon", "must be >= 1");
    if (kernel_method == KernelMethod::monte_carlo && mc_samples < 1)
        fail("kernel_method", "monte-carlo requires samples >= 1");
    if (dynamics_kind != DynamicsKind::fishery) {
        if (noise_cov_diag.size() != static_cast<std::size_t>(dimension))
            fail("noise_params", "need one variance per dimension");
        for (double v : noise_cov_diag)
            if (!(v > 0.0)) fail("noise_params", "variances must be > 0");
    }
    if (!initial_state.empty() && initial_state.size() != static_cast<std::size_t>(dimension))
        fail("initial_state", "wrong dimension");
}

// ---------------------------------------------------------------------------
// Dynamics

double fishery_recruitment(double x, const ContinuousSystemSpec::Fishery& p) {
    const double sgm = 1.0 / (1.0 + std::exp(-(x - p.mu) / (p.sigma * p.sigma)));
    return x * (1.0 - x / p.biomass_limit) * sgm;
}

double fishery_catch(double x, double u, double delta,
                     const ContinuousSystemSpec::Fishery& p) {
    const double full = delta * u * p.max_catch;
    return std::min(full, full * x / p.biomass_limit);
}

namespace {

std::vector<double> action_mean_shift(const ContinuousSystemSpec& spec,
                                      std::span<const double> action) {
    if (spec.dynamics_kind == DynamicsKind::unicycle) {
        const double u = action[0];
        return {spec.unicycle_speed * std::cos(u), spec.unicycle_speed * std::sin(u)};
    }
    // additive_gaussian: the action is itself the displacement vector
    return std::vector<double>(action.begin(), action.end());
}

} // namespace

std::vector<double> continuous_step(const ContinuousSystemSpec& spec,
                                    std::span<const double> state,
                                    std::span<const double> action, Rng& rng) {
    std::vector<double> next(spec.dimension);
    if (spec.dynamics_kind == DynamicsKind::fishery) {
        const auto& f = spec.fishery;
        const double v = rng.next_normal(f.mortality_mean, f.mortality_std);
        const double g = rng.next_normal(f.recruitment_mean, f.recruitment_std);
        double delta = rng.next_normal(f.catch_mean, f.catch_std);
        while (delta <= 0.0) delta = rng.next_normal(f.catch_mean, f.catch_std);
        const double x = state[0];
        next[0] = (1.0 - v) * x + g * fishery_recruitment(x, f) -
                  fishery_catch(x, action[0], delta, f);
    } else {
        const auto shift = action_mean_shift(spec, action);
        for (int d = 0; d < spec.dimension; ++d)
            next[d] = state[d] + shift[d] + rng.next_normal(0.0, std::sqrt(spec.noise_cov_diag[d]));
    }
    for (int d = 0; d < spec.dimension; ++d)
        next[d] = std::clamp(next[d], spec.lower_bounds[d], spec.upper_bounds[d]);
    return next;
}

// ---------------------------------------------------------------------------
// Kernel builders

namespace {

// Per-dimension Gaussian cell masses for one source cell and mean shift.
// Boundary cells absorb the clamped tails, so the factor sums to 1 exactly
// (up to rounding) before the cutoff is applied.
void gaussian_factor(const GridMeta& g, int dim, double mean, double stddev,
                     std::vector<std::pair<int, double>>& out) {
    out.clear();
    const int n = g.cells[dim];
    const double w = g.width(dim);
    const double lo = g.lower[dim];
    double prev_cdf = 0.0; // CDF at the left edge, with the lower tail clamped in
    for (int j = 0; j < n; ++j) {
        const double right = lo + (j + 1) * w;
        const double cdf = (j == n - 1) ? 1.0 : normal_cdf((right - mean) / stddev);
        const double mass = cdf - prev_cdf;
        prev_cdf = cdf;
        if (mass >= kFactorCutoff) out.emplace_back(j, mass);
    }
}

GriddedMdp build_gaussian_grid_kernel(const ContinuousSystemSpec& spec, GriddedMdp&& model) {
    const GridMeta& g = *model.grid_meta;
    const int S = model.num_states;
    const int A = model.num_actions;
    const int D = spec.dimension;

    std::vector<std::vector<double>> shifts(A);
    for (int a = 0; a < A; ++a) shifts[a] = action_mean_shift(spec, spec.actions[a]);
    std::vector<double> stddev(D);
    for (int d = 0; d < D; ++d) stddev[d] = std::sqrt(spec.noise_cov_diag[d]);

    // Rows are independent; build them in parallel, then append in order.
    std::vector<std::vector<Kernel::Entry>> rows(static_cast<std::size_t>(S) * A);
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t sb, std::size_t se) {
        std::vector<std::vector<std::pair<int, double>>> factors(D);
        std::vector<Kernel::Entry> buf;
        for (std::size_t s = sb; s < se; ++s) {
            const auto idx = g.unflatten(static_cast<int>(s));
            for (int a = 0; a < A; ++a) {
                for (int d = 0; d < D; ++d)
                    gaussian_factor(g, d, g.center(d, idx[d]) + shifts[a][d], stddev[d],
                                    factors[d]);
                buf.clear();
                // Outer product over dimensions, row-major next-state order.
                buf.push_back({0, 1.0});
                std::vector<Kernel::Entry> tmp;
                for (int d = 0; d < D; ++d) {
                    tmp.clear();
                    tmp.reserve(buf.size() * factors[d].size());
                    for (const auto& e : buf)
                        for (const auto& [j, m] : factors[d])
                            tmp.push_back({e.next * g.cells[d] + j, e.p * m});
                    std::swap(buf, tmp);
                }
                rows[s * A + a] = buf;
            }
        }
    });
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            model.kernel.append_row(s, a, rows[static_cast<std::size_t>(s) * A + a]);
    return std::move(model);
}

GriddedMdp build_monte_carlo_kernel(const ContinuousSystemSpec& spec, GriddedMdp&& model) {
    const GridMeta& g = *model.grid_meta;
    const int S = model.num_states;
    const int A = model.num_actions;
    const int n = spec.mc_samples;

    std::vector<std::vector<Kernel::Entry>> rows(static_cast<std::size_t>(S) * A);
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t sb, std::size_t se) {
        std::vector<int> counts;
        for (std::size_t s = sb; s < se; ++s) {
            const auto center = g.center_of(static_cast<int>(s));
            for (int a = 0; a < A; ++a) {
                // One stream per (seed, state, action): reproducible under any
                // parallel schedule.
                Rng rng = Rng::derive(spec.mc_seed, s, static_cast<std::uint64_t>(a));
                counts.assign(S, 0);
                for (int i = 0; i < n; ++i) {
                    const auto next = continuous_step(spec, center, spec.actions[a], rng);
                    ++counts[g.locate(next)];
                }
                auto& row = rows[s * A + a];
                for (int j = 0; j < S; ++j)
                    if (counts[j] > 0)
                        row.push_back({j, static_cast<double>(counts[j]) / n});
            }
        }
    });
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            model.kernel.append_row(s, a, rows[static_cast<std::size_t>(s) * A + a]);
    return std::move(model);
}

} // namespace

GriddedMdp build_mdp_from_spec(const ContinuousSystemSpec& spec) {
    spec.validate();

    GriddedMdp model;
    model.grid_meta = GridMeta{spec.lower_bounds, spec.upper_bounds, spec.cells_per_dim};
    const GridMeta& g = *model.grid_meta;
    model.num_states = g.num_cells();
    model.num_actions = static_cast<int>(spec.actions.size());
    model.horizon = spec.horizon;
    model.kernel = Kernel(model.num_states, model.num_actions);

    model.safe_mask.resize(model.num_states);
    for (int s = 0; s < model.num_states; ++s)
        model.safe_mask[s] = spec.safe_set.contains(g.center_of(s)) ? 1 : 0;

    // Costs at cell centers.
    model.time_varying_cost = false;
    model.stage_cost_table.assign(
        static_cast<std::size_t>(model.num_states) * model.num_actions, 0.0);
    model.terminal_cost.assign(model.num_states, 0.0);
    if (spec.dynamics_kind == DynamicsKind::fishery) {
        const auto& f = spec.fishery;
        // Stage cost K - E[catch]; K makes the costs non-negative over the grid.
        double k_shift = 0.0;
        for (int s = 0; s < model.num_states; ++s) {
            const double x = g.center_of(s)[0];
            for (const auto& u : spec.actions)
                k_shift = std::max(k_shift, fishery_catch(x, u[0], f.catch_mean, f));
        }
        model.cost_shift = k_shift;
        for (int s = 0; s < model.num_states; ++s) {
            const double x = g.center_of(s)[0];
            for (int a = 0; a < model.num_actions; ++a)
                model.stage_cost_table[static_cast<std::size_t>(s) * model.num_actions + a] =
                    k_shift - fishery_catch(x, spec.actions[a][0], f.catch_mean, f);
        }
    } else {
        for (int s = 0; s < model.num_states; ++s) {
            const auto c = g.center_of(s);
            double q = 0.0;
            for (double v : c) q += v * v;
            for (int a = 0; a < model.num_actions; ++a)
                model.stage_cost_table[static_cast<std::size_t>(s) * model.num_actions + a] = q;
            model.terminal_cost[s] = q;
        }
    }

    GriddedMdp built = spec.kernel_method == KernelMethod::analytic
                           ? build_gaussian_grid_kernel(spec, std::move(model))
                           : build_monte_carlo_kernel(spec, std::move(model));
    built.validate();
    return built;
}

ContinuousSystemSpec build_unicycle(char variant, std::optional<SafeSetSpec> safe_set) {
    if (variant != 'a' && variant != 'b') fail("variant", "must be 'a' or 'b'");
    ContinuousSystemSpec spec;
    spec.dimension = 2;
    spec.lower_bounds = {-25.0, -25.0};
    spec.upper_bounds = {25.0, 25.0};
    spec.cells_per_dim = {50, 50};
    spec.dynamics_kind = DynamicsKind::unicycle;
    spec.kernel_method = KernelMethod::analytic;
    spec.noise_cov_diag = {5.0, 5.0};
    spec.unicycle_speed = 3.0;
    spec.horizon = 20;
    for (int a = 0; a < 8; ++a)
        spec.actions.push_back({2.0 * std::numbers::pi_v<double> * a / 8.0});
    spec.initial_state = variant == 'a' ? std::vector<double>{13.0, 13.0}
                                        : std::vector<double>{19.0, 19.0};
    if (safe_set) {
        spec.safe_set = *safe_set;
    } else {
        spec.safe_set.kind = SafeSetSpec::Kind::complement_of_boxes;
        spec.safe_set.boxes.push_back(variant == 'a'
                                          ? SafeSetSpec::Box{{3.0, 3.0}, {11.0, 11.0}}
                                          : SafeSetSpec::Box{{-16.0, -16.0}, {16.0, 16.0}});
    }
    return spec;
}

ContinuousSystemSpec build_fishery() {
    ContinuousSystemSpec spec;
    spec.dimension = 1;
    spec.lower_bounds = {0.0};
    spec.upper_bounds = {60.0};
    spec.cells_per_dim = {60};
    spec.dynamics_kind = DynamicsKind::fishery;
    spec.kernel_method = KernelMethod::monte_carlo;
    spec.mc_samples = 10000;
    spec.mc_seed = 0;
    spec.horizon = 100;
    for (int a = 0; a < 6; ++a) spec.actions.push_back({a / 5.0});
    spec.safe_set.kind = SafeSetSpec::Kind::interval;
    spec.safe_set.interval = {{13.0}, {60.0}};
    spec.initial_state = {40.0};
    return spec;
}

} // namespace jcc
