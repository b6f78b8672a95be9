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

// End-to-end acceptance suite. Each criterion prints one pass/fail line;
// the process exits non-zero if any criterion fails.

#include "jcc/dual.hpp"
#include "jcc/model.hpp"
#include "jcc/rng.hpp"
#include "jcc/serialize.hpp"
#include "jcc/sim.hpp"

#include "helpers.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

using namespace jcc;
using jcc::test::random_mdp;
using jcc::test::trajectory_tree;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
    void note(const std::string& what) {
        if (ok && detail.empty()) detail = what;
    }
};

// Random instance in the acceptance size envelope with a non-degenerate
// safety range, plus an alpha strictly between the border safeties.
struct Instance {
    GriddedMdp mdp;
    double alpha;
    double v_under, v_bar;
};

Instance make_instance(Rng& rng) {
    for (;;) {
        const int S = 2 + static_cast<int>(rng.next_u64() % 3); // 2..4
        const int A = 2 + static_cast<int>(rng.next_u64() % 2); // 2..3
        const int N = 1 + static_cast<int>(rng.next_u64() % 3); // 1..3
        GriddedMdp m = random_mdp(rng, S, A, N);
        if (!m.safe(0)) continue; // start in the safe set
        const AugmentedMdp aug(m);
        const BorderCases b = check_border_cases(aug, 0, 0.0);
        if (!(b.v_under + 1e-4 < b.v_bar)) continue;
        const double u = 0.05 + 0.9 * rng.next_uniform();
        const double alpha = b.v_under + u * (b.v_bar - b.v_under);
        if (alpha <= b.v_under || alpha >= b.v_bar) continue;
        return {std::move(m), alpha, b.v_under, b.v_bar};
    }
}

// Piecewise-linear cost of a sweep where its safety column crosses s.
double front_cost_at(const std::vector<ParetoPoint>& rows, double s) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.emplace_back(r.safety, r.cost);
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i].first <= s && s <= pts[i + 1].first) {
            if (pts[i + 1].first == pts[i].first) return pts[i].second;
            const double t = (s - pts[i].first) / (pts[i + 1].first - pts[i].first);
            return pts[i].second + t * (pts[i + 1].second - pts[i].second);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::vector<std::pair<double, double>> lower_hull(const std::vector<ParetoPoint>& rows) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.emplace_back(r.safety, r.cost);
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull[hull.size() - 1];
            if ((b.first - a.first) * (p.second - a.second) -
                    (b.second - a.second) * (p.first - a.first) <=
                0.0)
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
    return hull;
}

double hull_cost_at(const std::vector<std::pair<double, double>>& hull, double s) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
        if (hull[i].first >= s) best = std::min(best, hull[i].second);
        if (i + 1 < hull.size() && hull[i].first < s && s <= hull[i + 1].first) {
            const double t = (s - hull[i].first) / (hull[i + 1].first - hull[i].first);
            best = std::min(best, hull[i].second + t * (hull[i + 1].second - hull[i].second));
        }
    }
    return best;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// --------------------------------------------------------------------------
// Criterion bodies

Check criterion_oracle_optimality() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20260810);
    const double delta_target = 1e-9;
    for (int i = 0; i < 200; ++i) {
        const Instance inst = make_instance(rng);
        const AugmentedMdp aug(inst.mdp);
        const SolveReport rep = solve(aug, 0, inst.alpha, delta_target, 90);
        if (rep.status != SolveStatus::solved) {
            c.fail(fmt("instance %d: status %s", i, to_string(rep.status)));
            break;
        }
        const auto points = enumerate_flag1_performance_set(aug, 0);
        const double optimum = lower_convex_envelope(points, inst.alpha);
        if (rep.safety < inst.alpha - 1e-9)
            c.fail(fmt("instance %d: mixed safety %.12g < alpha %.12g", i, rep.safety,
                       inst.alpha));
        if (rep.cost > optimum + delta_target + 1e-9 || rep.cost < optimum - 1e-9)
            c.fail(fmt("instance %d: cost %.12g vs envelope %.12g", i, rep.cost, optimum));
        if (!c.ok) break;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= 30.0) c.fail(fmt("runtime %.1fs exceeds 30s", secs));
    c.note(fmt("200 instances, %.1fs", secs));
    return c;
}

Check criterion_lambda_zero_collapse() {
    Check c;
    Rng rng(31337);
    for (int i = 0; i < 50; ++i) {
        const GriddedMdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 3),
                                        2 + static_cast<int>(rng.next_u64() % 2),
                                        1 + static_cast<int>(rng.next_u64() % 3));
        const AugmentedMdp aug(m);
        const Solution mc = min_cost_recursion(m);
        const Solution lz = lambda_recursion(aug, 0.0, &mc);
        for (int k = 0; k <= m.horizon && c.ok; ++k)
            for (int s = 0; s < m.num_states && c.ok; ++s)
                for (int flag : {0, 1})
                    if (std::abs(lz.values.at(k, s, flag) - mc.values.at(k, s)) > 1e-12)
                        c.fail(fmt("instance %d entry (%d,%d,%d) differs", i, k, s, flag));
        if (!c.ok) break;
    }
    c.note("50 instances, every entry within 1e-12");
    return c;
}

Check criterion_monotonicity() {
    Check c;
    Rng rng(424242);
    for (int i = 0; i < 50 && c.ok; ++i) {
        const Instance inst = make_instance(rng);
        const AugmentedMdp aug(inst.mdp);
        const Solution mc = min_cost_recursion(inst.mdp);
        const auto start = aug.initial_state(0);
        double prev_v = -std::numeric_limits<double>::infinity();
        double prev_c = prev_v;
        for (int j = 0; j < 20; ++j) {
            const double lambda = 1e-3 * std::pow(10.0, 6.0 * j / 19.0);
            const Solution sol = lambda_recursion(aug, lambda, &mc);
            const double v =
                evaluate_policy_safety(aug, sol.policy).at(0, start.state, start.flag);
            const double cost =
                evaluate_policy_cost(aug, sol.policy).at(0, start.state, start.flag);
            if (v < prev_v - 1e-12 || cost < prev_c - 1e-12) {
                c.fail(fmt("instance %d lambda %.4g: V %.12g->%.12g C %.12g->%.12g", i, lambda,
                           prev_v, v, prev_c, cost));
                break;
            }
            prev_v = v;
            prev_c = cost;
        }
    }
    c.note("50 instances x 20 ascending multipliers");
    return c;
}

Check criterion_certificate_decay(const SolveReport& fishery_report) {
    Check c;
    auto check_history = [&c](const SolveReport& rep, const std::string& tag) {
        const double w0 = rep.lambda_upper_init;
        for (std::size_t m = 0; m < rep.history.size(); ++m) {
            const auto& h = rep.history[m];
            const double scale = std::ldexp(1.0, -static_cast<int>(m));
            if (h.width != w0 * scale) {
                c.fail(fmt("%s iter %zu: width %.17g != %.17g (exact halving)", tag.c_str(), m,
                           h.width, w0 * scale));
                return;
            }
            if (h.delta > 0.25 * scale * w0 + 1e-15) {
                c.fail(fmt("%s iter %zu: delta %.12g above bound %.12g", tag.c_str(), m,
                           h.delta, 0.25 * scale * w0));
                return;
            }
        }
    };
    Rng rng(777);
    int histories = 0;
    for (int i = 0; i < 40 && histories < 25 && c.ok; ++i) {
        const Instance inst = make_instance(rng);
        const AugmentedMdp aug(inst.mdp);
        const SolveReport rep = solve(aug, 0, inst.alpha, 1e-11, 80);
        if (rep.history.size() < 2) continue;
        ++histories;
        check_history(rep, fmt("instance %d", i));
    }
    check_history(fishery_report, "fishery");
    c.note(fmt("%d random histories + fishery, exact halving, delta <= 0.25*2^-M*width0",
               histories));
    return c;
}

Check criterion_boole_conservatism(
    const std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>>& fronts) {
    Check c;
    // Union bound never exceeds exact safety, on random policies.
    Rng rng(90210);
    for (int i = 0; i < 60 && c.ok; ++i) {
        const GriddedMdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 3),
                                        2 + static_cast<int>(rng.next_u64() % 2),
                                        1 + static_cast<int>(rng.next_u64() % 3));
        const AugmentedMdp aug(m);
        MarkovPolicy pol = MarkovPolicy::zeros(PolicyKind::min_cost, m.horizon, m.num_states);
        for (auto& a : pol.actions_flag1) a = static_cast<int>(rng.next_u64() % m.num_actions);
        pol.actions_flag0 = pol.actions_flag1;
        for (int x0 = 0; x0 < m.num_states; ++x0) {
            const auto start = aug.initial_state(x0);
            const double exact =
                evaluate_policy_safety(aug, pol).at(0, start.state, start.flag);
            const double bound = boole_safety_bound(m, pol, x0);
            if (bound > exact + 1e-12) {
                c.fail(fmt("instance %d x0 %d: bound %.12g > exact %.12g", i, x0, bound, exact));
                break;
            }
        }
    }
    if (!c.ok) return c;

    // The exact front weakly dominates both baseline variants pointwise.
    const auto& exact_rows = fronts[0].second;
    const auto he = lower_hull(exact_rows);
    for (std::size_t f = 1; f < fronts.size(); ++f) {
        const auto& rows = fronts[f].second;
        const auto hb = lower_hull(rows);
        double lo = 0.0, hi = 1.0;
        for (const auto& hull : {he, hb}) {
            lo = std::max(lo, hull.front().first);
            hi = std::min(hi, hull.back().first);
        }
        for (int i = 0; i <= 100; ++i) {
            const double s = lo + (hi - lo) * i / 100.0;
            const double ce = hull_cost_at(he, s);
            const double cb = hull_cost_at(hb, s);
            if (ce > cb * (1.0 + 1e-9) + 1e-9) {
                c.fail(fmt("front %s at safety %.4f: exact %.6g > baseline %.6g",
                           to_string(fronts[f].first), s, ce, cb));
                return c;
            }
        }
    }
    c.note("60 random instances + pointwise front dominance on the shared range");
    return c;
}

Check criterion_fishery(const GriddedMdp& fishery, int x0, const SolveReport& exact_rep,
                        const SolveReport& boole_rep) {
    Check c;
    const double n_k = fishery.horizon * fishery.cost_shift;
    const double catch_exact = n_k - exact_rep.cost;
    const double catch_boole = n_k - boole_rep.cost;
    if (exact_rep.status != SolveStatus::solved) c.fail("exact solve did not converge");
    if (boole_rep.status != SolveStatus::solved) c.fail("baseline solve did not converge");
    if (!(catch_exact >= 123.0 && catch_exact <= 137.0))
        c.fail(fmt("exact catch %.2f outside [123, 137]", catch_exact));
    const double gap = (catch_exact - catch_boole) / catch_exact;
    if (!(catch_boole < catch_exact) || gap < 0.03)
        c.fail(fmt("baseline catch %.2f not at least 3%% below exact %.2f", catch_boole,
                   catch_exact));
    c.note(fmt("catch %.2f vs baseline %.2f (gap %.1f%%)", catch_exact, catch_boole,
               100.0 * gap));
    return c;
}

Check criterion_unicycle(const std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>>&
                             fronts,
                         const SolveReport& solve_b) {
    Check c;
    const double ce = front_cost_at(fronts[0].second, 0.1);
    const double cx = front_cost_at(fronts[1].second, 0.1);
    const double cb = front_cost_at(fronts[2].second, 0.1);
    if (std::isnan(ce) || std::isnan(cx) || std::isnan(cb)) {
        c.fail("a front does not cross safety 0.1");
        return c;
    }
    if (!(ce < cx && cx < cb))
        c.fail(fmt("ordering violated: %.1f, %.1f, %.1f", ce, cx, cb));
    const double r1 = ce / cx, r1_paper = 1522.0 / 3330.0;
    const double r2 = cx / cb, r2_paper = 3330.0 / 4113.0;
    if (std::abs(r1 - r1_paper) > 0.15 * r1_paper)
        c.fail(fmt("exact/baseline ratio %.4f outside %.4f +-15%%", r1, r1_paper));
    if (std::abs(r2 - r2_paper) > 0.15 * r2_paper)
        c.fail(fmt("baseline eval ratio %.4f outside %.4f +-15%%", r2, r2_paper));
    if (solve_b.status != SolveStatus::solved || solve_b.iterations > 30)
        c.fail(fmt("alpha=0.6 solve: %s in %d iterations (need <= 30)",
                   to_string(solve_b.status), solve_b.iterations));
    c.note(fmt("costs@0.1 %.0f/%.0f/%.0f ratios %.3f, %.3f; solve in %d iters", ce, cx, cb, r1,
               r2, solve_b.iterations));
    return c;
}

Check criterion_monte_carlo() {
    Check c;
    Rng rng(5150);
    int tested = 0;
    for (int i = 0; i < 40 && tested < 10 && c.ok; ++i) {
        const Instance inst = make_instance(rng);
        const AugmentedMdp aug(inst.mdp);
        const SolveReport rep = solve(aug, 0, inst.alpha, 1e-9, 80);
        if (rep.status != SolveStatus::solved || !rep.policy) continue;
        ++tested;
        const int n = 10000;
        const RolloutBatch batch = rollout(inst.mdp, *rep.policy, 0, n, 1000 + i);
        const EmpiricalStats st = empirical_stats(batch);
        const double v = rep.safety;
        const double se_v = std::sqrt(std::max(v * (1.0 - v), 0.0) / n);
        if (std::abs(st.safety_fraction - v) > 4.0 * se_v + 1e-12)
            c.fail(fmt("policy %d: empirical safety %.4f vs %.4f (4se %.4f)", tested,
                       st.safety_fraction, v, 4.0 * se_v));
        const double p = rep.policy->p_over;
        const double se_p = std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
        if (std::abs(st.over_fraction - p) > 4.0 * se_p + 1e-12)
            c.fail(fmt("policy %d: over fraction %.4f vs p %.4f", tested, st.over_fraction, p));
    }
    if (tested < 10) c.fail(fmt("only %d solved policies available", tested));
    c.note("10 solved policies x 10^4 rollouts, 4 binomial std errors");
    return c;
}

Check criterion_model_hygiene(const GriddedMdp& fishery, const GriddedMdp& unicycle_b) {
    Check c;
    for (const GriddedMdp* m : {&fishery, &unicycle_b}) {
        for (int s = 0; s < m->num_states && c.ok; ++s)
            for (int a = 0; a < m->num_actions; ++a)
                if (std::abs(m->kernel.row_sum(s, a) - 1.0) > 1e-9) {
                    c.fail(fmt("row (%d,%d) sums to %.17g", s, a, m->kernel.row_sum(s, a)));
                    break;
                }
    }
    if (!c.ok) return c;

    // Byte-exact rebuild: the Monte-Carlo fishery build serializes identically.
    const GriddedMdp again = build_mdp_from_spec(build_fishery());
    if (model_to_json(fishery).dump() != model_to_json(again).dump())
        c.fail("fishery rebuild is not byte-identical");
    // The analytic build is compared entry-wise (its serialized form is large).
    const GriddedMdp ub2 = build_mdp_from_spec(build_unicycle('b'));
    for (int s = 0; s < unicycle_b.num_states && c.ok; ++s)
        for (int a = 0; a < unicycle_b.num_actions; ++a) {
            const auto r1 = unicycle_b.kernel.row(s, a);
            const auto r2 = ub2.kernel.row(s, a);
            if (r1.size() != r2.size()) {
                c.fail(fmt("unicycle rebuild row (%d,%d) differs", s, a));
                break;
            }
            for (std::size_t k = 0; k < r1.size(); ++k)
                if (r1[k].next != r2[k].next || r1[k].p != r2[k].p) {
                    c.fail(fmt("unicycle rebuild row (%d,%d) differs", s, a));
                    break;
                }
        }
    c.note("row sums within 1e-9; rebuilds bit-identical");
    return c;
}

Check criterion_terminal_flag_identity() {
    Check c;
    Rng rng(60601);
    for (int i = 0; i < 40 && c.ok; ++i) {
        const GriddedMdp m = random_mdp(rng, 2 + static_cast<int>(rng.next_u64() % 3),
                                        2 + static_cast<int>(rng.next_u64() % 2),
                                        1 + static_cast<int>(rng.next_u64() % 3));
        const AugmentedMdp aug(m);
        MarkovPolicy pol = MarkovPolicy::zeros(PolicyKind::min_cost, m.horizon, m.num_states);
        for (auto& a : pol.actions_flag1) a = static_cast<int>(rng.next_u64() % m.num_actions);
        for (auto& a : pol.actions_flag0) a = static_cast<int>(rng.next_u64() % m.num_actions);
        for (int x0 = 0; x0 < m.num_states; ++x0) {
            const auto start = aug.initial_state(x0);
            const double e_flag =
                evaluate_policy_safety(aug, pol).at(0, start.state, start.flag);
            const double tree = trajectory_tree(m, pol, x0).prob_safe;
            if (std::abs(e_flag - tree) > 1e-12) {
                c.fail(fmt("instance %d x0 %d: E[b_N] %.15g vs tree %.15g", i, x0, e_flag,
                           tree));
                break;
            }
        }
    }
    c.note("40 instances, every start state, within 1e-12");
    return c;
}

} // namespace

int main() {
    std::printf("acceptance suite\n");

    // Shared heavyweight artifacts.
    const GriddedMdp fishery = build_mdp_from_spec(build_fishery());
    const int fishery_x0 = fishery.grid_meta->locate(std::vector<double>{40.0});
    const AugmentedMdp fishery_aug(fishery);
    const SolveReport fishery_exact = solve(fishery_aug, fishery_x0, 0.75, 1e-6, 60);
    const SolveReport fishery_boole =
        solve_boole(fishery, fishery_x0, 0.75, 1e-6, 60, BooleEval::exact);

    const GriddedMdp unicycle_b = build_mdp_from_spec(build_unicycle('b'));
    const int ub_x0 = unicycle_b.grid_meta->locate(std::vector<double>{19.0, 19.0});
    std::vector<double> lambdas;
    for (int i = 0; i < 100; ++i)
        lambdas.push_back(100.0 * std::exp(std::log(1e4) * i / 99.0)); // [1e2, 1e6]
    const auto fronts = pareto_sweep_all(
        unicycle_b, ub_x0, lambdas,
        {ParetoMethod::exact, ParetoMethod::boole_policy_exact_eval,
         ParetoMethod::boole_policy_boole_eval});
    const SolveReport ub_solve = solve(AugmentedMdp(unicycle_b), ub_x0, 0.6, 1e-6, 60);

    struct Entry {
        int id;
        const char* name;
        std::function<Check()> run;
    };
    const std::vector<Entry> criteria = {
        {1, "oracle optimality on 200 random instances", criterion_oracle_optimality},
        {2, "lambda=0 collapse to min cost", criterion_lambda_zero_collapse},
        {3, "safety and cost monotone in the multiplier", criterion_monotonicity},
        {4, "certificate decay and exact interval halving",
         [&] { return criterion_certificate_decay(fishery_exact); }},
        {5, "union bound conservatism and front dominance",
         [&] { return criterion_boole_conservatism(fronts); }},
        {6, "fishery catch reproduction",
         [&] { return criterion_fishery(fishery, fishery_x0, fishery_exact, fishery_boole); }},
        {7, "unicycle variant B method ordering and convergence",
         [&] { return criterion_unicycle(fronts, ub_solve); }},
        {8, "Monte-Carlo consistency of solved policies", criterion_monte_carlo},
        {9, "model hygiene and byte-exact rebuilds",
         [&] { return criterion_model_hygiene(fishery, unicycle_b); }},
        {10, "terminal flag expectation equals trajectory safety",
         criterion_terminal_flag_identity},
    };

    int failures = 0;
    for (const auto& e : criteria) {
        const Check c = e.run();
        std::printf("[%s] criterion %d: %s%s%s\n", c.ok ? "PASS" : "FAIL", e.id, e.name,
                    c.detail.empty() ? "" : " - ", c.detail.c_str());
        std::fflush(stdout);
        if (!c.ok) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
