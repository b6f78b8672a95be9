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

#include "jcc/dual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace jcc {

namespace {

// Doublings of the initial upper multiplier tolerated before giving up on
// bracketing (cannot trigger for the exact recursion; load-bearing for the
// union-bound baseline, where the initial bound has no guarantee).
constexpr int kMaxDoublings = 64;

struct Candidate {
    MarkovPolicy policy;
    double v = 0.0;
    double c = 0.0;
    double lambda = 0.0;
};

struct Inner {
    std::function<Candidate(double)> solve_at;
};

// Policy minimizing the expected number of unsafe time steps; its value at
// the start state gives the best achievable union-bound safety.
Solution min_unsafe_count(const GriddedMdp& mdp) {
    const int N = mdp.horizon;
    const int S = mdp.num_states;
    const int A = mdp.num_actions;
    Solution sol{ValueTable::zeros(ValueKind::boole, N, S, 1),
                 MarkovPolicy::zeros(PolicyKind::boole, N, S)};
    for (int s = 0; s < S; ++s) sol.values.at(N, s, 0) = mdp.safe(s) ? 0.0 : 1.0;
    for (int k = N - 1; k >= 0; --k) {
        const double* next = sol.values.slice(k + 1, 0);
        double* out = sol.values.slice(k, 0);
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                double acc = 0.0;
                for (const auto& en : mdp.kernel.row(s, a)) acc += en.p * next[en.next];
                if (a == 0 || acc < best) {
                    best = acc;
                    best_a = a;
                }
            }
            out[s] = (mdp.safe(s) ? 0.0 : 1.0) + best;
            sol.policy.action_ref(k, s, 1) = best_a;
            sol.policy.action_ref(k, s, 0) = best_a;
        }
    }
    return sol;
}

SolveReport run_bisection(const Inner& inner, Candidate under, double lambda_hi_init,
                          double alpha, double delta_target, int max_iters,
                          SolveReport report) {
    report.alpha = alpha;
    report.delta_target = delta_target;

    // Materialize the over end of the bracket at the initial upper multiplier.
    Candidate over = inner.solve_at(lambda_hi_init);
    report.iterations = 1;
    int doublings = 0;
    while (over.v < alpha && doublings < kMaxDoublings) {
        lambda_hi_init *= 2.0;
        over = inner.solve_at(lambda_hi_init);
        ++report.iterations;
        ++doublings;
    }
    report.lambda_upper_init = lambda_hi_init;
    if (over.v < alpha) {
        report.status = SolveStatus::infeasible;
        report.cost = over.c;
        report.safety = over.v;
        return report;
    }

    double lambda_lo = 0.0;
    double width = lambda_hi_init; // halved exactly each bisection step
    Candidate last = over;

    double p = 0.0, delta = 0.0;
    for (int m = 0;; ++m) {
        if (over.v - under.v <= 0.0) {
            // Degenerate bracket: both ends equally safe, take the cheaper one.
            p = under.c <= over.c ? 0.0 : 1.0;
            delta = 0.0;
            report.history.push_back(
                {m, last.lambda, last.v, last.c, lambda_lo, lambda_lo + width, width, p, delta});
            report.status = SolveStatus::solved;
            break;
        }
        p = mixing_probability(under.v, over.v, alpha);
        delta = p * (1.0 - p) * width * (over.v - under.v);
        report.history.push_back(
            {m, last.lambda, last.v, last.c, lambda_lo, lambda_lo + width, width, p, delta});
        if (delta <= delta_target) {
            report.status = SolveStatus::solved;
            break;
        }
        if (report.iterations >= max_iters) {
            report.status = SolveStatus::max_iters;
            break;
        }
        const double lambda = lambda_lo + 0.5 * width;
        last = inner.solve_at(lambda);
        ++report.iterations;
        if (last.v <= alpha) { // exact tie counts as the under side
            under = last;
            lambda_lo = lambda;
        } else {
            over = last;
        }
        width *= 0.5;
    }

    report.lambda_lower = under.lambda;
    report.lambda_upper = over.lambda;
    report.policy = MixedPolicy{std::move(over.policy), std::move(under.policy), p};
    report.cost = p * over.c + (1.0 - p) * under.c;
    report.safety = p * over.v + (1.0 - p) * under.v;
    report.delta = delta;
    return report;
}

} // namespace

BorderCases check_border_cases(const AugmentedMdp& aug, int x0, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0,1]");
    const AugState start = aug.initial_state(x0);

    BorderCases out;
    out.min_cost = min_cost_recursion(aug.base());
    out.max_safety = max_safety_recursion(aug.base());

    out.c_under = out.min_cost.values.at(0, start.state, 0);
    out.v_under =
        evaluate_policy_safety(aug, out.min_cost.policy).at(0, start.state, start.flag);
    out.v_bar = start.flag == 1 ? out.max_safety.values.at(0, start.state, 0) : 0.0;
    out.c_bar = evaluate_policy_cost(aug, out.max_safety.policy).at(0, start.state, start.flag);

    if (out.v_bar < alpha)
        out.outcome = BorderCases::Outcome::infeasible;
    else if (out.v_under >= alpha)
        out.outcome = BorderCases::Outcome::trivial;
    else
        out.outcome = BorderCases::Outcome::proceed;
    return out;
}

std::pair<double, double> border_case_bounds(double lambda, double c_pi, double v_pi,
                                             double c_under, double v_under, double c_bar,
                                             double v_bar) {
    (void)c_under;
    (void)v_bar;
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    const double cost_gap_bound = lambda * (v_pi - v_under);
    const double safety_gap_bound = (c_bar - c_pi) / lambda;
    return {cost_gap_bound, safety_gap_bound};
}

double initial_lambda_upper(double c_bar, double c_under, double v_bar, double alpha) {
    if (!(v_bar > alpha))
        throw std::invalid_argument("initial multiplier bound requires v_bar > alpha");
    if (!std::isfinite(c_bar)) throw std::invalid_argument("c_bar must be finite");
    return (c_bar - c_under) / (v_bar - alpha);
}

double mixing_probability(double v_under, double v_over, double alpha) {
    if (!(v_over > v_under)) throw std::invalid_argument("degenerate bracket: v_over <= v_under");
    const double p = (alpha - v_under) / (v_over - v_under);
    return std::clamp(p, 0.0, 1.0);
}

double suboptimality_certificate(double p, double lambda_lo, double lambda_hi, double v_under,
                                 double v_over) {
    return p * (1.0 - p) * (lambda_hi - lambda_lo) * (v_over - v_under);
}

SolveReport solve(const AugmentedMdp& aug, int x0, double alpha, double delta_target,
                  int max_iters) {
    if (!(delta_target > 0.0)) throw std::invalid_argument("delta_target must be > 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    const AugState start = aug.initial_state(x0);
    BorderCases border = check_border_cases(aug, x0, alpha);

    SolveReport report;
    report.alpha = alpha;
    report.delta_target = delta_target;
    if (border.outcome == BorderCases::Outcome::infeasible) {
        report.status = SolveStatus::infeasible;
        report.cost = border.c_bar;
        report.safety = border.v_bar;
        return report;
    }
    if (border.outcome == BorderCases::Outcome::trivial) {
        report.status = SolveStatus::trivial;
        report.policy = MixedPolicy{border.min_cost.policy, border.min_cost.policy, 0.0};
        report.cost = border.c_under;
        report.safety = border.v_under;
        return report;
    }

    const double lambda_hi = initial_lambda_upper(border.c_bar, border.c_under,
                                                  border.v_bar, alpha);
    Candidate under{border.min_cost.policy, border.v_under, border.c_under, 0.0};
    if (lambda_hi == 0.0) {
        // Max safety at minimum cost: mix the two border policies to alpha.
        const double p = mixing_probability(border.v_under, border.v_bar, alpha);
        report.status = SolveStatus::solved;
        report.policy = MixedPolicy{border.max_safety.policy, border.min_cost.policy, p};
        report.cost = p * border.c_bar + (1.0 - p) * border.c_under;
        report.safety = p * border.v_bar + (1.0 - p) * border.v_under;
        report.delta = 0.0;
        return report;
    }

    const Solution* min_cost = &border.min_cost;
    Inner inner{[&aug, &start, min_cost](double lambda) {
        Solution sol = lambda_recursion(aug, lambda, min_cost);
        Candidate cand;
        cand.v = evaluate_policy_safety(aug, sol.policy).at(0, start.state, start.flag);
        cand.c = evaluate_policy_cost(aug, sol.policy).at(0, start.state, start.flag);
        cand.lambda = lambda;
        cand.policy = std::move(sol.policy);
        return cand;
    }};
    return run_bisection(inner, std::move(under), lambda_hi, alpha, delta_target, max_iters,
                         std::move(report));
}

SolveReport solve_boole(const GriddedMdp& mdp, int x0, double alpha, double delta_target,
                        int max_iters, BooleEval eval) {
    if (!(delta_target > 0.0)) throw std::invalid_argument("delta_target must be > 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    AugmentedMdp aug(mdp);
    const AugState start = aug.initial_state(x0);
    BorderCases border = check_border_cases(aug, x0, alpha);

    const auto mode_safety = [&](const MarkovPolicy& policy) {
        return eval == BooleEval::exact
                   ? evaluate_policy_safety(aug, policy).at(0, start.state, start.flag)
                   : boole_safety_bound(mdp, policy, x0);
    };

    SolveReport report;
    report.alpha = alpha;
    report.delta_target = delta_target;
    if (border.outcome == BorderCases::Outcome::infeasible) {
        report.status = SolveStatus::infeasible;
        report.cost = border.c_bar;
        report.safety = border.v_bar;
        return report;
    }
    const double v_under_mode = mode_safety(border.min_cost.policy);
    if (v_under_mode >= alpha) {
        report.status = SolveStatus::trivial;
        report.policy = MixedPolicy{border.min_cost.policy, border.min_cost.policy, 0.0};
        report.cost = border.c_under;
        report.safety = v_under_mode;
        return report;
    }

    // The safest policy under the union bound minimizes the expected number
    // of unsafe steps; it anchors the initial upper multiplier the same way
    // the max-safety policy does for the exact method.
    Solution count_min = min_unsafe_count(mdp);
    const double s_bar = mode_safety(count_min.policy);
    const double c_cm = evaluate_policy_cost(aug, count_min.policy).at(0, start.state, start.flag);
    double lambda_hi;
    if (s_bar > alpha) {
        lambda_hi = initial_lambda_upper(c_cm, border.c_under, s_bar, alpha);
    } else if (eval == BooleEval::bound) {
        // No policy satisfies the union bound at this alpha.
        report.status = SolveStatus::infeasible;
        report.cost = c_cm;
        report.safety = s_bar;
        return report;
    } else {
        lambda_hi = initial_lambda_upper(border.c_bar, border.c_under, border.v_bar, alpha);
    }
    if (lambda_hi == 0.0) lambda_hi = 1.0;

    Candidate under{border.min_cost.policy, v_under_mode, border.c_under, 0.0};
    Inner inner{[&](double lambda) {
        Solution sol = boole_recursion(mdp, lambda);
        Candidate cand;
        cand.v = mode_safety(sol.policy);
        cand.c = evaluate_policy_cost(aug, sol.policy).at(0, start.state, start.flag);
        cand.lambda = lambda;
        cand.policy = std::move(sol.policy);
        return cand;
    }};
    return run_bisection(inner, std::move(under), lambda_hi, alpha, delta_target, max_iters,
                         std::move(report));
}

namespace {

std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>> sweep_impl(
    const GriddedMdp& mdp, int x0, std::vector<double> lambdas,
    const std::vector<ParetoMethod>& methods) {
    if (lambdas.empty()) throw std::invalid_argument("lambdas must be non-empty");
    for (double l : lambdas)
        if (!(l >= 0.0)) throw std::invalid_argument("lambdas must be non-negative");
    std::sort(lambdas.begin(), lambdas.end());

    AugmentedMdp aug(mdp);
    const AugState start = aug.initial_state(x0);
    const bool want_exact =
        std::find(methods.begin(), methods.end(), ParetoMethod::exact) != methods.end();
    const bool want_bx = std::find(methods.begin(), methods.end(),
                                   ParetoMethod::boole_policy_exact_eval) != methods.end();
    const bool want_bb = std::find(methods.begin(), methods.end(),
                                   ParetoMethod::boole_policy_boole_eval) != methods.end();

    Solution min_cost = min_cost_recursion(mdp);
    std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>> out;
    for (ParetoMethod m : methods) out.emplace_back(m, std::vector<ParetoPoint>{});
    auto rows_of = [&](ParetoMethod m) -> std::vector<ParetoPoint>& {
        for (auto& [mm, rows] : out)
            if (mm == m) return rows;
        throw std::logic_error("method not requested");
    };

    for (double lambda : lambdas) {
        if (want_exact) {
            Solution sol = lambda_recursion(aug, lambda, &min_cost);
            const double v = evaluate_policy_safety(aug, sol.policy).at(0, start.state, start.flag);
            const double c = evaluate_policy_cost(aug, sol.policy).at(0, start.state, start.flag);
            rows_of(ParetoMethod::exact).push_back({lambda, v, c});
        }
        if (want_bx || want_bb) {
            Solution sol = boole_recursion(mdp, lambda);
            const double c = evaluate_policy_cost(aug, sol.policy).at(0, start.state, start.flag);
            if (want_bx) {
                const double v =
                    evaluate_policy_safety(aug, sol.policy).at(0, start.state, start.flag);
                rows_of(ParetoMethod::boole_policy_exact_eval).push_back({lambda, v, c});
            }
            if (want_bb) {
                const double v = boole_safety_bound(mdp, sol.policy, x0);
                rows_of(ParetoMethod::boole_policy_boole_eval).push_back({lambda, v, c});
            }
        }
    }
    return out;
}

} // namespace

std::vector<ParetoPoint> pareto_sweep(const GriddedMdp& mdp, int x0, std::vector<double> lambdas,
                                      ParetoMethod method) {
    return sweep_impl(mdp, x0, std::move(lambdas), {method})[0].second;
}

std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>> pareto_sweep_all(
    const GriddedMdp& mdp, int x0, std::vector<double> lambdas,
    const std::vector<ParetoMethod>& methods) {
    return sweep_impl(mdp, x0, std::move(lambdas), methods);
}

std::string pareto_csv(
    const std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>>& sweeps) {
    std::string out = "lambda,safety,cost,method\n";
    char buf[128];
    for (const auto& [method, rows] : sweeps)
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s\n", r.lambda, r.safety, r.cost,
                          to_string(method));
            out += buf;
        }
    return out;
}

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::trivial: return "trivial";
        case SolveStatus::solved: return "solved";
        case SolveStatus::max_iters: return "max-iters";
    }
    return "?";
}

const char* to_string(ParetoMethod method) {
    switch (method) {
        case ParetoMethod::exact: return "exact";
        case ParetoMethod::boole_policy_exact_eval: return "boole-exact-eval";
        case ParetoMethod::boole_policy_boole_eval: return "boole-bound-eval";
    }
    return "?";
}

} // namespace jcc
