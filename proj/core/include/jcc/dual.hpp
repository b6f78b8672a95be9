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

#include "jcc/dp.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jcc {

/// Two deterministic Markov policies plus the probability of sampling the
/// safer one once at time 0. Safety and cost of the mixture interpolate
/// linearly between the members.
struct MixedPolicy {
    MarkovPolicy over;  // bracket policy with safety >= alpha
    MarkovPolicy under; // bracket policy with safety <= alpha
    double p_over = 0.0;

    double mixed(double v_over, double v_under) const {
        return p_over * v_over + (1.0 - p_over) * v_under;
    }
};

/// Outcome of the pre-solve feasibility / triviality screen.
///
/// v_bar, c_bar: safety and cost of the max-safety policy; v_under, c_under:
/// safety and cost of the min-cost policy, all at the initial augmented state.
struct BorderCases {
    enum class Outcome { infeasible, trivial, proceed };
    Outcome outcome;
    double c_bar, v_bar;
    double c_under, v_under;
    Solution min_cost;   // retained: seeds the flag=0 block and the under bracket
    Solution max_safety;
};

BorderCases check_border_cases(const AugmentedMdp& aug, int x0, double alpha);

/// Suboptimality bounds available at a border case: the cost excess of the
/// lambda-optimal policy over the min-cost policy is at most
/// lambda * (V^pi - V_under); the safety shortfall to the max-safety policy
/// is at most (C_bar - C^pi) / lambda. Requires lambda > 0.
std::pair<double, double> border_case_bounds(double lambda, double c_pi, double v_pi,
                                             double c_under, double v_under, double c_bar,
                                             double v_bar);

/// Upper end of the initial multiplier bracket; the policy solved at this
/// multiplier is guaranteed at least alpha-safe. The lower end is always 0.
double initial_lambda_upper(double c_bar, double c_under, double v_bar, double alpha);

/// Probability on the safer bracket policy so the mixture hits alpha exactly:
/// p = (alpha - V_under) / (V_over - V_under), clamped to [0,1].
double mixing_probability(double v_under, double v_over, double alpha);

/// Computable optimality gap of the mixed policy:
/// p (1-p) (lambda_hi - lambda_lo) (V_over - V_under).
double suboptimality_certificate(double p, double lambda_lo, double lambda_hi,
                                 double v_under, double v_over);

enum class SolveStatus { infeasible, trivial, solved, max_iters };

/// One bisection record. Entry M is taken after M interval halvings, so
/// width == (lambda_hi_init - 0) * 2^-M exactly and
/// delta <= 0.25 * 2^-M * lambda_hi_init.
struct IterationRecord {
    int index;         // M
    double lambda;     // multiplier solved to reach this bracket state
    double v_lambda;   // safety of that policy (per the active evaluation mode)
    double c_lambda;   // cost of that policy
    double lambda_lo;
    double lambda_hi;
    double width;      // lambda_hi - lambda_lo, tracked exactly
    double p_over;
    double delta;
};

struct SolveReport {
    SolveStatus status = SolveStatus::infeasible;
    double alpha = 0.0;
    double delta_target = 0.0;
    double lambda_lower = 0.0; // multiplier that produced the under policy
    double lambda_upper = 0.0; // multiplier that produced the over policy
    double lambda_upper_init = 0.0;
    int iterations = 0; // inner DP solves performed (initialization included)
    std::optional<MixedPolicy> policy;
    double cost = 0.0;   // mixed expected cost at the initial augmented state
    double safety = 0.0; // mixed safety; equals alpha on a non-degenerate bracket
    double delta = 0.0;  // certificate at return
    std::vector<IterationRecord> history;
};

/// Joint chance constrained solve: border-case screen, initial bracket from
/// the border values, bisection on the multiplier with one penalized DP per
/// step, and a two-policy mixture hitting alpha exactly. Returns when the
/// certificate drops to delta_target or max_iters inner solves were spent.
SolveReport solve(const AugmentedMdp& aug, int x0, double alpha, double delta_target,
                  int max_iters = 60);

enum class BooleEval { exact, bound };

/// Same bisection driver with the per-step-penalty baseline recursion as the
/// inner solver. Safety of candidate policies is evaluated exactly
/// (recursion on the augmented chain) or through the union bound, per eval.
/// The union-bound variant may report infeasibility on problems the exact
/// method solves.
SolveReport solve_boole(const GriddedMdp& mdp, int x0, double alpha, double delta_target,
                        int max_iters = 60, BooleEval eval = BooleEval::exact);

enum class ParetoMethod { exact, boole_policy_exact_eval, boole_policy_boole_eval };

struct ParetoPoint {
    double lambda;
    double safety;
    double cost;
};

/// Safety/cost trade-off curve: one inner solve per multiplier, evaluating
/// the resulting deterministic policy under the chosen method. Output is
/// sorted by lambda; with the exact method both columns are non-decreasing.
std::vector<ParetoPoint> pareto_sweep(const GriddedMdp& mdp, int x0,
                                      std::vector<double> lambdas, ParetoMethod method);

/// Several methods over one shared pass (the two baseline evaluations reuse
/// each multiplier's inner solve).
std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>> pareto_sweep_all(
    const GriddedMdp& mdp, int x0, std::vector<double> lambdas,
    const std::vector<ParetoMethod>& methods);

/// CSV rows `lambda,safety,cost,method` for one or more sweeps.
std::string pareto_csv(const std::vector<std::pair<ParetoMethod, std::vector<ParetoPoint>>>& sweeps);

const char* to_string(SolveStatus status);
const char* to_string(ParetoMethod method);

} // namespace jcc
