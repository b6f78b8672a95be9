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
#include "jcc/model.hpp"
#include "jcc/serialize.hpp"
#include "jcc/sim.hpp"
#include "jcc/threading.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using jcc::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // config or I/O failure
constexpr int kExitInfeasible = 2;
constexpr int kExitMaxIters = 3;

struct ExperimentConfig {
    std::string builtin;   // unicycle-a | unicycle-b | fishery
    std::string spec_file;
    std::string model_file;
    double alpha = 0.9;
    double delta = 1e-6;
    int max_iters = 60;
    std::string method = "exact";     // exact | boole | all (pareto only)
    std::string boole_eval = "exact"; // exact | bound
    std::string lambdas;              // csv or logrange:lo:hi:n
    int rollouts = 150;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 0;
    int x0_index = -1;
    std::vector<double> x0_coords;
    std::string policy_file;
    std::string report_file;
    bool continuous = false;
    bool dense_kernel = false;
};

struct LoadedModel {
    jcc::GriddedMdp mdp;
    std::optional<jcc::ContinuousSystemSpec> spec;
    int x0 = -1;
};

jcc::ContinuousSystemSpec builtin_spec(const std::string& name) {
    if (name == "unicycle-a") return jcc::build_unicycle('a');
    if (name == "unicycle-b") return jcc::build_unicycle('b');
    if (name == "fishery") return jcc::build_fishery();
    throw std::invalid_argument("unknown builtin '" + name + "'");
}

LoadedModel load_model(const ExperimentConfig& cfg) {
    const int sources = int(!cfg.builtin.empty()) + int(!cfg.spec_file.empty()) +
                        int(!cfg.model_file.empty());
    if (sources != 1)
        throw std::invalid_argument(
            "exactly one model source required (--builtin, --spec or --model)");

    LoadedModel out;
    if (!cfg.model_file.empty()) {
        out.mdp = jcc::model_from_json(jcc::read_json(cfg.model_file));
    } else {
        out.spec = cfg.builtin.empty() ? jcc::spec_from_json(jcc::read_json(cfg.spec_file))
                                       : builtin_spec(cfg.builtin);
        out.mdp = jcc::build_mdp_from_spec(*out.spec);
    }

    if (cfg.x0_index >= 0) {
        out.x0 = cfg.x0_index;
    } else if (!cfg.x0_coords.empty()) {
        if (!out.mdp.grid_meta)
            throw std::invalid_argument("--x0-coords needs a model with grid metadata");
        out.x0 = out.mdp.grid_meta->locate(cfg.x0_coords);
    } else if (out.spec && !out.spec->initial_state.empty() && out.mdp.grid_meta) {
        out.x0 = out.mdp.grid_meta->locate(out.spec->initial_state);
    } else {
        throw std::invalid_argument("no initial state: pass --x0 or --x0-coords");
    }
    if (out.x0 < 0 || out.x0 >= out.mdp.num_states)
        throw std::invalid_argument("initial state index out of range");
    return out;
}

std::vector<double> parse_lambdas(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("--lambdas required");
    std::vector<double> out;
    if (text.rfind("logrange:", 0) == 0) {
        double lo = 0.0, hi = 0.0;
        int n = 0;
        if (std::sscanf(text.c_str(), "logrange:%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 2 ||
            !(lo > 0.0) || !(hi > lo))
            throw std::invalid_argument("bad logrange spec '" + text + "'");
        const double step = std::log(hi / lo) / (n - 1);
        for (int i = 0; i < n; ++i) out.push_back(lo * std::exp(step * i));
        return out;
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(std::stod(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

// Reward-shifted models (the fishery) report the recovered reward total
// alongside the minimized cost; only meaningful with a zero terminal cost.
void attach_reward(json& j, const jcc::GriddedMdp& mdp, double cost) {
    if (mdp.cost_shift > 0.0) {
        j["cost_shift"] = mdp.cost_shift;
        j["reward_total"] = mdp.horizon * mdp.cost_shift - cost;
    }
}

int status_exit_code(jcc::SolveStatus status) {
    switch (status) {
        case jcc::SolveStatus::solved:
        case jcc::SolveStatus::trivial: return kExitOk;
        case jcc::SolveStatus::infeasible: return kExitInfeasible;
        case jcc::SolveStatus::max_iters: return kExitMaxIters;
    }
    return kExitError;
}

int cmd_build_model(const ExperimentConfig& cfg) {
    LoadedModel loaded = load_model(cfg);
    fs::create_directories(cfg.out_dir);
    jcc::write_json_atomic(fs::path(cfg.out_dir) / "model.json",
                           jcc::model_to_json(loaded.mdp, cfg.dense_kernel));
    std::printf("model %d states %d actions horizon %d -> %s\n", loaded.mdp.num_states,
                loaded.mdp.num_actions, loaded.mdp.horizon,
                (fs::path(cfg.out_dir) / "model.json").c_str());
    return kExitOk;
}

int cmd_solve(const ExperimentConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw std::invalid_argument("--alpha must be in [0,1]");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("--delta must be > 0");
    if (cfg.max_iters < 1) throw std::invalid_argument("--max-iters must be >= 1");

    LoadedModel loaded = load_model(cfg);
    jcc::SolveReport report;
    if (cfg.method == "exact") {
        jcc::AugmentedMdp aug(loaded.mdp);
        report = jcc::solve(aug, loaded.x0, cfg.alpha, cfg.delta, cfg.max_iters);
    } else if (cfg.method == "boole") {
        const auto eval = cfg.boole_eval == "bound" ? jcc::BooleEval::bound
                                                    : jcc::BooleEval::exact;
        report = jcc::solve_boole(loaded.mdp, loaded.x0, cfg.alpha, cfg.delta, cfg.max_iters,
                                  eval);
    } else {
        throw std::invalid_argument("--method must be exact or boole");
    }

    fs::create_directories(cfg.out_dir);
    std::string over_name, under_name;
    if (report.policy) {
        over_name = "policy_over.json";
        under_name = "policy_under.json";
        jcc::write_json_atomic(fs::path(cfg.out_dir) / over_name,
                               jcc::policy_to_json(report.policy->over));
        jcc::write_json_atomic(fs::path(cfg.out_dir) / under_name,
                               jcc::policy_to_json(report.policy->under));
    }
    json j = jcc::report_to_json(report, over_name, under_name);
    j["x0"] = loaded.x0;
    attach_reward(j, loaded.mdp, report.cost);
    jcc::write_json_atomic(fs::path(cfg.out_dir) / "report.json", j);

    std::printf("%s %.6g %.6g %.3g %d\n", jcc::to_string(report.status), report.cost,
                report.safety, report.delta, report.iterations);
    return status_exit_code(report.status);
}

int cmd_pareto(const ExperimentConfig& cfg) {
    LoadedModel loaded = load_model(cfg);
    const std::vector<double> lambdas = parse_lambdas(cfg.lambdas);

    std::vector<jcc::ParetoMethod> methods;
    if (cfg.method == "exact") {
        methods = {jcc::ParetoMethod::exact};
    } else if (cfg.method == "boole") {
        methods = {cfg.boole_eval == "bound" ? jcc::ParetoMethod::boole_policy_boole_eval
                                             : jcc::ParetoMethod::boole_policy_exact_eval};
    } else if (cfg.method == "all") {
        methods = {jcc::ParetoMethod::exact, jcc::ParetoMethod::boole_policy_exact_eval,
                   jcc::ParetoMethod::boole_policy_boole_eval};
    } else {
        throw std::invalid_argument("--method must be exact, boole or all");
    }

    const auto sweeps = jcc::pareto_sweep_all(loaded.mdp, loaded.x0, lambdas, methods);
    fs::create_directories(cfg.out_dir);
    jcc::write_text_atomic(fs::path(cfg.out_dir) / "pareto.csv", jcc::pareto_csv(sweeps));
    std::printf("pareto %zu lambdas x %zu methods -> %s\n", lambdas.size(), methods.size(),
                (fs::path(cfg.out_dir) / "pareto.csv").c_str());
    return kExitOk;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    LoadedModel loaded = load_model(cfg);
    if (cfg.rollouts < 1) throw std::invalid_argument("--rollouts must be >= 1");

    jcc::MixedPolicy policy;
    if (!cfg.policy_file.empty()) {
        const jcc::MarkovPolicy p = jcc::policy_from_json(jcc::read_json(cfg.policy_file));
        policy = jcc::MixedPolicy{p, p, 1.0};
    } else if (!cfg.report_file.empty()) {
        const json j = jcc::read_json(cfg.report_file);
        if (!j.contains("policy_over"))
            throw std::invalid_argument("report has no policy (was it infeasible?)");
        const fs::path base = fs::path(cfg.report_file).parent_path();
        policy.over = jcc::policy_from_json(
            jcc::read_json(base / j.at("policy_over").get<std::string>()));
        policy.under = jcc::policy_from_json(
            jcc::read_json(base / j.at("policy_under").get<std::string>()));
        policy.p_over = j.at("p_over");
    } else {
        // Inline solve with the configured method.
        jcc::AugmentedMdp aug(loaded.mdp);
        const jcc::SolveReport report =
            cfg.method == "boole"
                ? jcc::solve_boole(loaded.mdp, loaded.x0, cfg.alpha, cfg.delta, cfg.max_iters,
                                   cfg.boole_eval == "bound" ? jcc::BooleEval::bound
                                                             : jcc::BooleEval::exact)
                : jcc::solve(aug, loaded.x0, cfg.alpha, cfg.delta, cfg.max_iters);
        if (!report.policy) {
            std::fprintf(stderr, "inline solve did not produce a policy (%s)\n",
                         jcc::to_string(report.status));
            return status_exit_code(report.status);
        }
        policy = *report.policy;
    }

    fs::create_directories(cfg.out_dir);
    if (cfg.continuous) {
        if (!loaded.spec)
            throw std::invalid_argument("--continuous needs --builtin or --spec model source");
        const auto rollouts =
            jcc::rollout_continuous(*loaded.spec, loaded.mdp, policy, cfg.rollouts, cfg.seed);
        jcc::write_text_atomic(fs::path(cfg.out_dir) / "rollouts_continuous.csv",
                               jcc::continuous_rollout_csv(rollouts));
    }
    const jcc::RolloutBatch batch =
        jcc::rollout(loaded.mdp, policy, loaded.x0, cfg.rollouts, cfg.seed);
    const jcc::EmpiricalStats stats = jcc::empirical_stats(batch);
    jcc::write_text_atomic(fs::path(cfg.out_dir) / "rollouts.csv", jcc::rollout_csv(batch));
    json j{{"rollouts", cfg.rollouts},
           {"seed", cfg.seed},
           {"mean_cost", stats.mean_cost},
           {"safety_fraction", stats.safety_fraction},
           {"std_error", stats.std_error},
           {"over_fraction", stats.over_fraction}};
    attach_reward(j, loaded.mdp, stats.mean_cost);
    jcc::write_json_atomic(fs::path(cfg.out_dir) / "stats.json", j);
    std::printf("simulate %d rollouts safety %.6g mean-cost %.6g\n", cfg.rollouts,
                stats.safety_fraction, stats.mean_cost);
    return kExitOk;
}

// Config-file values become defaults; explicit flags override them.
void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    const json j = jcc::read_json(path);
    cfg.builtin = j.value("builtin", cfg.builtin);
    cfg.spec_file = j.value("spec", cfg.spec_file);
    cfg.model_file = j.value("model", cfg.model_file);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.delta = j.value("delta", cfg.delta);
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.method = j.value("method", cfg.method);
    cfg.boole_eval = j.value("boole_eval", cfg.boole_eval);
    cfg.lambdas = j.value("lambdas", cfg.lambdas);
    cfg.rollouts = j.value("rollouts", cfg.rollouts);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.x0_index = j.value("x0", cfg.x0_index);
    cfg.policy_file = j.value("policy", cfg.policy_file);
    cfg.report_file = j.value("report", cfg.report_file);
}

void add_shared_flags(CLI::App* app, ExperimentConfig& cfg) {
    app->add_option("--builtin", cfg.builtin, "Builtin system: unicycle-a|unicycle-b|fishery");
    app->add_option("--spec", cfg.spec_file, "System spec JSON file");
    app->add_option("--model", cfg.model_file, "Prebuilt model JSON file");
    app->add_option("--alpha", cfg.alpha, "Required safety probability");
    app->add_option("--delta", cfg.delta, "Suboptimality target");
    app->add_option("--max-iters", cfg.max_iters, "Bisection iteration cap");
    app->add_option("--method", cfg.method, "exact|boole (pareto also: all)");
    app->add_option("--boole-eval", cfg.boole_eval, "Safety evaluation for boole: exact|bound");
    app->add_option("--lambdas", cfg.lambdas, "CSV list or logrange:lo:hi:n");
    app->add_option("--rollouts", cfg.rollouts, "Monte-Carlo rollout count");
    app->add_option("--seed", cfg.seed, "Simulation / kernel seed");
    app->add_option("--out", cfg.out_dir, "Output directory");
    app->add_option("--threads", cfg.threads, "Worker thread cap (JCC_THREADS fallback)");
    app->add_option("--x0", cfg.x0_index, "Initial state index");
    app->add_option("--x0-coords", cfg.x0_coords, "Initial state coordinates");
}

} // namespace

int main(int argc, char** argv) {
    ExperimentConfig cfg;
    std::string config_file;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") config_file = argv[i + 1];
    try {
        if (!config_file.empty()) apply_config_file(cfg, config_file);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }

    CLI::App app{"Joint chance constrained optimal control solver"};
    app.require_subcommand(1);
    std::string config_sink;
    app.add_option("--config", config_sink, "JSON config file (flags override it)");

    CLI::App* build = app.add_subcommand("build-model", "Grid a continuous system to a model file");
    build->add_flag("--dense-kernel", cfg.dense_kernel, "Write the kernel as dense arrays");
    CLI::App* solve_cmd = app.add_subcommand("solve", "Run the constrained solve");
    CLI::App* pareto_cmd = app.add_subcommand("pareto", "Sweep the multiplier trade-off curve");
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo rollouts of a policy");
    simulate_cmd->add_option("--policy", cfg.policy_file, "Deterministic policy JSON");
    simulate_cmd->add_option("--report", cfg.report_file, "Solve report JSON (mixed policy)");
    simulate_cmd->add_flag("--continuous", cfg.continuous,
                           "Also replay the continuous dynamics under the gridded policy");
    for (CLI::App* sub : {build, solve_cmd, pareto_cmd, simulate_cmd})
        add_shared_flags(sub, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    if (cfg.threads > 0) jcc::set_max_threads(cfg.threads);
    try {
        if (build->parsed()) return cmd_build_model(cfg);
        if (solve_cmd->parsed()) return cmd_solve(cfg);
        if (pareto_cmd->parsed()) return cmd_pareto(cfg);
        if (simulate_cmd->parsed()) return cmd_simulate(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
