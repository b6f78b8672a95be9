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

#include "jcc/serialize.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace jcc {

namespace {

std::string kind_name(DynamicsKind k) {
    switch (k) {
        case DynamicsKind::unicycle: return "unicycle";
        case DynamicsKind::fishery: return "fishery";
        case DynamicsKind::additive_gaussian: return "gaussian";
    }
    return "?";
}

DynamicsKind kind_from(const std::string& s) {
    if (s == "unicycle") return DynamicsKind::unicycle;
    if (s == "fishery") return DynamicsKind::fishery;
    if (s == "gaussian") return DynamicsKind::additive_gaussian;
    throw std::invalid_argument("unknown dynamics kind: " + s);
}

json safe_set_to_json(const SafeSetSpec& s) {
    json j;
    if (s.kind == SafeSetSpec::Kind::interval) {
        j["type"] = "interval";
        j["lower"] = s.interval.lower;
        j["upper"] = s.interval.upper;
    } else {
        j["type"] = "complement_of_boxes";
        j["boxes"] = json::array();
        for (const auto& b : s.boxes) j["boxes"].push_back({{"lower", b.lower}, {"upper", b.upper}});
    }
    return j;
}

SafeSetSpec safe_set_from_json(const json& j) {
    SafeSetSpec s;
    const std::string type = j.at("type");
    if (type == "interval") {
        s.kind = SafeSetSpec::Kind::interval;
        s.interval.lower = j.at("lower").get<std::vector<double>>();
        s.interval.upper = j.at("upper").get<std::vector<double>>();
    } else if (type == "complement_of_boxes") {
        s.kind = SafeSetSpec::Kind::complement_of_boxes;
        for (const auto& b : j.at("boxes"))
            s.boxes.push_back({b.at("lower").get<std::vector<double>>(),
                               b.at("upper").get<std::vector<double>>()});
    } else {
        throw std::invalid_argument("unknown safe set type: " + type);
    }
    return s;
}

} // namespace

json model_to_json(const GriddedMdp& mdp, bool dense_kernel) {
    json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["horizon"] = mdp.horizon;
    j["stage_cost"] = {{"time_varying", mdp.time_varying_cost}, {"values", mdp.stage_cost_table}};
    j["terminal_cost"] = mdp.terminal_cost;
    json safe = json::array();
    for (auto v : mdp.safe_mask) safe.push_back(v != 0);
    j["safe_mask"] = std::move(safe);
    if (mdp.cost_shift != 0.0) j["cost_shift"] = mdp.cost_shift;
    if (mdp.grid_meta) {
        j["grid_meta"] = {{"lower", mdp.grid_meta->lower},
                          {"upper", mdp.grid_meta->upper},
                          {"cells", mdp.grid_meta->cells}};
    }
    json kernel;
    if (dense_kernel) {
        kernel["format"] = "dense";
        json rows = json::array();
        for (int s = 0; s < mdp.num_states; ++s) {
            json per_action = json::array();
            for (int a = 0; a < mdp.num_actions; ++a) {
                std::vector<double> row(mdp.num_states, 0.0);
                for (const auto& e : mdp.kernel.row(s, a)) row[e.next] = e.p;
                per_action.push_back(row);
            }
            rows.push_back(std::move(per_action));
        }
        kernel["rows"] = std::move(rows);
    } else {
        kernel["format"] = "sparse";
        json entries = json::array();
        for (int s = 0; s < mdp.num_states; ++s)
            for (int a = 0; a < mdp.num_actions; ++a)
                for (const auto& e : mdp.kernel.row(s, a))
                    entries.push_back({s, a, e.next, e.p});
        kernel["entries"] = std::move(entries);
    }
    j["kernel"] = std::move(kernel);
    return j;
}

GriddedMdp model_from_json(const json& j) {
    GriddedMdp mdp;
    mdp.num_states = j.at("num_states");
    mdp.num_actions = j.at("num_actions");
    mdp.horizon = j.at("horizon");
    mdp.time_varying_cost = j.at("stage_cost").at("time_varying");
    mdp.stage_cost_table = j.at("stage_cost").at("values").get<std::vector<double>>();
    mdp.terminal_cost = j.at("terminal_cost").get<std::vector<double>>();
    for (const auto& b : j.at("safe_mask")) mdp.safe_mask.push_back(b.get<bool>() ? 1 : 0);
    mdp.cost_shift = j.value("cost_shift", 0.0);
    if (j.contains("grid_meta")) {
        GridMeta g;
        g.lower = j["grid_meta"].at("lower").get<std::vector<double>>();
        g.upper = j["grid_meta"].at("upper").get<std::vector<double>>();
        g.cells = j["grid_meta"].at("cells").get<std::vector<int>>();
        mdp.grid_meta = std::move(g);
    }

    mdp.kernel = Kernel(mdp.num_states, mdp.num_actions);
    const json& kernel = j.at("kernel");
    const std::string format = kernel.at("format");
    if (format == "dense") {
        const json& rows = kernel.at("rows");
        std::vector<Kernel::Entry> buf;
        for (int s = 0; s < mdp.num_states; ++s)
            for (int a = 0; a < mdp.num_actions; ++a) {
                buf.clear();
                const auto row = rows.at(s).at(a).get<std::vector<double>>();
                for (int n = 0; n < mdp.num_states; ++n)
                    if (row[n] != 0.0) buf.push_back({n, row[n]});
                mdp.kernel.append_row(s, a, buf);
            }
    } else if (format == "sparse") {
        // Entries may arrive in any order; bucket them per (state, action).
        std::vector<std::vector<Kernel::Entry>> rows(
            static_cast<std::size_t>(mdp.num_states) * mdp.num_actions);
        for (const auto& e : kernel.at("entries")) {
            const int s = e.at(0), a = e.at(1), n = e.at(2);
            if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions || n < 0 ||
                n >= mdp.num_states)
                throw std::invalid_argument("kernel entry index out of range");
            rows[static_cast<std::size_t>(s) * mdp.num_actions + a].push_back(
                {n, e.at(3).get<double>()});
        }
        for (int s = 0; s < mdp.num_states; ++s)
            for (int a = 0; a < mdp.num_actions; ++a) {
                auto& row = rows[static_cast<std::size_t>(s) * mdp.num_actions + a];
                std::sort(row.begin(), row.end(),
                          [](const auto& x, const auto& y) { return x.next < y.next; });
                mdp.kernel.append_row(s, a, row);
            }
    } else {
        throw std::invalid_argument("unknown kernel format: " + format);
    }
    mdp.validate();
    return mdp;
}

json spec_to_json(const ContinuousSystemSpec& spec) {
    json j;
    j["dimension"] = spec.dimension;
    json bounds = json::array();
    for (int d = 0; d < spec.dimension; ++d)
        bounds.push_back({spec.lower_bounds[d], spec.upper_bounds[d]});
    j["bounds"] = std::move(bounds);
    j["cells_per_dim"] = spec.cells_per_dim;
    j["actions"] = spec.actions;
    j["dynamics_kind"] = kind_name(spec.dynamics_kind);
    j["safe_set"] = safe_set_to_json(spec.safe_set);
    j["kernel_method"] = {{"type", spec.kernel_method == KernelMethod::analytic ? "analytic"
                                                                                : "monte-carlo"},
                          {"samples", spec.mc_samples},
                          {"seed", spec.mc_seed}};
    j["horizon"] = spec.horizon;
    if (!spec.initial_state.empty()) j["initial_state"] = spec.initial_state;
    if (spec.dynamics_kind == DynamicsKind::fishery) {
        const auto& f = spec.fishery;
        j["noise_params"] = {{"mortality_mean", f.mortality_mean},
                             {"mortality_std", f.mortality_std},
                             {"recruitment_mean", f.recruitment_mean},
                             {"recruitment_std", f.recruitment_std},
                             {"catch_mean", f.catch_mean},
                             {"catch_std", f.catch_std}};
        j["dynamics_params"] = {{"biomass_limit", f.biomass_limit},
                                {"max_catch", f.max_catch},
                                {"mu", f.mu},
                                {"sigma", f.sigma}};
    } else {
        j["noise_params"] = {{"cov_diag", spec.noise_cov_diag}};
        if (spec.dynamics_kind == DynamicsKind::unicycle)
            j["dynamics_params"] = {{"speed", spec.unicycle_speed}};
    }
    return j;
}

ContinuousSystemSpec spec_from_json(const json& j) {
    ContinuousSystemSpec spec;
    spec.dimension = j.at("dimension");
    for (const auto& b : j.at("bounds")) {
        spec.lower_bounds.push_back(b.at(0));
        spec.upper_bounds.push_back(b.at(1));
    }
    spec.cells_per_dim = j.at("cells_per_dim").get<std::vector<int>>();
    for (const auto& a : j.at("actions")) {
        if (a.is_array())
            spec.actions.push_back(a.get<std::vector<double>>());
        else
            spec.actions.push_back({a.get<double>()});
    }
    spec.dynamics_kind = kind_from(j.at("dynamics_kind"));
    spec.safe_set = safe_set_from_json(j.at("safe_set"));
    const json& km = j.at("kernel_method");
    spec.kernel_method =
        km.at("type") == "analytic" ? KernelMethod::analytic : KernelMethod::monte_carlo;
    spec.mc_samples = km.value("samples", 10000);
    spec.mc_seed = km.value("seed", std::uint64_t{0});
    spec.horizon = j.at("horizon");
    if (j.contains("initial_state"))
        spec.initial_state = j["initial_state"].get<std::vector<double>>();
    if (spec.dynamics_kind == DynamicsKind::fishery) {
        const json& np = j.at("noise_params");
        auto& f = spec.fishery;
        f.mortality_mean = np.value("mortality_mean", f.mortality_mean);
        f.mortality_std = np.value("mortality_std", f.mortality_std);
        f.recruitment_mean = np.value("recruitment_mean", f.recruitment_mean);
        f.recruitment_std = np.value("recruitment_std", f.recruitment_std);
        f.catch_mean = np.value("catch_mean", f.catch_mean);
        f.catch_std = np.value("catch_std", f.catch_std);
        if (j.contains("dynamics_params")) {
            const json& dp = j["dynamics_params"];
            f.biomass_limit = dp.value("biomass_limit", f.biomass_limit);
            f.max_catch = dp.value("max_catch", f.max_catch);
            f.mu = dp.value("mu", f.mu);
            f.sigma = dp.value("sigma", f.sigma);
        }
    } else {
        spec.noise_cov_diag = j.at("noise_params").at("cov_diag").get<std::vector<double>>();
        if (j.contains("dynamics_params"))
            spec.unicycle_speed = j["dynamics_params"].value("speed", spec.unicycle_speed);
    }
    spec.validate();
    return spec;
}

json policy_to_json(const MarkovPolicy& policy) {
    json j;
    j["horizon"] = policy.horizon;
    j["num_states"] = policy.num_states;
    j["lambda"] = policy.lambda;
    switch (policy.kind) {
        case PolicyKind::min_cost: j["kind"] = "min-cost"; break;
        case PolicyKind::max_safety: j["kind"] = "max-safety"; break;
        case PolicyKind::lambda_penalized: j["kind"] = "lambda"; break;
        case PolicyKind::boole: j["kind"] = "boole"; break;
    }
    json b1 = json::array(), b0 = json::array();
    for (int k = 0; k < policy.horizon; ++k) {
        json r1 = json::array(), r0 = json::array();
        for (int s = 0; s < policy.num_states; ++s) {
            r1.push_back(policy.action(k, s, 1));
            r0.push_back(policy.action(k, s, 0));
        }
        b1.push_back(std::move(r1));
        b0.push_back(std::move(r0));
    }
    j["actions_b1"] = std::move(b1);
    j["actions_b0"] = std::move(b0);
    return j;
}

MarkovPolicy policy_from_json(const json& j) {
    MarkovPolicy p = MarkovPolicy::zeros(PolicyKind::min_cost, j.at("horizon"), j.at("num_states"));
    p.lambda = j.value("lambda", 0.0);
    const std::string kind = j.value("kind", "min-cost");
    if (kind == "max-safety") p.kind = PolicyKind::max_safety;
    else if (kind == "lambda") p.kind = PolicyKind::lambda_penalized;
    else if (kind == "boole") p.kind = PolicyKind::boole;
    for (int k = 0; k < p.horizon; ++k)
        for (int s = 0; s < p.num_states; ++s) {
            p.action_ref(k, s, 1) = j.at("actions_b1").at(k).at(s);
            p.action_ref(k, s, 0) = j.at("actions_b0").at(k).at(s);
        }
    return p;
}

json report_to_json(const SolveReport& report, const std::string& policy_over_file,
                    const std::string& policy_under_file) {
    json j;
    j["status"] = to_string(report.status);
    j["alpha"] = report.alpha;
    j["delta_target"] = report.delta_target;
    j["lambda_lower"] = report.lambda_lower;
    j["lambda_upper"] = report.lambda_upper;
    j["lambda_upper_init"] = report.lambda_upper_init;
    j["iterations"] = report.iterations;
    j["cost"] = report.cost;
    j["safety"] = report.safety;
    j["delta"] = report.delta;
    if (report.policy) {
        j["p_over"] = report.policy->p_over;
        j["policy_over"] = policy_over_file;
        j["policy_under"] = policy_under_file;
    }
    json hist = json::array();
    for (const auto& r : report.history)
        hist.push_back({{"iter", r.index},
                        {"lambda", r.lambda},
                        {"safety", r.v_lambda},
                        {"cost", r.c_lambda},
                        {"lambda_lo", r.lambda_lo},
                        {"lambda_hi", r.lambda_hi},
                        {"width", r.width},
                        {"p_over", r.p_over},
                        {"delta", r.delta}});
    j["history"] = std::move(hist);
    return j;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

} // namespace jcc
