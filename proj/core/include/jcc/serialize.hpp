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

#include "jcc/dual.hpp"
#include "jcc/model.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>

namespace jcc {

using json = nlohmann::json;

json model_to_json(const GriddedMdp& mdp, bool dense_kernel = false);
GriddedMdp model_from_json(const json& j);

json spec_to_json(const ContinuousSystemSpec& spec);
ContinuousSystemSpec spec_from_json(const json& j);

json policy_to_json(const MarkovPolicy& policy);
MarkovPolicy policy_from_json(const json& j);

/// Report serialization; policy payloads are written to separate files and
/// referenced by name (pass the names actually written next to the report).
json report_to_json(const SolveReport& report, const std::string& policy_over_file,
                    const std::string& policy_under_file);

/// Whole-file writes go to a temporary sibling and rename into place, so a
/// failed run never leaves a partial output file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

void write_json_atomic(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

} // namespace jcc
