#pragma once

#include "dcflex/scenario.hpp"

#include <string>
#include <vector>

namespace dcflex {

// Parses scenario JSON. Structural problems (malformed JSON, missing or
// mistyped fields) throw ParseError; unknown keys are appended to
// `violations` with their path so callers can reject typos.
ScenarioSpec scenario_from_json(const std::string& text,
                                std::vector<Violation>& violations);

std::string scenario_to_json(const ScenarioSpec& spec);

// Reads a scenario file; throws ParseError when the file is unreadable.
ScenarioSpec load_scenario_file(const std::string& path,
                                std::vector<Violation>& violations);

} // namespace dcflex
