#pragma once

#include "dcflex/engine.hpp"

#include <string>

namespace dcflex {

// Wide CSV, one row per step: t_s,bus_v then p/mode/soc/shift per node in
// roster order, then tripped,dispatch_count. Fixed 6-decimal formatting
// and LF endings; identical runs produce byte-identical files.
std::string trace_to_csv(const Trace& trace);

// Space-separated numeric columns with a '#' header, ready for gnuplot.
std::string trace_to_gnuplot(const Trace& trace);

std::string summary_to_json(const Summary& summary);

// One-screen plain-text run report.
std::string render_report(const ScenarioSpec& spec, const Summary& summary);

} // namespace dcflex
