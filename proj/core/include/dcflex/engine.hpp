#pragma once

#include "dcflex/controller.hpp"
#include "dcflex/scenario.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dcflex {

struct TraceNodeSample {
    double p_out_kw = 0.0;
    NodeMode mode = NodeMode::voltage_source;
    std::optional<double> soc_pct;
    double shift_kw = 0.0;
};

struct TraceRow {
    double t_s = 0.0;
    double bus_u_v = 0.0;
    std::vector<TraceNodeSample> nodes; // roster order
    bool tripped = false;               // out-of-band streak in progress
    int dispatch_count = 0;             // cumulative
};

struct Trace {
    std::vector<std::string> node_ids; // roster order
    std::vector<TraceRow> rows;        // one per dt, strictly increasing t
};

struct Summary {
    std::string scenario;
    double final_u_v = 0.0;
    std::map<std::string, double> steady_p_kw; // mean over last 10% of rows
    std::vector<TripEvent> trips;
    std::vector<DispatchRecord> dispatches;
    std::vector<DecisionRecord> decisions;
    std::vector<std::string> alarms;
    double total_deficit_kw = 0.0;
    bool collapsed = false;
    std::optional<double> collapse_t_s;
};

struct RunResult {
    Trace trace;
    Summary summary;
};

// Optional overrides for the two simulated field-bus links
// (controller <- nodes telemetry, controller -> nodes commands).
// Defaults: 0.01 s latency, no loss, seeded from the scenario.
struct EngineOptions {
    std::optional<ChannelConfig> uplink;
    std::optional<ChannelConfig> downlink;
};

// One simulated node plus its roster membership; shedding clears `active`.
struct SimNode {
    NodeState state;
    bool active = true;
};

// Applies one scenario event. The target must exist (validated at load).
void apply_event(std::vector<SimNode>& nodes, const EventSpec& event);

// Fixed-step loop: events -> comms -> bus solve -> node lag -> control ->
// record. Deterministic: identical spec (including seed) gives an
// identical trace. Bus collapse ends the run early with the summary
// marked collapsed. Throws std::invalid_argument when the spec fails
// validation.
RunResult run(const ScenarioSpec& spec, const EngineOptions& options = {});

} // namespace dcflex
