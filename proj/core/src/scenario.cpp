#include "dcflex/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dcflex {

bool is_storage(NodeKind kind) {
    return kind == NodeKind::battery || kind == NodeKind::ev_charger;
}

std::string node_kind_name(NodeKind kind) {
    switch (kind) {
    case NodeKind::grid_converter: return "grid_converter";
    case NodeKind::battery: return "battery";
    case NodeKind::ev_charger: return "ev_charger";
    }
    return "?";
}

std::string node_mode_name(NodeMode mode) {
    switch (mode) {
    case NodeMode::voltage_source: return "voltage_source";
    case NodeMode::current_source: return "current_source";
    case NodeMode::locked: return "locked";
    }
    return "?";
}

std::string gamma_mode_name(GammaMode mode) {
    return mode == GammaMode::soc_literal ? "soc_literal" : "direction_aware";
}

std::string event_action_name(EventAction action) {
    switch (action) {
    case EventAction::set_power: return "set_power";
    case EventAction::set_mode: return "set_mode";
    case EventAction::lock: return "lock";
    case EventAction::unlock: return "unlock";
    case EventAction::shed: return "shed";
    }
    return "?";
}

std::optional<NodeKind> parse_node_kind(const std::string& s) {
    if (s == "grid_converter") return NodeKind::grid_converter;
    if (s == "battery") return NodeKind::battery;
    if (s == "ev_charger") return NodeKind::ev_charger;
    return std::nullopt;
}

std::optional<NodeMode> parse_node_mode(const std::string& s) {
    if (s == "voltage_source") return NodeMode::voltage_source;
    if (s == "current_source") return NodeMode::current_source;
    if (s == "locked") return NodeMode::locked;
    return std::nullopt;
}

std::optional<GammaMode> parse_gamma_mode(const std::string& s) {
    if (s == "soc_literal") return GammaMode::soc_literal;
    if (s == "direction_aware") return GammaMode::direction_aware;
    return std::nullopt;
}

std::optional<EventAction> parse_event_action(const std::string& s) {
    if (s == "set_power") return EventAction::set_power;
    if (s == "set_mode") return EventAction::set_mode;
    if (s == "lock") return EventAction::lock;
    if (s == "unlock") return EventAction::unlock;
    if (s == "shed") return EventAction::shed;
    return std::nullopt;
}

namespace {

bool finite(double v) { return std::isfinite(v); }

void require(std::vector<Violation>& out, bool ok, const std::string& path,
             const std::string& message) {
    if (!ok) out.push_back({path, message});
}

std::string node_path(std::size_t i, const char* field) {
    std::ostringstream os;
    os << "nodes[" << i << "]." << field;
    return os.str();
}

std::string event_path(std::size_t i, const char* field) {
    std::ostringstream os;
    os << "events[" << i << "]." << field;
    return os.str();
}

} // namespace

std::vector<Violation> validate_scenario(const ScenarioSpec& spec) {
    std::vector<Violation> out;

    require(out, finite(spec.t_end_s) && spec.t_end_s > 0.0, "t_end_s", "must be > 0");
    require(out, finite(spec.dt_s) && spec.dt_s > 0.0, "dt_s", "must be > 0");
    require(out, finite(spec.bus.u_nominal_v) && spec.bus.u_nominal_v > 0.0,
            "bus.u_nominal_v", "must be > 0");
    require(out, finite(spec.bus.du_set_v) && spec.bus.du_set_v > 0.0,
            "bus.du_set_v", "must be > 0");

    const auto& ctl = spec.controller;
    require(out, finite(ctl.control_period_s) && ctl.control_period_s > 0.0,
            "controller.control_period_s", "must be > 0");
    require(out, ctl.debounce_samples >= 1, "controller.debounce_samples",
            "must be >= 1");
    require(out, finite(ctl.inhibit_window_s) && ctl.inhibit_window_s >= 0.0,
            "controller.inhibit_window_s", "must be >= 0");
    if (spec.dt_s > 0.0 && ctl.control_period_s > 0.0) {
        require(out, spec.dt_s <= ctl.control_period_s, "dt_s",
                "must not exceed controller.control_period_s");
    }

    std::set<std::string> seen;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const NodeSpec& n = spec.nodes[i];
        require(out, !n.id.empty(), node_path(i, "id"), "must not be empty");
        if (!n.id.empty() && !seen.insert(n.id).second) {
            out.push_back({node_path(i, "id"), "duplicate node id \"" + n.id + "\""});
        }
        require(out, finite(n.k_v_per_kw) && n.k_v_per_kw > 0.0,
                node_path(i, "k_v_per_kw"), "must be > 0");
        require(out, finite(n.p_rated_kw) && n.p_rated_kw > 0.0,
                node_path(i, "p_rated_kw"), "must be > 0");
        require(out, finite(n.u_ref_v) && n.u_ref_v > 0.0,
                node_path(i, "u_ref_v"), "must be > 0");
        require(out, finite(n.weight) && n.weight >= 0.0 && n.weight <= 1.0,
                node_path(i, "weight"), "must be in [0,1]");
        require(out, finite(n.tau_s) && n.tau_s > 0.0, node_path(i, "tau_s"),
                "must be > 0");
        if (n.p_rated_kw > 0.0) {
            require(out, finite(n.p_set_kw) && std::abs(n.p_set_kw) <= n.p_rated_kw,
                    node_path(i, "p_set_kw"), "magnitude must not exceed p_rated_kw");
        }
        if (is_storage(n.kind)) {
            if (!n.soc_pct) {
                out.push_back({node_path(i, "soc_pct"),
                               "required for storage kinds"});
            } else {
                require(out, finite(*n.soc_pct) && *n.soc_pct >= 0.0 && *n.soc_pct <= 100.0,
                        node_path(i, "soc_pct"), "must be in [0,100]");
            }
            if (!n.capacity_kwh) {
                out.push_back({node_path(i, "capacity_kwh"),
                               "required for storage kinds"});
            } else {
                require(out, finite(*n.capacity_kwh) && *n.capacity_kwh > 0.0,
                        node_path(i, "capacity_kwh"), "must be > 0");
            }
        } else {
            require(out, !n.soc_pct.has_value(), node_path(i, "soc_pct"),
                    "only valid for storage kinds");
            require(out, !n.capacity_kwh.has_value(), node_path(i, "capacity_kwh"),
                    "only valid for storage kinds");
        }
    }

    double prev_t = -1.0;
    for (std::size_t i = 0; i < spec.events.size(); ++i) {
        const EventSpec& e = spec.events[i];
        require(out, finite(e.t_s) && e.t_s >= 0.0, event_path(i, "t_s"),
                "must be >= 0");
        require(out, seen.count(e.target) > 0, event_path(i, "target"),
                "unknown node id \"" + e.target + "\"");
        if (e.action == EventAction::set_power) {
            require(out, finite(e.p_kw), event_path(i, "p_kw"), "must be finite");
        }
        require(out, e.t_s >= prev_t, event_path(i, "t_s"),
                "events must be sorted by time");
        prev_t = e.t_s;
    }

    return out;
}

namespace {

NodeSpec table_node(const std::string& id, NodeKind kind, NodeMode mode,
                    double k, double p_rated) {
    NodeSpec n;
    n.id = id;
    n.kind = kind;
    n.initial_mode = mode;
    n.u_ref_v = 750.0;
    n.k_v_per_kw = k;
    n.p_rated_kw = p_rated;
    if (is_storage(kind)) {
        n.soc_pct = 50.0;
        n.capacity_kwh = kDefaultStorageCapacityKwh;
    }
    return n;
}

} // namespace

ScenarioSpec builtin_case(int n) {
    if (n < 1 || n > 3) {
        throw std::invalid_argument("builtin_case: case number must be 1, 2 or 3");
    }

    ScenarioSpec spec;
    spec.name = "case" + std::to_string(n);

    const NodeMode vs = NodeMode::voltage_source;
    const NodeMode cs = NodeMode::current_source;

    EventSpec step;
    step.t_s = 0.5;
    step.action = EventAction::set_power;
    step.p_kw = -15.0;

    switch (n) {
    case 1:
        // Grid-connected EV charging: grid converter and battery hold the
        // bus, the EV draws a 15 kW constant charge.
        spec.nodes = {table_node("acdc", NodeKind::grid_converter, vs, 1.0, 60.0),
                      table_node("dcdc1", NodeKind::battery, vs, 4.0, 15.0),
                      table_node("dcdc2", NodeKind::ev_charger, cs, 4.0, 15.0)};
        step.target = "dcdc2";
        break;
    case 2:
        // Off-grid charging: the battery alone holds the bus.
        spec.nodes = {table_node("acdc", NodeKind::grid_converter, cs, 1.0, 60.0),
                      table_node("dcdc1", NodeKind::battery, vs, 4.0, 15.0),
                      table_node("dcdc2", NodeKind::ev_charger, cs, 4.0, 15.0)};
        step.target = "dcdc2";
        break;
    case 3:
        // Off-grid AC support: battery and EV hold the bus, the grid
        // converter exports 15 kW to the AC side.
        spec.nodes = {table_node("acdc", NodeKind::grid_converter, cs, 1.0, 60.0),
                      table_node("dcdc1", NodeKind::battery, vs, 4.0, 15.0),
                      table_node("dcdc2", NodeKind::ev_charger, vs, 4.0, 15.0)};
        step.target = "acdc";
        break;
    }

    spec.events = {step};
    return spec;
}

} // namespace dcflex
