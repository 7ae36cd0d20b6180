#include "dcflex/scenario_json.hpp"

#include "dcflex/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace dcflex {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ParseError(path.empty() ? what : path + ": " + what);
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void note_unknown_keys(const json& j, const std::set<std::string>& known,
                       const std::string& path, std::vector<Violation>& out) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            out.push_back({path.empty() ? key : path + "." + key, "unknown key"});
        }
    }
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

BusSpec parse_bus(const json& j, const std::string& path,
                  std::vector<Violation>& violations) {
    expect_object(j, path);
    note_unknown_keys(j, {"u_nominal_v", "du_set_v"}, path, violations);
    BusSpec bus;
    if (j.contains("u_nominal_v")) bus.u_nominal_v = get_number(j["u_nominal_v"], path + ".u_nominal_v");
    if (j.contains("du_set_v")) bus.du_set_v = get_number(j["du_set_v"], path + ".du_set_v");
    return bus;
}

ControllerSpec parse_controller(const json& j, const std::string& path,
                                std::vector<Violation>& violations) {
    expect_object(j, path);
    note_unknown_keys(j,
                      {"control_period_s", "debounce_samples", "inhibit_window_s",
                       "gamma_mode"},
                      path, violations);
    ControllerSpec ctl;
    if (j.contains("control_period_s")) {
        ctl.control_period_s = get_number(j["control_period_s"], path + ".control_period_s");
    }
    if (j.contains("debounce_samples")) {
        const json& d = j["debounce_samples"];
        if (!d.is_number_integer()) fail(path + ".debounce_samples", "expected an integer");
        ctl.debounce_samples = d.get<int>();
    }
    if (j.contains("inhibit_window_s")) {
        ctl.inhibit_window_s = get_number(j["inhibit_window_s"], path + ".inhibit_window_s");
    }
    if (j.contains("gamma_mode")) {
        const std::string s = get_string(j["gamma_mode"], path + ".gamma_mode");
        auto mode = parse_gamma_mode(s);
        if (!mode) fail(path + ".gamma_mode", "expected \"soc_literal\" or \"direction_aware\"");
        ctl.gamma_mode = *mode;
    }
    return ctl;
}

NodeSpec parse_node(const json& j, const std::string& path,
                    std::vector<Violation>& violations) {
    expect_object(j, path);
    note_unknown_keys(j,
                      {"id", "kind", "initial_mode", "u_ref_v", "k_v_per_kw",
                       "p_rated_kw", "p_set_kw", "weight", "soc_pct",
                       "capacity_kwh", "tau_s"},
                      path, violations);
    NodeSpec n;
    if (!j.contains("id")) fail(path, "missing required key \"id\"");
    n.id = get_string(j["id"], path + ".id");
    if (!j.contains("kind")) fail(path, "missing required key \"kind\"");
    {
        const std::string s = get_string(j["kind"], path + ".kind");
        auto kind = parse_node_kind(s);
        if (!kind) fail(path + ".kind", "unknown node kind \"" + s + "\"");
        n.kind = *kind;
    }
    if (j.contains("initial_mode")) {
        const std::string s = get_string(j["initial_mode"], path + ".initial_mode");
        auto mode = parse_node_mode(s);
        if (!mode) fail(path + ".initial_mode", "unknown mode \"" + s + "\"");
        n.initial_mode = *mode;
    }
    if (j.contains("u_ref_v")) n.u_ref_v = get_number(j["u_ref_v"], path + ".u_ref_v");
    if (!j.contains("k_v_per_kw")) fail(path, "missing required key \"k_v_per_kw\"");
    n.k_v_per_kw = get_number(j["k_v_per_kw"], path + ".k_v_per_kw");
    if (!j.contains("p_rated_kw")) fail(path, "missing required key \"p_rated_kw\"");
    n.p_rated_kw = get_number(j["p_rated_kw"], path + ".p_rated_kw");
    if (j.contains("p_set_kw")) n.p_set_kw = get_number(j["p_set_kw"], path + ".p_set_kw");
    if (j.contains("weight")) n.weight = get_number(j["weight"], path + ".weight");
    if (j.contains("soc_pct")) n.soc_pct = get_number(j["soc_pct"], path + ".soc_pct");
    if (j.contains("capacity_kwh")) {
        n.capacity_kwh = get_number(j["capacity_kwh"], path + ".capacity_kwh");
    } else if (is_storage(n.kind)) {
        n.capacity_kwh = kDefaultStorageCapacityKwh;
    }
    if (j.contains("tau_s")) n.tau_s = get_number(j["tau_s"], path + ".tau_s");
    return n;
}

EventSpec parse_event(const json& j, const std::string& path,
                      std::vector<Violation>& violations) {
    expect_object(j, path);
    note_unknown_keys(j, {"t_s", "target", "action", "p_kw", "mode"}, path,
                      violations);
    EventSpec e;
    if (!j.contains("t_s")) fail(path, "missing required key \"t_s\"");
    e.t_s = get_number(j["t_s"], path + ".t_s");
    if (!j.contains("target")) fail(path, "missing required key \"target\"");
    e.target = get_string(j["target"], path + ".target");
    if (!j.contains("action")) fail(path, "missing required key \"action\"");
    {
        const std::string s = get_string(j["action"], path + ".action");
        auto action = parse_event_action(s);
        if (!action) fail(path + ".action", "unknown action \"" + s + "\"");
        e.action = *action;
    }
    if (e.action == EventAction::set_power) {
        if (!j.contains("p_kw")) fail(path, "set_power requires \"p_kw\"");
        e.p_kw = get_number(j["p_kw"], path + ".p_kw");
    }
    if (e.action == EventAction::set_mode) {
        if (!j.contains("mode")) fail(path, "set_mode requires \"mode\"");
        const std::string s = get_string(j["mode"], path + ".mode");
        auto mode = parse_node_mode(s);
        if (!mode) fail(path + ".mode", "unknown mode \"" + s + "\"");
        e.mode = *mode;
    }
    return e;
}

} // namespace

ScenarioSpec scenario_from_json(const std::string& text,
                                std::vector<Violation>& violations) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    expect_object(root, "");
    note_unknown_keys(root,
                      {"name", "t_end_s", "dt_s", "seed", "bus", "controller",
                       "nodes", "events"},
                      "", violations);

    ScenarioSpec spec;
    if (root.contains("name")) spec.name = get_string(root["name"], "name");
    if (root.contains("t_end_s")) spec.t_end_s = get_number(root["t_end_s"], "t_end_s");
    if (root.contains("dt_s")) spec.dt_s = get_number(root["dt_s"], "dt_s");
    if (root.contains("seed")) {
        const json& s = root["seed"];
        if (!s.is_number_unsigned()) fail("seed", "expected an unsigned integer");
        spec.seed = s.get<std::uint64_t>();
    }
    if (root.contains("bus")) spec.bus = parse_bus(root["bus"], "bus", violations);
    if (root.contains("controller")) {
        spec.controller = parse_controller(root["controller"], "controller", violations);
    }

    if (!root.contains("nodes")) fail("", "missing required key \"nodes\"");
    if (!root["nodes"].is_array()) fail("nodes", "expected an array");
    for (std::size_t i = 0; i < root["nodes"].size(); ++i) {
        std::ostringstream path;
        path << "nodes[" << i << "]";
        spec.nodes.push_back(parse_node(root["nodes"][i], path.str(), violations));
    }

    if (root.contains("events")) {
        if (!root["events"].is_array()) fail("events", "expected an array");
        for (std::size_t i = 0; i < root["events"].size(); ++i) {
            std::ostringstream path;
            path << "events[" << i << "]";
            spec.events.push_back(parse_event(root["events"][i], path.str(), violations));
        }
    }
    std::stable_sort(spec.events.begin(), spec.events.end(),
                     [](const EventSpec& a, const EventSpec& b) { return a.t_s < b.t_s; });
    return spec;
}

std::string scenario_to_json(const ScenarioSpec& spec) {
    ordered_json root;
    root["name"] = spec.name;
    root["t_end_s"] = spec.t_end_s;
    root["dt_s"] = spec.dt_s;
    root["seed"] = spec.seed;
    root["bus"] = {{"u_nominal_v", spec.bus.u_nominal_v},
                   {"du_set_v", spec.bus.du_set_v}};
    root["controller"] = {
        {"control_period_s", spec.controller.control_period_s},
        {"debounce_samples", spec.controller.debounce_samples},
        {"inhibit_window_s", spec.controller.inhibit_window_s},
        {"gamma_mode", gamma_mode_name(spec.controller.gamma_mode)}};

    root["nodes"] = ordered_json::array();
    for (const NodeSpec& n : spec.nodes) {
        ordered_json jn;
        jn["id"] = n.id;
        jn["kind"] = node_kind_name(n.kind);
        jn["initial_mode"] = node_mode_name(n.initial_mode);
        jn["u_ref_v"] = n.u_ref_v;
        jn["k_v_per_kw"] = n.k_v_per_kw;
        jn["p_rated_kw"] = n.p_rated_kw;
        jn["p_set_kw"] = n.p_set_kw;
        jn["weight"] = n.weight;
        if (n.soc_pct) jn["soc_pct"] = *n.soc_pct;
        if (n.capacity_kwh) jn["capacity_kwh"] = *n.capacity_kwh;
        jn["tau_s"] = n.tau_s;
        root["nodes"].push_back(std::move(jn));
    }

    root["events"] = ordered_json::array();
    for (const EventSpec& e : spec.events) {
        ordered_json je;
        je["t_s"] = e.t_s;
        je["target"] = e.target;
        je["action"] = event_action_name(e.action);
        if (e.action == EventAction::set_power) je["p_kw"] = e.p_kw;
        if (e.action == EventAction::set_mode) je["mode"] = node_mode_name(e.mode);
        root["events"].push_back(std::move(je));
    }

    return root.dump(2) + "\n";
}

ScenarioSpec load_scenario_file(const std::string& path,
                                std::vector<Violation>& violations) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read scenario file \"" + path + "\"");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return scenario_from_json(buffer.str(), violations);
}

} // namespace dcflex
