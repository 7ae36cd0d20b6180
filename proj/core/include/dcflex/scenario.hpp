#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dcflex {

// Module defaults used when a scenario leaves a field unspecified.
inline constexpr double kDefaultUNominalV = 750.0;
inline constexpr double kDefaultDuSetV = 2.0;
inline constexpr double kDefaultTauS = 0.005;
inline constexpr double kDefaultControlPeriodS = 0.01;
inline constexpr int kDefaultDebounceSamples = 3;
inline constexpr double kDefaultInhibitWindowS = 0.2;
inline constexpr double kDefaultDtS = 0.001;
inline constexpr double kDefaultTEndS = 5.0;
inline constexpr double kDefaultStorageCapacityKwh = 50.0;

enum class NodeKind { grid_converter, battery, ev_charger };
enum class NodeMode { voltage_source, current_source, locked };

// How the energy reserve rate treats storage SOC:
//   soc_literal     — gamma = soc/100 regardless of the request direction
//   direction_aware — gamma = soc/100 for injection, (100-soc)/100 for absorption
enum class GammaMode { soc_literal, direction_aware };

enum class EventAction { set_power, set_mode, lock, unlock, shed };

bool is_storage(NodeKind kind);

std::string node_kind_name(NodeKind kind);
std::string node_mode_name(NodeMode mode);
std::string gamma_mode_name(GammaMode mode);
std::string event_action_name(EventAction action);

std::optional<NodeKind> parse_node_kind(const std::string& s);
std::optional<NodeMode> parse_node_mode(const std::string& s);
std::optional<GammaMode> parse_gamma_mode(const std::string& s);
std::optional<EventAction> parse_event_action(const std::string& s);

struct BusSpec {
    double u_nominal_v = kDefaultUNominalV;
    double du_set_v = kDefaultDuSetV;

    bool operator==(const BusSpec&) const = default;
};

// One converter port on the DC bus. Power is injection-positive
// everywhere: an EV drawing charge or an AC export is a negative p_set.
struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::grid_converter;
    NodeMode initial_mode = NodeMode::voltage_source;
    double u_ref_v = kDefaultUNominalV; // rated voltage (V)
    double k_v_per_kw = 1.0;            // droop coefficient (V per kW)
    double p_rated_kw = 0.0;            // rated power magnitude (kW)
    double p_set_kw = 0.0;              // current-source setpoint (kW, signed)
    double weight = 1.0;                // allocation weight in [0,1]
    std::optional<double> soc_pct;      // storage kinds only, [0,100]
    std::optional<double> capacity_kwh; // storage kinds only
    double tau_s = kDefaultTauS;        // first-order response time constant (s)

    bool operator==(const NodeSpec&) const = default;
};

struct ControllerSpec {
    double control_period_s = kDefaultControlPeriodS;
    int debounce_samples = kDefaultDebounceSamples;
    double inhibit_window_s = kDefaultInhibitWindowS;
    GammaMode gamma_mode = GammaMode::soc_literal;

    bool operator==(const ControllerSpec&) const = default;
};

struct EventSpec {
    double t_s = 0.0;
    std::string target;
    EventAction action = EventAction::set_power;
    double p_kw = 0.0;                        // set_power payload
    NodeMode mode = NodeMode::voltage_source; // set_mode payload

    bool operator==(const EventSpec&) const = default;
};

struct ScenarioSpec {
    std::string name = "scenario";
    double t_end_s = kDefaultTEndS;
    double dt_s = kDefaultDtS;
    std::uint64_t seed = 1;
    BusSpec bus;
    ControllerSpec controller;
    std::vector<NodeSpec> nodes;
    std::vector<EventSpec> events; // sorted by t_s

    bool operator==(const ScenarioSpec&) const = default;
};

// One invariant breach, with a path-like locator such as
// "nodes[2].k_v_per_kw". Violations are data, not failures.
struct Violation {
    std::string path;
    std::string message;

    bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_scenario(const ScenarioSpec& spec);

// The three built-in test cases on the shared 750 V / 60-15-15 kW roster.
// Throws std::invalid_argument unless n is 1, 2 or 3.
ScenarioSpec builtin_case(int n);

} // namespace dcflex
