#pragma once

#include "dcflex/scenario.hpp"

namespace dcflex {

// Voltage-power law of one port: u = u_ref - k * (p_out - shift).
// shift is the cumulative horizontal translation commanded by the
// controller; a positive shift moves the curve toward higher power.
struct DroopCurve {
    double u_ref_v = kDefaultUNominalV;
    double k_v_per_kw = 1.0;
    double shift_kw = 0.0;

    bool operator==(const DroopCurve&) const = default;
};

double droop_voltage(const DroopCurve& curve, double p_out_kw);

// Behavioral state of one converter port. Stepping is a pure function
// old state -> new state; values are safe to copy across threads.
struct NodeState {
    NodeSpec spec;
    NodeMode mode = NodeMode::voltage_source;
    NodeMode mode_before_lock = NodeMode::voltage_source;
    DroopCurve curve;
    double p_out_kw = 0.0;    // actual output (kW, injection-positive)
    double p_target_kw = 0.0; // equilibrium the lag is tracking
    std::optional<double> soc_pct;

    bool locked() const { return mode == NodeMode::locked; }
};

NodeState make_node(const NodeSpec& spec);

// Adds delta_p to the cumulative curve shift. Only a non-locked
// voltage-source node can accept a shift; otherwise throws CommandRejected.
NodeState apply_shift(NodeState node, double delta_p_kw);

// First-order lag of p_out toward the operating equilibrium, hard power
// clamp at +/-p_rated, SOC integration for storage kinds. The equilibrium
// argument applies to voltage-source mode; current-source tracks p_set and
// a locked node decays to zero.
NodeState step_node(NodeState node, double p_equilibrium_kw, double dt_s);

} // namespace dcflex
