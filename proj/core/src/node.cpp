#include "dcflex/node.hpp"

#include "dcflex/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dcflex {

double droop_voltage(const DroopCurve& curve, double p_out_kw) {
    return curve.u_ref_v - curve.k_v_per_kw * (p_out_kw - curve.shift_kw);
}

NodeState make_node(const NodeSpec& spec) {
    NodeState node;
    node.spec = spec;
    node.mode = spec.initial_mode;
    node.mode_before_lock = spec.initial_mode == NodeMode::locked
                                ? NodeMode::voltage_source
                                : spec.initial_mode;
    node.curve = DroopCurve{spec.u_ref_v, spec.k_v_per_kw, 0.0};
    node.soc_pct = spec.soc_pct;
    return node;
}

NodeState apply_shift(NodeState node, double delta_p_kw) {
    if (node.locked()) {
        throw CommandRejected("shift rejected: node \"" + node.spec.id +
                              "\" is locked");
    }
    if (node.mode != NodeMode::voltage_source) {
        throw CommandRejected("shift rejected: node \"" + node.spec.id +
                              "\" is not in voltage-source mode");
    }
    node.curve.shift_kw += delta_p_kw;
    return node;
}

NodeState step_node(NodeState node, double p_equilibrium_kw, double dt_s) {
    double target = p_equilibrium_kw;
    if (node.mode == NodeMode::current_source) target = node.spec.p_set_kw;
    if (node.mode == NodeMode::locked) target = 0.0;

    const double alpha = 1.0 - std::exp(-dt_s / node.spec.tau_s);
    double p = node.p_out_kw + alpha * (target - node.p_out_kw);
    p = std::clamp(p, -node.spec.p_rated_kw, node.spec.p_rated_kw);

    node.p_target_kw = target;
    node.p_out_kw = p;

    if (is_storage(node.spec.kind) && node.soc_pct && node.spec.capacity_kwh) {
        const double drained_pct =
            100.0 * p * dt_s / (3600.0 * *node.spec.capacity_kwh);
        node.soc_pct = std::clamp(*node.soc_pct - drained_pct, 0.0, 100.0);
    }
    return node;
}

} // namespace dcflex
