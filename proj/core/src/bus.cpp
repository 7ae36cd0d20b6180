#include "dcflex/bus.hpp"

#include "dcflex/errors.hpp"

#include <cmath>
#include <cstdlib>

namespace dcflex {

namespace {

bool eligible(const NodeState& node) {
    return node.mode == NodeMode::voltage_source && !node.locked();
}

SystemDroop combine(std::span<const DroopMember> members) {
    if (members.empty()) {
        throw BusCollapse("no eligible voltage-source node on the bus");
    }
    double inv_sum = 0.0;   // sum of 1/k_i, the total virtual conductance
    double ref_sum = 0.0;   // sum of (u_ref_i + k_i*shift_i)/k_i
    SystemDroop sys;
    sys.members.reserve(members.size());
    for (const DroopMember& m : members) {
        inv_sum += 1.0 / m.curve.k_v_per_kw;
        ref_sum += (m.curve.u_ref_v + m.curve.k_v_per_kw * m.curve.shift_kw) /
                   m.curve.k_v_per_kw;
        sys.members.push_back(m.id);
    }
    sys.k_sys_v_per_kw = 1.0 / inv_sum;
    sys.u_ref_sys_v = ref_sum / inv_sum;
    return sys;
}

} // namespace

SystemDroop aggregate_droop(std::span<const DroopMember> members) {
    return combine(members);
}

SystemDroop aggregate_droop(std::span<const NodeState> nodes) {
    std::vector<DroopMember> members;
    for (const NodeState& n : nodes) {
        if (eligible(n)) members.push_back({n.spec.id, n.curve});
    }
    return combine(members);
}

BusSolution solve_bus(std::span<const NodeState> nodes, double p_cs_kw) {
    // Active set = eligible nodes still on their droop curve. Nodes driven
    // past their rating are pinned at the limit, added to the fixed
    // injection, and the rest re-solved; each pass pins at least one node.
    std::vector<const NodeState*> active;
    for (const NodeState& n : nodes) {
        if (eligible(n)) active.push_back(&n);
    }
    if (active.empty()) {
        throw BusCollapse("no eligible voltage-source node on the bus");
    }

    BusSolution sol;
    sol.p_cs_kw = p_cs_kw;
    double pinned_kw = 0.0;

    for (;;) {
        double inv_sum = 0.0;
        double num = p_cs_kw + pinned_kw;
        for (const NodeState* n : active) {
            inv_sum += 1.0 / n->curve.k_v_per_kw;
            num += n->curve.u_ref_v / n->curve.k_v_per_kw + n->curve.shift_kw;
        }
        const double u = num / inv_sum;

        bool pinned_any = false;
        for (auto it = active.begin(); it != active.end();) {
            const NodeState* n = *it;
            const double p = (n->curve.u_ref_v +
                              n->curve.k_v_per_kw * n->curve.shift_kw - u) /
                             n->curve.k_v_per_kw;
            const double limit = n->spec.p_rated_kw;
            if (std::abs(p) > limit * (1.0 + 1e-12)) {
                const double clamp = p > 0.0 ? limit : -limit;
                sol.node_powers_kw[n->spec.id] = clamp;
                pinned_kw += clamp;
                it = active.erase(it);
                pinned_any = true;
            } else {
                ++it;
            }
        }
        if (!pinned_any) {
            sol.u_v = u;
            for (const NodeState* n : active) {
                sol.node_powers_kw[n->spec.id] =
                    (n->curve.u_ref_v + n->curve.k_v_per_kw * n->curve.shift_kw - u) /
                    n->curve.k_v_per_kw;
            }
            break;
        }
        if (active.empty()) {
            throw BusCollapse("every droop node saturated; bus has no operating point");
        }
    }

    double balance = p_cs_kw;
    for (const auto& [id, p] : sol.node_powers_kw) balance += p;
    sol.residual_kw = balance;
    return sol;
}

} // namespace dcflex
