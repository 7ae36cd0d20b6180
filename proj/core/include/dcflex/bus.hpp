#pragma once

#include "dcflex/node.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace dcflex {

// Aggregate droop curve of the eligible voltage-source nodes. The bus
// behaves like one source with coefficient k_sys = 1 / sum(1/k_i), the
// parallel combination of the member virtual impedances.
struct SystemDroop {
    double k_sys_v_per_kw = 0.0;
    double u_ref_sys_v = 0.0; // no-load voltage, shifts included
    std::vector<std::string> members;
};

struct DroopMember {
    std::string id;
    DroopCurve curve;
};

// Throws BusCollapse when no member is given / no node is eligible.
SystemDroop aggregate_droop(std::span<const DroopMember> members);
SystemDroop aggregate_droop(std::span<const NodeState> nodes);

struct BusSolution {
    double u_v = 0.0;
    std::map<std::string, double> node_powers_kw; // every eligible node
    double p_cs_kw = 0.0;  // net fixed injection the solve balanced against
    double residual_kw = 0.0;
};

// Quasi-static balance: find u with sum_i (u_ref_i + k_i*shift_i - u)/k_i
// + p_cs = 0 over the voltage-source non-locked nodes. A node whose
// on-curve power exceeds its rating is pinned at the limit and the rest
// re-solved; with every node pinned the bus collapses.
BusSolution solve_bus(std::span<const NodeState> nodes, double p_cs_kw);

} // namespace dcflex
