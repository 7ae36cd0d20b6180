#include "dcflex/engine.hpp"

#include "dcflex/bus.hpp"
#include "dcflex/errors.hpp"
#include "dcflex/node.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dcflex {

namespace {

SimNode* find_node(std::vector<SimNode>& nodes, const std::string& id) {
    for (SimNode& n : nodes) {
        if (n.state.spec.id == id) return &n;
    }
    return nullptr;
}

} // namespace

void apply_event(std::vector<SimNode>& nodes, const EventSpec& event) {
    SimNode* target = find_node(nodes, event.target);
    if (!target || !target->active) return; // validated at load; shed is final
    NodeState& node = target->state;

    switch (event.action) {
    case EventAction::set_power:
        node.spec.p_set_kw = event.p_kw;
        if (node.mode == NodeMode::locked) {
            node.mode_before_lock = NodeMode::current_source;
        } else {
            node.mode = NodeMode::current_source;
        }
        break;
    case EventAction::set_mode:
        if (event.mode == NodeMode::locked) {
            if (!node.locked()) {
                node.mode_before_lock = node.mode;
                node.mode = NodeMode::locked;
            }
        } else {
            node.mode = event.mode;
        }
        break;
    case EventAction::lock:
        if (!node.locked()) {
            node.mode_before_lock = node.mode;
            node.mode = NodeMode::locked;
        }
        break;
    case EventAction::unlock:
        if (node.locked()) node.mode = node.mode_before_lock;
        break;
    case EventAction::shed:
        target->active = false;
        node.p_out_kw = 0.0; // breaker opens, no decay
        node.p_target_kw = 0.0;
        break;
    }
}

RunResult run(const ScenarioSpec& spec, const EngineOptions& options) {
    if (auto violations = validate_scenario(spec); !violations.empty()) {
        std::ostringstream os;
        os << "invalid scenario:";
        for (const Violation& v : violations) os << " [" << v.path << ": " << v.message << "]";
        throw std::invalid_argument(os.str());
    }

    const double dt = spec.dt_s;
    const long n_steps = std::lround(spec.t_end_s / dt);
    const long period_steps =
        std::max(1l, std::lround(spec.controller.control_period_s / dt));

    Channel uplink(options.uplink.value_or(
        ChannelConfig{0.01, 0.0, spec.seed}));
    Channel downlink(options.downlink.value_or(
        ChannelConfig{0.01, 0.0, spec.seed ^ 0x9e3779b97f4a7c15ull}));

    Controller controller(spec.bus, spec.controller, spec.nodes);

    std::vector<SimNode> nodes;
    nodes.reserve(spec.nodes.size());
    for (const NodeSpec& ns : spec.nodes) nodes.push_back({make_node(ns), true});

    RunResult result;
    result.trace.node_ids.reserve(nodes.size());
    for (const SimNode& n : nodes) result.trace.node_ids.push_back(n.state.spec.id);
    result.trace.rows.reserve(static_cast<std::size_t>(n_steps) + 1);
    result.summary.scenario = spec.name;

    std::size_t next_event = 0;
    std::vector<NodeState> live; // scratch roster handed to the solver

    for (long i = 0; i <= n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;

        // 1. scenario events due at or before this step
        while (next_event < spec.events.size() && spec.events[next_event].t_s <= t) {
            const EventSpec& ev = spec.events[next_event];
            apply_event(nodes, ev);
            if (ev.action == EventAction::lock ||
                (ev.action == EventAction::set_mode && ev.mode == NodeMode::locked)) {
                uplink.post(t, LockNotice{ev.target});
            }
            ++next_event;
        }

        // 2. deliver due commands to the nodes
        for (const Message& msg : downlink.poll_due(t)) {
            const auto* cmd = std::get_if<ShiftCommand>(&msg);
            if (!cmd) continue;
            SimNode* target = find_node(nodes, cmd->node_id);
            if (!target || !target->active) continue;
            try {
                target->state = apply_shift(target->state, cmd->delta_p_kw);
            } catch (const CommandRejected& e) {
                result.summary.alarms.push_back(e.what());
            }
        }

        // 3. quasi-static bus solve; current-source and locked nodes enter
        //    as fixed injections at their present output
        live.clear();
        double p_fixed = 0.0;
        for (const SimNode& n : nodes) {
            if (!n.active) continue;
            live.push_back(n.state);
            if (n.state.mode != NodeMode::voltage_source || n.state.locked()) {
                p_fixed += n.state.p_out_kw;
            }
        }
        BusSolution bus;
        try {
            bus = solve_bus(live, p_fixed);
        } catch (const BusCollapse&) {
            result.summary.collapsed = true;
            result.summary.collapse_t_s = t;
            break;
        }

        // 4. first-order lag toward the solved equilibrium
        for (SimNode& n : nodes) {
            if (!n.active) continue;
            double p_eq = 0.0;
            if (auto it = bus.node_powers_kw.find(n.state.spec.id);
                it != bus.node_powers_kw.end()) {
                p_eq = it->second;
            }
            n.state = step_node(n.state, p_eq, dt);
        }

        // 5. control sample: telemetry out, due messages in, one cycle
        if (i % period_steps == 0) {
            for (const SimNode& n : nodes) {
                if (!n.active) continue;
                Telemetry tm;
                tm.node_id = n.state.spec.id;
                tm.u_v = bus.u_v;
                tm.p_kw = n.state.p_out_kw;
                tm.mode = n.state.mode;
                tm.soc_pct = n.state.soc_pct.value_or(100.0);
                tm.locked = n.state.locked();
                uplink.post(t, std::move(tm));
            }
            const std::vector<Message> inbox = uplink.poll_due(t);
            if (auto commands = controller.control_cycle(t, bus.u_v, inbox)) {
                for (const ShiftCommand& cmd : *commands) downlink.post(t, cmd);
            }
        }

        // 6. record
        TraceRow row;
        row.t_s = t;
        row.bus_u_v = bus.u_v;
        row.nodes.reserve(nodes.size());
        for (const SimNode& n : nodes) {
            row.nodes.push_back({n.state.p_out_kw, n.state.mode, n.state.soc_pct,
                                 n.state.curve.shift_kw});
        }
        row.tripped = controller.armed();
        row.dispatch_count = controller.dispatch_count();
        result.trace.rows.push_back(std::move(row));
    }

    Summary& sum = result.summary;
    sum.trips = controller.trips();
    sum.dispatches = controller.dispatches();
    sum.decisions = controller.decisions();
    for (const std::string& alarm : controller.alarms()) sum.alarms.push_back(alarm);
    for (const DecisionRecord& d : controller.decisions()) {
        sum.total_deficit_kw += std::abs(d.deficit_kw);
    }

    const std::vector<TraceRow>& rows = result.trace.rows;
    if (!rows.empty()) {
        sum.final_u_v = rows.back().bus_u_v;
        const std::size_t tail = std::max<std::size_t>(1, rows.size() / 10);
        const std::size_t first = rows.size() - tail;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            double acc = 0.0;
            for (std::size_t r = first; r < rows.size(); ++r) {
                acc += rows[r].nodes[k].p_out_kw;
            }
            sum.steady_p_kw[result.trace.node_ids[k]] =
                acc / static_cast<double>(tail);
        }
    }

    return result;
}

} // namespace dcflex
