#include "dcflex/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace dcflex {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    std::string s(buf);
    if (s == "-0.000") s = "0.000";
    return s;
}

const char* mode_token(NodeMode mode) {
    switch (mode) {
    case NodeMode::voltage_source: return "VS";
    case NodeMode::current_source: return "CS";
    case NodeMode::locked: return "LK";
    }
    return "?";
}

} // namespace

std::string trace_to_csv(const Trace& trace) {
    std::string out;
    out.reserve(trace.rows.size() * 96 + 128);

    out += "t_s,bus_v";
    for (const std::string& id : trace.node_ids) {
        out += "," + id + "_p_kw," + id + "_mode," + id + "_soc_pct," + id + "_shift_kw";
    }
    out += ",tripped,dispatch_count\n";

    for (const TraceRow& row : trace.rows) {
        out += fixed6(row.t_s);
        out += ",";
        out += fixed6(row.bus_u_v);
        for (const TraceNodeSample& n : row.nodes) {
            out += ",";
            out += fixed6(n.p_out_kw);
            out += ",";
            out += mode_token(n.mode);
            out += ",";
            if (n.soc_pct) out += fixed6(*n.soc_pct);
            out += ",";
            out += fixed6(n.shift_kw);
        }
        out += row.tripped ? ",1," : ",0,";
        out += std::to_string(row.dispatch_count);
        out += "\n";
    }
    return out;
}

std::string trace_to_gnuplot(const Trace& trace) {
    std::string out;
    out.reserve(trace.rows.size() * 80 + 128);

    out += "# t_s bus_v";
    for (const std::string& id : trace.node_ids) {
        out += " " + id + "_p_kw " + id + "_soc_pct " + id + "_shift_kw";
    }
    out += "\n";

    for (const TraceRow& row : trace.rows) {
        out += fixed6(row.t_s);
        out += " ";
        out += fixed6(row.bus_u_v);
        for (const TraceNodeSample& n : row.nodes) {
            out += " ";
            out += fixed6(n.p_out_kw);
            out += " ";
            out += fixed6(n.soc_pct.value_or(100.0));
            out += " ";
            out += fixed6(n.shift_kw);
        }
        out += "\n";
    }
    return out;
}

std::string summary_to_json(const Summary& summary) {
    nlohmann::ordered_json root;
    root["scenario"] = summary.scenario;
    root["final_bus_v"] = summary.final_u_v;

    nlohmann::ordered_json steady = nlohmann::ordered_json::object();
    for (const auto& [id, p] : summary.steady_p_kw) steady[id] = p;
    root["steady_power_kw"] = std::move(steady);

    root["trips"] = nlohmann::ordered_json::array();
    for (const TripEvent& trip : summary.trips) {
        root["trips"].push_back(
            {{"t_s", trip.t_s}, {"u_v", trip.u_v}, {"delta_u_v", trip.delta_u_v}});
    }

    root["dispatches"] = nlohmann::ordered_json::array();
    for (const DispatchRecord& d : summary.dispatches) {
        root["dispatches"].push_back(
            {{"t_s", d.t_s}, {"node", d.node_id}, {"delta_p_kw", d.delta_p_kw}});
    }

    root["total_deficit_kw"] = summary.total_deficit_kw;
    root["collapsed"] = summary.collapsed;
    if (summary.collapse_t_s) {
        root["collapse_t_s"] = *summary.collapse_t_s;
    } else {
        root["collapse_t_s"] = nullptr;
    }
    root["alarms"] = summary.alarms;
    return root.dump(2) + "\n";
}

std::string render_report(const ScenarioSpec& spec, const Summary& summary) {
    std::ostringstream os;
    os << "scenario: " << summary.scenario << "   t_end: " << spec.t_end_s
       << " s   dt: " << spec.dt_s << " s\n";
    if (summary.collapsed) {
        os << "BUS COLLAPSE at t=" << fixed3(summary.collapse_t_s.value_or(0.0))
           << " s (no eligible voltage-source node)\n";
    }
    os << "final bus voltage: " << fixed3(summary.final_u_v) << " V (nominal "
       << fixed3(spec.bus.u_nominal_v) << " V, band +/-"
       << fixed3(spec.bus.du_set_v) << " V)\n";

    os << "node        kind             steady p (kW)\n";
    for (const NodeSpec& n : spec.nodes) {
        auto it = summary.steady_p_kw.find(n.id);
        const double steady = it != summary.steady_p_kw.end() ? it->second : 0.0;
        char line[96];
        std::snprintf(line, sizeof(line), "%-11s %-16s %12.3f\n", n.id.c_str(),
                      node_kind_name(n.kind).c_str(), steady);
        os << line;
    }

    os << "trips: " << summary.trips.size();
    for (const TripEvent& t : summary.trips) {
        os << "  [t=" << fixed3(t.t_s) << " u=" << fixed3(t.u_v)
           << " dU=" << fixed3(t.delta_u_v) << "]";
    }
    os << "\ndispatches: " << summary.dispatches.size();
    for (const DispatchRecord& d : summary.dispatches) {
        os << "  [t=" << fixed3(d.t_s) << " " << d.node_id << " "
           << (d.delta_p_kw >= 0 ? "+" : "") << fixed3(d.delta_p_kw) << " kW]";
    }
    os << "\nunallocated deficit: " << fixed3(summary.total_deficit_kw) << " kW\n";
    if (!summary.alarms.empty()) {
        os << "alarms:\n";
        for (const std::string& a : summary.alarms) os << "  " << a << "\n";
    }
    return os.str();
}

} // namespace dcflex
