#include "dcflex/controller.hpp"

#include "dcflex/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dcflex {

std::optional<double> check_trip(double u_v, double u_nominal_v, double du_set_v) {
    const double delta = u_v - u_nominal_v;
    if (std::abs(delta) > du_set_v) return delta;
    return std::nullopt;
}

double estimate_unbalance(double delta_u_v, const SystemDroop& sys) {
    return -delta_u_v / sys.k_sys_v_per_kw;
}

double power_reserve(double p_rated_kw, double p_kw) {
    return std::abs(p_rated_kw - p_kw) / p_rated_kw;
}

double energy_reserve(NodeKind kind, std::optional<double> soc_pct,
                      double requested_sign, GammaMode mode) {
    if (!is_storage(kind)) return 1.0;
    const double soc = soc_pct.value_or(100.0);
    if (mode == GammaMode::direction_aware && requested_sign < 0.0) {
        return (100.0 - soc) / 100.0; // absorbing: room left in the store
    }
    return soc / 100.0;
}

double competition_coefficient(double delta, double beta, double gamma, bool locked) {
    if (locked) return 0.0;
    return delta * beta * gamma;
}

namespace {

bool coeff_equal(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

// Equal split of `remaining` across a tie group, re-splitting each
// saturated member's overflow across the rest.
void fill_group(std::vector<std::pair<const CompetitionEntry*, double*>>& group,
                double& remaining) {
    std::vector<std::size_t> open(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) open[i] = i;

    while (remaining > 0.0 && !open.empty()) {
        const double share = remaining / static_cast<double>(open.size());
        bool saturated_any = false;
        for (auto it = open.begin(); it != open.end();) {
            const double headroom = group[*it].first->headroom_kw;
            if (headroom <= share) {
                *group[*it].second = headroom;
                remaining -= headroom;
                it = open.erase(it);
                saturated_any = true;
            } else {
                ++it;
            }
        }
        if (!saturated_any) {
            for (std::size_t idx : open) *group[idx].second = share;
            remaining = 0.0;
            break;
        }
        if (remaining < 0.0) remaining = 0.0;
    }
}

} // namespace

AllocationPlan rank_and_allocate(double requested_kw,
                                 std::vector<CompetitionEntry> entries) {
    AllocationPlan plan;
    plan.requested_kw = requested_kw;
    if (requested_kw == 0.0) return plan;

    const double sign = requested_kw > 0.0 ? 1.0 : -1.0;

    std::vector<CompetitionEntry> ranked;
    std::vector<CompetitionEntry> excluded;
    for (CompetitionEntry& e : entries) {
        (e.locked ? excluded : ranked).push_back(std::move(e));
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const CompetitionEntry& a, const CompetitionEntry& b) {
                  if (a.coeff != b.coeff) return a.coeff > b.coeff;
                  return a.node_id < b.node_id;
              });

    std::vector<double> amounts(ranked.size(), 0.0);
    double remaining = std::abs(requested_kw);

    std::size_t i = 0;
    while (i < ranked.size()) {
        std::size_t j = i + 1;
        while (j < ranked.size() && coeff_equal(ranked[i].coeff, ranked[j].coeff)) ++j;
        if (remaining > 0.0) {
            std::vector<std::pair<const CompetitionEntry*, double*>> group;
            for (std::size_t g = i; g < j; ++g) {
                group.emplace_back(&ranked[g], &amounts[g]);
            }
            fill_group(group, remaining);
        }
        i = j;
    }

    double allocated = 0.0;
    for (std::size_t g = 0; g < ranked.size(); ++g) {
        plan.entries.push_back({ranked[g].node_id, sign * amounts[g]});
        allocated += sign * amounts[g];
    }
    for (const CompetitionEntry& e : excluded) {
        plan.entries.push_back({e.node_id, 0.0});
    }
    plan.deficit_kw = requested_kw - allocated;
    return plan;
}

Controller::Controller(BusSpec bus, ControllerSpec cfg,
                       std::span<const NodeSpec> roster)
    : bus_(bus), cfg_(cfg) {
    for (const NodeSpec& n : roster) {
        order_.push_back(n.id);
        config_[n.id] = NodeConfig{n.kind, n.u_ref_v, n.k_v_per_kw,
                                   n.p_rated_kw, n.weight};
        commanded_shift_kw_[n.id] = 0.0;
    }
}

void Controller::ingest(const Message& msg) {
    if (const auto* t = std::get_if<Telemetry>(&msg)) {
        latest_[t->node_id] = *t;
    } else if (const auto* l = std::get_if<LockNotice>(&msg)) {
        auto it = latest_.find(l->node_id);
        if (it != latest_.end()) {
            it->second.locked = true;
            it->second.mode = NodeMode::locked;
        }
    }
}

std::optional<std::vector<ShiftCommand>>
Controller::control_cycle(double now_s, double measured_u_v,
                          std::span<const Message> inbox) {
    for (const Message& msg : inbox) ingest(msg);

    const auto delta_u = check_trip(measured_u_v, bus_.u_nominal_v, bus_.du_set_v);
    if (!delta_u) {
        counter_ = 0;
        return std::nullopt;
    }
    if (counter_ < cfg_.debounce_samples) ++counter_;
    if (counter_ < cfg_.debounce_samples) return std::nullopt;
    if (last_dispatch_t_s_ &&
        now_s - *last_dispatch_t_s_ < cfg_.inhibit_window_s) {
        return std::nullopt;
    }

    // Aggregate droop of the nodes currently reporting voltage-source
    // mode; shifts come from this controller's own command ledger.
    std::vector<DroopMember> members;
    for (const std::string& id : order_) {
        auto snap = latest_.find(id);
        if (snap == latest_.end()) continue;
        if (snap->second.mode != NodeMode::voltage_source || snap->second.locked) continue;
        const NodeConfig& nc = config_[id];
        members.push_back({id, DroopCurve{nc.u_ref_v, nc.k_v_per_kw,
                                          commanded_shift_kw_[id]}});
    }

    SystemDroop sys;
    try {
        sys = aggregate_droop(members);
    } catch (const BusCollapse& e) {
        if (!last_alarm_t_s_ ||
            now_s - *last_alarm_t_s_ >= cfg_.inhibit_window_s) {
            alarms_.push_back("bus collapse at control sample: " +
                              std::string(e.what()));
            last_alarm_t_s_ = now_s;
        }
        return std::nullopt;
    }

    const double requested = estimate_unbalance(*delta_u, sys);
    const double direction = requested >= 0.0 ? 1.0 : -1.0;

    std::vector<CompetitionEntry> entries;
    for (const DroopMember& m : members) {
        const NodeConfig& nc = config_[m.id];
        const Telemetry& snap = latest_[m.id];

        CompetitionEntry e;
        e.node_id = m.id;
        e.delta = nc.weight;
        e.beta = power_reserve(nc.p_rated_kw, snap.p_kw);
        e.gamma = energy_reserve(nc.kind, snap.soc_pct, direction, cfg_.gamma_mode);
        e.locked = false;
        e.coeff = competition_coefficient(e.delta, e.beta, e.gamma, e.locked);
        // Headroom at the restored operating point: project the reported
        // power along the droop slope to nominal voltage. At trip time the
        // node already carries part of the disturbance; that part returns
        // to the allocation budget once the voltage is pulled back.
        const double p_at_nominal =
            snap.p_kw + (snap.u_v - bus_.u_nominal_v) / nc.k_v_per_kw;
        e.headroom_kw = std::max(0.0, direction > 0.0
                                          ? nc.p_rated_kw - p_at_nominal
                                          : nc.p_rated_kw + p_at_nominal);
        entries.push_back(std::move(e));
    }

    AllocationPlan plan = rank_and_allocate(requested, entries);

    std::vector<ShiftCommand> commands;
    for (const Allocation& a : plan.entries) {
        if (a.delta_p_kw == 0.0) continue;
        commands.push_back({a.node_id, a.delta_p_kw});
        commanded_shift_kw_[a.node_id] += a.delta_p_kw;
        dispatches_.push_back({now_s, a.node_id, a.delta_p_kw});
    }

    trips_.push_back({now_s, measured_u_v, *delta_u});

    DecisionRecord record;
    record.t_s = now_s;
    record.measured_u_v = measured_u_v;
    record.requested_kw = requested;
    record.deficit_kw = plan.deficit_kw;
    std::sort(entries.begin(), entries.end(),
              [](const CompetitionEntry& a, const CompetitionEntry& b) {
                  if (a.coeff != b.coeff) return a.coeff > b.coeff;
                  return a.node_id < b.node_id;
              });
    record.ranking = std::move(entries);
    decisions_.push_back(std::move(record));

    ++dispatch_count_;
    last_dispatch_t_s_ = now_s;
    counter_ = 0;
    return commands;
}

} // namespace dcflex
