#pragma once

#include "dcflex/bus.hpp"
#include "dcflex/comms.hpp"

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dcflex {

struct TripEvent {
    double t_s = 0.0;
    double u_v = 0.0;
    double delta_u_v = 0.0; // u - u_nominal, beyond the set band
};

struct CompetitionEntry {
    std::string node_id;
    double delta = 1.0;       // operator weight in [0,1]
    double beta = 0.0;        // power reserve rate
    double gamma = 1.0;       // energy reserve rate in [0,1]
    double coeff = 0.0;       // delta * beta * gamma, 0 when locked
    double headroom_kw = 0.0; // allocatable power in the required direction
    bool locked = false;
};

struct Allocation {
    std::string node_id;
    double delta_p_kw = 0.0;
};

struct AllocationPlan {
    double requested_kw = 0.0;
    std::vector<Allocation> entries; // ranked order, zero allocations kept
    double deficit_kw = 0.0;         // requested - sum(allocated)
};

// Returns u - u_nominal when the deviation leaves the set band, i.e.
// |u - u_nominal| > du_set; no value inside the band.
std::optional<double> check_trip(double u_v, double u_nominal_v, double du_set_v);

// Power the system droop curve says is missing: -delta_u / k_sys.
// Positive means additional injection is required.
double estimate_unbalance(double delta_u_v, const SystemDroop& sys);

// beta = |p_rated - p| / p_rated.
double power_reserve(double p_rated_kw, double p_kw);

// Energy reserve rate, normalized to [0,1]. Non-storage kinds are fixed
// at 1. requested_sign is the sign of the power being allocated.
double energy_reserve(NodeKind kind, std::optional<double> soc_pct,
                      double requested_sign, GammaMode mode);

double competition_coefficient(double delta, double beta, double gamma, bool locked);

// Greedy fill in descending coefficient order, each node capped at its
// headroom. Entries whose coefficients agree to a relative 1e-9 form a
// tie group and split the remaining request equally, re-splitting any
// member's overflow across the rest of the group. Whatever exceeds the
// total headroom is returned as deficit.
AllocationPlan rank_and_allocate(double requested_kw,
                                 std::vector<CompetitionEntry> entries);

struct DispatchRecord {
    double t_s = 0.0;
    std::string node_id;
    double delta_p_kw = 0.0;
};

// Full record of one dispatch decision, kept for reporting.
struct DecisionRecord {
    double t_s = 0.0;
    double measured_u_v = 0.0;
    double requested_kw = 0.0;
    double deficit_kw = 0.0;
    std::vector<CompetitionEntry> ranking; // descending coefficient order
};

// Event-triggered supervisory controller: debounced trip detection,
// unbalance estimation from the aggregate droop, competition ranking and
// headroom-capped dispatch, with a minimum inhibit window between
// dispatches. One sequential state machine; call control_cycle once per
// control period.
class Controller {
public:
    Controller(BusSpec bus, ControllerSpec cfg, std::span<const NodeSpec> roster);

    // One sampling step. `inbox` holds the field-bus messages delivered
    // since the previous cycle (telemetry and lock notices; anything else
    // is ignored). Returns the shift commands of a dispatch, an empty
    // list for a dispatch that could not allocate anything, or nothing.
    std::optional<std::vector<ShiftCommand>>
    control_cycle(double now_s, double measured_u_v, std::span<const Message> inbox);

    bool armed() const { return counter_ > 0; }
    int dispatch_count() const { return dispatch_count_; }
    const std::vector<TripEvent>& trips() const { return trips_; }
    const std::vector<DispatchRecord>& dispatches() const { return dispatches_; }
    const std::vector<DecisionRecord>& decisions() const { return decisions_; }
    const std::vector<std::string>& alarms() const { return alarms_; }

private:
    struct NodeConfig {
        NodeKind kind = NodeKind::grid_converter;
        double u_ref_v = 0.0;
        double k_v_per_kw = 1.0;
        double p_rated_kw = 0.0;
        double weight = 1.0;
    };

    void ingest(const Message& msg);

    BusSpec bus_;
    ControllerSpec cfg_;
    std::vector<std::string> order_; // roster order, for deterministic output
    std::unordered_map<std::string, NodeConfig> config_;
    std::unordered_map<std::string, Telemetry> latest_;
    std::unordered_map<std::string, double> commanded_shift_kw_;

    int counter_ = 0; // consecutive out-of-band samples
    std::optional<double> last_dispatch_t_s_;
    std::optional<double> last_alarm_t_s_;
    int dispatch_count_ = 0;

    std::vector<TripEvent> trips_;
    std::vector<DispatchRecord> dispatches_;
    std::vector<DecisionRecord> decisions_;
    std::vector<std::string> alarms_;
};

} // namespace dcflex
