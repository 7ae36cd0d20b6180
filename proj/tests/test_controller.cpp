#include "dcflex/controller.hpp"
#include "dcflex/errors.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace dcflex;

TEST_CASE("check_trip fires only outside the band") {
    CHECK(*check_trip(738.0, 750.0, 2.0) == doctest::Approx(-12.0));
    CHECK_FALSE(check_trip(751.0, 750.0, 2.0).has_value());
    CHECK(*check_trip(753.0, 750.0, 2.0) == doctest::Approx(3.0));
    // the band edge itself does not trip
    CHECK_FALSE(check_trip(752.0, 750.0, 2.0).has_value());
    CHECK_FALSE(check_trip(748.0, 750.0, 2.0).has_value());
}

TEST_CASE("estimate_unbalance converts sag to missing power") {
    SystemDroop sys;
    sys.k_sys_v_per_kw = 0.8;
    CHECK(estimate_unbalance(-12.0, sys) == doctest::Approx(15.0));
    CHECK(estimate_unbalance(0.0, sys) == doctest::Approx(0.0));
    sys.k_sys_v_per_kw = 2.0;
    CHECK(estimate_unbalance(-30.0, sys) == doctest::Approx(15.0));
    // overvoltage asks for absorption
    CHECK(estimate_unbalance(4.0, sys) == doctest::Approx(-2.0));
}

TEST_CASE("power_reserve") {
    CHECK(power_reserve(60.0, 12.0) == doctest::Approx(0.8));
    CHECK(power_reserve(15.0, 15.0) == doctest::Approx(0.0));
    // reverse flow reads as reserve above 1; kept as the plain ratio
    CHECK(power_reserve(15.0, -15.0) == doctest::Approx(2.0));
}

TEST_CASE("energy_reserve") {
    CHECK(energy_reserve(NodeKind::grid_converter, std::nullopt, 1.0,
                         GammaMode::soc_literal) == doctest::Approx(1.0));
    CHECK(energy_reserve(NodeKind::battery, 50.0, 1.0, GammaMode::soc_literal) ==
          doctest::Approx(0.5));
    CHECK(energy_reserve(NodeKind::battery, 0.0, 1.0, GammaMode::soc_literal) ==
          doctest::Approx(0.0));
    // soc_literal ignores direction
    CHECK(energy_reserve(NodeKind::battery, 80.0, -1.0, GammaMode::soc_literal) ==
          doctest::Approx(0.8));
    // direction_aware flips to remaining room for absorption
    CHECK(energy_reserve(NodeKind::battery, 80.0, -1.0,
                         GammaMode::direction_aware) == doctest::Approx(0.2));
    CHECK(energy_reserve(NodeKind::battery, 80.0, 1.0,
                         GammaMode::direction_aware) == doctest::Approx(0.8));
    CHECK(energy_reserve(NodeKind::ev_charger, 25.0, 1.0, GammaMode::soc_literal) ==
          doctest::Approx(0.25));
}

TEST_CASE("competition_coefficient") {
    CHECK(competition_coefficient(1.0, 0.8, 1.0, false) == doctest::Approx(0.8));
    CHECK(competition_coefficient(1.0, 0.8, 0.5, false) == doctest::Approx(0.4));
    CHECK(competition_coefficient(1.0, 0.9, 0.9, true) == 0.0);
}

namespace {

CompetitionEntry entry(const std::string& id, double coeff, double headroom,
                       bool locked = false) {
    CompetitionEntry e;
    e.node_id = id;
    e.coeff = locked ? 0.0 : coeff;
    e.headroom_kw = headroom;
    e.locked = locked;
    return e;
}

std::map<std::string, double> by_node(const AllocationPlan& plan) {
    std::map<std::string, double> out;
    for (const Allocation& a : plan.entries) out[a.node_id] = a.delta_p_kw;
    return out;
}

} // namespace

TEST_CASE("rank_and_allocate worked examples") {
    SUBCASE("clear winner takes the whole request") {
        const auto plan = rank_and_allocate(
            15.0, {entry("grid", 0.8, 48.0), entry("bat", 0.4, 12.0)});
        const auto got = by_node(plan);
        CHECK(got.at("grid") == doctest::Approx(15.0));
        CHECK(got.at("bat") == 0.0);
        CHECK(plan.deficit_kw == doctest::Approx(0.0));
    }
    SUBCASE("equal coefficients split the request") {
        const auto plan = rank_and_allocate(
            15.0, {entry("a", 0.26, 10.0), entry("b", 0.26, 10.0)});
        const auto got = by_node(plan);
        CHECK(got.at("a") == doctest::Approx(7.5));
        CHECK(got.at("b") == doctest::Approx(7.5));
        CHECK(got.at("a") == got.at("b")); // identical doubles
    }
    SUBCASE("zero request allocates nothing") {
        const auto plan = rank_and_allocate(0.0, {entry("a", 0.5, 10.0)});
        CHECK(plan.entries.empty());
        CHECK(plan.deficit_kw == 0.0);
    }
    SUBCASE("request beyond total headroom leaves a deficit") {
        const auto plan = rank_and_allocate(
            100.0, {entry("grid", 0.8, 48.0), entry("bat", 0.4, 12.0)});
        const auto got = by_node(plan);
        CHECK(got.at("grid") == doctest::Approx(48.0));
        CHECK(got.at("bat") == doctest::Approx(12.0));
        CHECK(plan.deficit_kw == doctest::Approx(40.0));
    }
    SUBCASE("tie-group overflow re-splits across the rest of the group") {
        const auto plan = rank_and_allocate(
            14.0, {entry("small", 0.5, 5.0), entry("big", 0.5, 20.0)});
        const auto got = by_node(plan);
        CHECK(got.at("small") == doctest::Approx(5.0));
        CHECK(got.at("big") == doctest::Approx(9.0));
    }
    SUBCASE("empty entry list yields a full deficit") {
        const auto plan = rank_and_allocate(15.0, {});
        CHECK(plan.entries.empty());
        CHECK(plan.deficit_kw == doctest::Approx(15.0));
    }
    SUBCASE("absorption requests carry their sign through") {
        const auto plan = rank_and_allocate(
            -15.0, {entry("a", 0.9, 10.0), entry("b", 0.2, 10.0)});
        const auto got = by_node(plan);
        CHECK(got.at("a") == doctest::Approx(-10.0));
        CHECK(got.at("b") == doctest::Approx(-5.0));
        CHECK(plan.deficit_kw == doctest::Approx(0.0));
    }
    SUBCASE("locked entries never receive power") {
        const auto plan = rank_and_allocate(
            30.0, {entry("a", 0.9, 10.0, true), entry("b", 0.2, 10.0)});
        const auto got = by_node(plan);
        CHECK(got.at("a") == 0.0);
        CHECK(got.at("b") == doctest::Approx(10.0));
        CHECK(plan.deficit_kw == doctest::Approx(20.0));
    }
}

namespace {

struct RandomPlanCase {
    std::vector<CompetitionEntry> entries;
    double requested;
};

RandomPlanCase random_plan_case(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_dist(1, 6);
    std::uniform_real_distribution<double> coeff_dist(0.0, 1.0);
    std::uniform_real_distribution<double> head_dist(0.0, 20.0);
    std::uniform_real_distribution<double> req_dist(-60.0, 60.0);
    std::bernoulli_distribution lock_dist(0.2);

    RandomPlanCase c;
    const int n = n_dist(rng);
    for (int i = 0; i < n; ++i) {
        const bool locked = lock_dist(rng);
        c.entries.push_back(entry("n" + std::to_string(i), coeff_dist(rng),
                                  head_dist(rng), locked));
    }
    c.requested = req_dist(rng);
    return c;
}

} // namespace

TEST_CASE("allocation invariants hold on random instances") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 500; ++i) {
        const RandomPlanCase c = random_plan_case(rng);
        const AllocationPlan plan = rank_and_allocate(c.requested, c.entries);

        double sum = 0.0;
        std::map<std::string, const CompetitionEntry*> in;
        for (const CompetitionEntry& e : c.entries) in[e.node_id] = &e;
        for (const Allocation& a : plan.entries) {
            sum += a.delta_p_kw;
            const CompetitionEntry& e = *in.at(a.node_id);
            // headroom respect and sign rule
            CHECK(std::abs(a.delta_p_kw) <= e.headroom_kw * (1.0 + 1e-12));
            if (a.delta_p_kw != 0.0) {
                CHECK(a.delta_p_kw * c.requested > 0.0);
                CHECK_FALSE(e.locked);
            }
        }
        // conservation
        CHECK(std::abs(sum + plan.deficit_kw - c.requested) <=
              1e-12 * std::max(1.0, std::abs(c.requested)));
    }
}

TEST_CASE("scaling every gamma by the same factor leaves the plan unchanged") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> scale_dist(0.1, 10.0);
    std::uniform_real_distribution<double> part_dist(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        RandomPlanCase c = random_plan_case(rng);
        // rebuild coefficients from factors so scaling is well-defined
        std::vector<double> gammas;
        for (CompetitionEntry& e : c.entries) {
            e.delta = part_dist(rng);
            e.beta = 2.0 * part_dist(rng);
            gammas.push_back(part_dist(rng));
            e.gamma = gammas.back();
            e.coeff = competition_coefficient(e.delta, e.beta, e.gamma, e.locked);
        }
        const AllocationPlan base = rank_and_allocate(c.requested, c.entries);

        const double scale = scale_dist(rng);
        for (std::size_t j = 0; j < c.entries.size(); ++j) {
            c.entries[j].gamma = gammas[j] * scale;
            c.entries[j].coeff = competition_coefficient(
                c.entries[j].delta, c.entries[j].beta, c.entries[j].gamma,
                c.entries[j].locked);
        }
        const AllocationPlan scaled = rank_and_allocate(c.requested, c.entries);

        REQUIRE(base.entries.size() == scaled.entries.size());
        for (std::size_t j = 0; j < base.entries.size(); ++j) {
            CHECK(base.entries[j].node_id == scaled.entries[j].node_id);
            CHECK(base.entries[j].delta_p_kw == scaled.entries[j].delta_p_kw);
        }
        CHECK(base.deficit_kw == scaled.deficit_kw);
    }
}

TEST_CASE("a dominant entry with enough headroom starves the rest") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> req_dist(0.5, 20.0);
    for (int i = 0; i < 100; ++i) {
        const double req = req_dist(rng);
        const auto plan = rank_and_allocate(
            req, {entry("a", 0.9, req + 1.0), entry("b", 0.3, 50.0)});
        const auto got = by_node(plan);
        CHECK(got.at("a") == doctest::Approx(req));
        CHECK(got.at("b") == 0.0);
    }
}

TEST_CASE("greedy allocation matches exhaustive grid search on 500 instances") {
    std::mt19937_64 rng(34);
    std::uniform_int_distribution<int> n_dist(1, 4);
    std::uniform_int_distribution<int> h_dist(0, 12);  // halves of a kW, <= 6 kW
    std::uniform_int_distribution<int> req_dist(0, 30);
    std::uniform_real_distribution<double> coeff_dist(0.0, 1.0);

    for (int i = 0; i < 500; ++i) {
        const int n = n_dist(rng);

        std::vector<double> coeffs;
        while (static_cast<int>(coeffs.size()) < n) {
            const double c = coeff_dist(rng);
            bool close = false;
            for (double existing : coeffs) {
                if (std::abs(existing - c) < 1e-6) close = true;
            }
            if (!close) coeffs.push_back(c);
        }

        std::vector<CompetitionEntry> entries;
        oracle::GridInstance inst;
        std::vector<int> order(n);
        for (int j = 0; j < n; ++j) order[j] = j;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return coeffs[a] > coeffs[b]; });

        std::vector<double> headrooms(n);
        for (int j = 0; j < n; ++j) headrooms[j] = 0.5 * h_dist(rng);
        for (int j = 0; j < n; ++j) {
            entries.push_back(entry("n" + std::to_string(j), coeffs[j], headrooms[j]));
        }
        for (int rank = 0; rank < n; ++rank) {
            inst.headrooms.push_back(headrooms[order[rank]]);
        }
        inst.requested = 0.5 * req_dist(rng);

        const AllocationPlan plan = rank_and_allocate(inst.requested, entries);
        const std::vector<double> expected = oracle::brute_force_allocate(inst);

        const auto got = by_node(plan); // empty plan means all-zero allocations
        for (int rank = 0; rank < n; ++rank) {
            const std::string id = "n" + std::to_string(order[rank]);
            const auto it = got.find(id);
            const double allocated = it != got.end() ? it->second : 0.0;
            CHECK(allocated == doctest::Approx(expected[rank]).epsilon(1e-12));
        }
    }
}

namespace {

std::vector<NodeSpec> table_roster() {
    NodeSpec grid;
    grid.id = "acdc";
    grid.kind = NodeKind::grid_converter;
    grid.initial_mode = NodeMode::voltage_source;
    grid.k_v_per_kw = 1.0;
    grid.p_rated_kw = 60.0;

    NodeSpec battery;
    battery.id = "dcdc1";
    battery.kind = NodeKind::battery;
    battery.initial_mode = NodeMode::voltage_source;
    battery.k_v_per_kw = 4.0;
    battery.p_rated_kw = 15.0;
    battery.soc_pct = 50.0;
    battery.capacity_kwh = 50.0;

    NodeSpec ev = battery;
    ev.id = "dcdc2";
    ev.kind = NodeKind::ev_charger;
    ev.initial_mode = NodeMode::current_source;
    return {grid, battery, ev};
}

std::vector<Message> settled_sag_telemetry() {
    // the grid-connected roster settled against a 15 kW draw: u = 738 V,
    // grid at 12 kW, battery at 3 kW
    Telemetry grid{"acdc", 738.0, 12.0, NodeMode::voltage_source, 100.0, false};
    Telemetry battery{"dcdc1", 738.0, 3.0, NodeMode::voltage_source, 50.0, false};
    Telemetry ev{"dcdc2", 738.0, -15.0, NodeMode::current_source, 50.0, false};
    return {grid, battery, ev};
}

} // namespace

TEST_CASE("control_cycle dispatches after the debounce streak") {
    const auto roster = table_roster();
    Controller ctl(BusSpec{}, ControllerSpec{}, roster);

    CHECK_FALSE(ctl.control_cycle(0.50, 750.0, settled_sag_telemetry()).has_value());
    CHECK_FALSE(ctl.control_cycle(0.51, 738.0, settled_sag_telemetry()).has_value());
    CHECK_FALSE(ctl.control_cycle(0.52, 738.0, {}).has_value());
    const auto commands = ctl.control_cycle(0.53, 738.0, {});
    REQUIRE(commands.has_value());
    REQUIRE(commands->size() == 1);
    CHECK((*commands)[0].node_id == "acdc");
    CHECK((*commands)[0].delta_p_kw == doctest::Approx(15.0).epsilon(1e-9));

    // the worked ranking: grid 0.8 strictly ahead of battery 0.4
    REQUIRE(ctl.decisions().size() == 1);
    const DecisionRecord& d = ctl.decisions()[0];
    REQUIRE(d.ranking.size() == 2);
    CHECK(d.ranking[0].node_id == "acdc");
    CHECK(d.ranking[0].coeff == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(d.ranking[1].node_id == "dcdc1");
    CHECK(d.ranking[1].coeff == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(d.ranking[0].coeff > d.ranking[1].coeff);
    // headroom is measured at the restored operating point
    CHECK(d.ranking[0].headroom_kw == doctest::Approx(60.0).epsilon(1e-9));
    CHECK(d.ranking[1].headroom_kw == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(d.requested_kw == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(d.deficit_kw == doctest::Approx(0.0));

    REQUIRE(ctl.trips().size() == 1);
    CHECK(ctl.trips()[0].u_v == doctest::Approx(738.0));
    CHECK(ctl.trips()[0].delta_u_v == doctest::Approx(-12.0));
}

TEST_CASE("in-band samples never produce commands and reset the streak") {
    const auto roster = table_roster();
    Controller ctl(BusSpec{}, ControllerSpec{}, roster);
    for (int i = 0; i < 50; ++i) {
        CHECK_FALSE(ctl.control_cycle(0.01 * i, 750.5, settled_sag_telemetry())
                        .has_value());
    }
    // two out-of-band samples, an in-band one, then two more: no dispatch
    CHECK_FALSE(ctl.control_cycle(0.60, 738.0, {}).has_value());
    CHECK_FALSE(ctl.control_cycle(0.61, 738.0, {}).has_value());
    CHECK_FALSE(ctl.control_cycle(0.62, 750.0, {}).has_value());
    CHECK_FALSE(ctl.control_cycle(0.63, 738.0, {}).has_value());
    CHECK_FALSE(ctl.control_cycle(0.64, 738.0, {}).has_value());
    CHECK(ctl.dispatch_count() == 0);
}

TEST_CASE("a second trip inside the inhibit window is held back") {
    const auto roster = table_roster();
    Controller ctl(BusSpec{}, ControllerSpec{}, roster);

    ctl.control_cycle(0.51, 738.0, settled_sag_telemetry());
    ctl.control_cycle(0.52, 738.0, {});
    REQUIRE(ctl.control_cycle(0.53, 738.0, {}).has_value());

    // still out of band right after the dispatch: debounce rebuilds but the
    // inhibit window blocks action
    CHECK_FALSE(ctl.control_cycle(0.54, 739.0, settled_sag_telemetry()).has_value());
    CHECK_FALSE(ctl.control_cycle(0.55, 739.0, {}).has_value());
    CHECK_FALSE(ctl.control_cycle(0.56, 739.0, {}).has_value());
    CHECK_FALSE(ctl.control_cycle(0.60, 739.0, {}).has_value());
    CHECK(ctl.dispatch_count() == 1);

    // once the window has elapsed the armed controller acts again
    const auto more = ctl.control_cycle(0.74, 739.0, {});
    CHECK(more.has_value());
    CHECK(ctl.dispatch_count() == 2);
}

TEST_CASE("trip with no eligible source raises an alarm instead of commands") {
    const auto roster = table_roster();
    Controller ctl(BusSpec{}, ControllerSpec{}, roster);

    Telemetry grid{"acdc", 700.0, 0.0, NodeMode::current_source, 100.0, false};
    Telemetry battery{"dcdc1", 700.0, 0.0, NodeMode::locked, 50.0, true};
    const std::vector<Message> inbox{grid, battery};

    CHECK_FALSE(ctl.control_cycle(0.01, 700.0, inbox).has_value());
    CHECK_FALSE(ctl.control_cycle(0.02, 700.0, {}).has_value());
    CHECK_FALSE(ctl.control_cycle(0.03, 700.0, {}).has_value());
    CHECK(ctl.dispatch_count() == 0);
    CHECK(ctl.alarms().size() == 1);
}

TEST_CASE("lock notices exclude a node from the next dispatch") {
    const auto roster = table_roster();
    Controller ctl(BusSpec{}, ControllerSpec{}, roster);

    auto inbox = settled_sag_telemetry();
    inbox.push_back(LockNotice{"acdc"});
    ctl.control_cycle(0.51, 738.0, inbox);
    ctl.control_cycle(0.52, 738.0, {});
    const auto commands = ctl.control_cycle(0.53, 738.0, {});
    REQUIRE(commands.has_value());
    REQUIRE(commands->size() == 1);
    CHECK((*commands)[0].node_id == "dcdc1");
}

TEST_CASE("closed-loop restoration is exact whenever headroom covers the unbalance") {
    std::mt19937_64 rng(35);
    std::uniform_int_distribution<int> n_dist(1, 6);
    std::uniform_real_distribution<double> k_dist(0.5, 8.0);
    std::uniform_real_distribution<double> uref_dist(748.0, 752.0);
    std::uniform_real_distribution<double> shift_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> margin_dist(0.5, 25.0);
    std::uniform_real_distribution<double> sag_dist(1.1, 4.0);
    std::uniform_real_distribution<double> soc_dist(10.0, 90.0);
    std::bernoulli_distribution storage_dist(0.5);
    std::bernoulli_distribution sign_dist(0.5);

    const double u_nominal = 750.0;
    const double du_set = 2.0;

    for (int trial = 0; trial < 200; ++trial) {
        const int n = n_dist(rng);
        std::vector<NodeState> nodes;
        for (int i = 0; i < n; ++i) {
            NodeSpec spec;
            spec.id = "n" + std::to_string(i);
            spec.kind = storage_dist(rng) ? NodeKind::battery : NodeKind::grid_converter;
            if (is_storage(spec.kind)) {
                spec.soc_pct = soc_dist(rng);
                spec.capacity_kwh = 50.0;
            }
            spec.initial_mode = NodeMode::voltage_source;
            spec.u_ref_v = uref_dist(rng);
            spec.k_v_per_kw = k_dist(rng);
            spec.p_rated_kw = 1e9; // sized after the settled point is known
            NodeState node = make_node(spec);
            node.curve.shift_kw = shift_dist(rng);
            nodes.push_back(node);
        }

        // pick the step so the settled deviation always leaves the band,
        // whatever the no-load drift of this roster happens to be
        const SystemDroop sys = aggregate_droop(std::span(nodes));
        const double u_idle = solve_bus(std::span(nodes), 0.0).u_v;
        const double target_delta =
            (sign_dist(rng) ? -1.0 : 1.0) * sag_dist(rng) * du_set;
        const double p_cs =
            (target_delta - (u_idle - u_nominal)) / sys.k_sys_v_per_kw;

        // settle against the disturbance, then size ratings with enough
        // total margin to cover the whole correction
        BusSolution settled = solve_bus(std::span(nodes), p_cs);
        const auto delta_u = check_trip(settled.u_v, u_nominal, du_set);
        REQUIRE(delta_u.has_value());
        const double requested = estimate_unbalance(*delta_u, sys);
        const double direction = requested >= 0.0 ? 1.0 : -1.0;

        std::vector<double> margins;
        double total_margin = 0.0;
        for (int i = 0; i < n; ++i) {
            margins.push_back(margin_dist(rng));
            total_margin += margins.back();
        }
        const double boost = std::max(1.0, (std::abs(requested) + 1.0) / total_margin);

        std::vector<CompetitionEntry> entries;
        for (int i = 0; i < n; ++i) {
            NodeState& node = nodes[i];
            const double p = settled.node_powers_kw.at(node.spec.id);
            const double p_nom =
                p + (settled.u_v - u_nominal) / node.curve.k_v_per_kw;
            node.spec.p_rated_kw =
                std::max(std::abs(p), std::abs(p_nom)) + margins[i] * boost;

            CompetitionEntry e;
            e.node_id = node.spec.id;
            e.delta = 1.0;
            e.beta = power_reserve(node.spec.p_rated_kw, p);
            e.gamma = energy_reserve(node.spec.kind, node.soc_pct, direction,
                                     GammaMode::soc_literal);
            e.coeff = competition_coefficient(e.delta, e.beta, e.gamma, false);
            e.headroom_kw =
                std::max(0.0, direction > 0.0 ? node.spec.p_rated_kw - p_nom
                                              : node.spec.p_rated_kw + p_nom);
            entries.push_back(e);
        }

        const AllocationPlan plan = rank_and_allocate(requested, entries);
        CHECK(std::abs(plan.deficit_kw) < 1e-9);
        for (const Allocation& a : plan.entries) {
            for (NodeState& node : nodes) {
                if (node.spec.id == a.node_id) node.curve.shift_kw += a.delta_p_kw;
            }
        }

        const BusSolution restored = solve_bus(std::span(nodes), p_cs);
        CHECK(std::abs(restored.u_v - u_nominal) < 1e-6);
    }
}
