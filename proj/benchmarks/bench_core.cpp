#include "dcflex/bus.hpp"
#include "dcflex/controller.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <span>
#include <vector>

namespace {

std::vector<dcflex::NodeState> make_roster(int n) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> k_dist(0.5, 8.0);
    std::vector<dcflex::NodeState> nodes;
    for (int i = 0; i < n; ++i) {
        dcflex::NodeSpec spec;
        spec.id = "n" + std::to_string(i);
        spec.kind = dcflex::NodeKind::grid_converter;
        spec.initial_mode = dcflex::NodeMode::voltage_source;
        spec.u_ref_v = 750.0;
        spec.k_v_per_kw = k_dist(rng);
        spec.p_rated_kw = 100.0;
        nodes.push_back(dcflex::make_node(spec));
    }
    return nodes;
}

void BM_SolveBus(benchmark::State& state) {
    const auto nodes = make_roster(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        const auto sol = dcflex::solve_bus(std::span(nodes), -20.0);
        benchmark::DoNotOptimize(sol.u_v);
    }
}
BENCHMARK(BM_SolveBus)->RangeMultiplier(2)->Range(2, 64);

void BM_AggregateDroop(benchmark::State& state) {
    const auto nodes = make_roster(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        const auto sys = dcflex::aggregate_droop(std::span(nodes));
        benchmark::DoNotOptimize(sys.k_sys_v_per_kw);
    }
}
BENCHMARK(BM_AggregateDroop)->RangeMultiplier(2)->Range(2, 64);

void BM_RankAndAllocate(benchmark::State& state) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coeff_dist(0.0, 1.0);
    std::vector<dcflex::CompetitionEntry> entries;
    for (int i = 0; i < state.range(0); ++i) {
        dcflex::CompetitionEntry e;
        e.node_id = "n" + std::to_string(i);
        e.coeff = coeff_dist(rng);
        e.headroom_kw = 5.0;
        entries.push_back(e);
    }
    for (auto _ : state) {
        const auto plan = dcflex::rank_and_allocate(37.5, entries);
        benchmark::DoNotOptimize(plan.deficit_kw);
    }
}
BENCHMARK(BM_RankAndAllocate)->RangeMultiplier(2)->Range(2, 64);

} // namespace
