#include "dcflex/comms.hpp"
#include "dcflex/engine.hpp"
#include "dcflex/scenario.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_RunBuiltinCase(benchmark::State& state) {
    const dcflex::ScenarioSpec spec =
        dcflex::builtin_case(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        const auto result = dcflex::run(spec);
        benchmark::DoNotOptimize(result.summary.final_u_v);
    }
}
BENCHMARK(BM_RunBuiltinCase)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ChannelPostPoll(benchmark::State& state) {
    for (auto _ : state) {
        dcflex::Channel channel(dcflex::ChannelConfig{0.01, 0.0, 3});
        for (int i = 0; i < 64; ++i) {
            channel.post(0.001 * i, dcflex::ShiftCommand{"n", 1.0});
        }
        const auto due = channel.poll_due(1.0);
        benchmark::DoNotOptimize(due.size());
    }
}
BENCHMARK(BM_ChannelPostPoll);

} // namespace
