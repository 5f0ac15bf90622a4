// Batch throughput: the OpenMP driver against the serial reference loop on
// the same list of independent runs, plus single-run and solver costs.
//
//   ./build/bench/qswitch_bench --benchmark_min_time=1
//
// The parallel driver splits work across runs only, so its speedup is bounded
// by min(runs, cores); on one core the two should time alike.

#include "qswitch/batch.hpp"
#include "qswitch/experiments.hpp"
#include "qswitch/protocols.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

#include <stdexcept>

using namespace qswitch;

namespace
{
    std::vector<RunConfig> batch(int runs, Count horizon)
    {
        std::vector<RunConfig> out;
        for (int k = 0; k < runs; ++k)
        {
            RunConfig c = figure_setting(4 + 2 * (k % 3), horizon);
            c.seed = 1 + static_cast<std::uint64_t>(k);
            out.push_back(c);
        }
        return out;
    }

    void check_same(const std::vector<BatchItem>& a, const std::vector<BatchItem>& b)
    {
        for (std::size_t k = 0; k < a.size(); ++k)
        {
            if (!a[k].ok() || !b[k].ok() ||
                a[k].summary->aggregates.mean_latency_ns != b[k].summary->aggregates.mean_latency_ns ||
                a[k].summary->totals.served != b[k].summary->totals.served)
            {
                throw std::runtime_error("parallel and serial batches disagree at run " + std::to_string(k));
            }
        }
    }

    void BM_batch_serial(benchmark::State& state)
    {
        const auto cfgs = batch(static_cast<int>(state.range(0)), 20'000);
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(run_batch_serial(cfgs));
        }
        state.counters["runs/s"] =
            benchmark::Counter(static_cast<double>(cfgs.size()), benchmark::Counter::kIsIterationInvariantRate);
    }

    void BM_batch_parallel(benchmark::State& state)
    {
        const auto cfgs = batch(static_cast<int>(state.range(0)), 20'000);
        check_same(run_batch(cfgs, 0), run_batch_serial(cfgs));
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(run_batch(cfgs, 0));
        }
        state.counters["runs/s"] =
            benchmark::Counter(static_cast<double>(cfgs.size()), benchmark::Counter::kIsIterationInvariantRate);
        state.counters["threads"] = omp_get_max_threads();
    }

    void BM_single_run(benchmark::State& state)
    {
        RunConfig c = table_setting(0.2, 20'000);
        c.protocol.kind = static_cast<Protocol>(state.range(0));
        if (is_maxweight(c.protocol.kind))
        {
            c.protocol.T0 = 1;
        }
        if (is_stationary(c.protocol.kind))
        {
            c.protocol.T0 = 1;
        }
        state.SetLabel(to_string(c.protocol.kind));
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(run(c));
        }
        state.counters["slots/s"] =
            benchmark::Counter(static_cast<double>(c.horizon_slots), benchmark::Counter::kIsIterationInvariantRate);
    }

    void BM_solve_mw(benchmark::State& state)
    {
        const int K = static_cast<int>(state.range(0));
        CounterRng rng(3);
        SymMatrix<Count> w(K);
        for (Count& v : w.values())
        {
            v = static_cast<Count>(rng() % 50);
        }
        std::vector<Count> cap(static_cast<std::size_t>(K));
        for (Count& c : cap)
        {
            c = static_cast<Count>(rng() % 20);
        }
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(solve_mw(w, cap));
        }
    }
}

BENCHMARK(BM_batch_serial)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_parallel)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_single_run)
    ->Arg(static_cast<int>(Protocol::stationary))
    ->Arg(static_cast<int>(Protocol::maxweight))
    ->Arg(static_cast<int>(Protocol::on_demand))
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_solve_mw)->Arg(4)->Arg(8)->Arg(10);

BENCHMARK_MAIN();
