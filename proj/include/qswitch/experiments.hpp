#pragma once

// Parameter sweeps and the named experiment presets. Both expand into a flat
// list of RunConfigs, hand it to run_batch, and turn the summaries into CSV
// text in a single thread, so output never depends on --jobs.
//
// Sweep CSV:   value,seed,mean_fidelity,mean_latency_ns,stability_verdict
//              one row per (value, seed), then a row with seed "mean".
// Table CSV:   protocol,policy,mean_fidelity,mean_latency_us
// Figure CSV:  K,policy,<memory|T2_ms|q>,mean_fidelity,mean_latency_us,stable_runs,runs
// Per-run CSV (every preset): one row per run with its seed and labels.

#include "qswitch/analysis.hpp"
#include "qswitch/batch.hpp"
#include "qswitch/engine.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qswitch
{
    enum class SweepParam : std::uint8_t
    {
        q,
        T2,   // values in ns
        mem,  // link pairs per interface
        lambda_scale,
    };

    std::string to_string(SweepParam p);
    SweepParam sweep_param_from_string(const std::string& s);

    // Copy of base with one parameter set to value.
    RunConfig apply_sweep_value(const RunConfig& base, SweepParam param, double value);
    ArrivalSpec scale_arrival(const ArrivalSpec& a, double factor);

    struct SweepRow
    {
        double value = 0.0;
        std::optional<std::uint64_t> seed; // empty for the mean row
        std::optional<double> mean_fidelity;
        std::optional<double> mean_latency_ns;
        std::string verdict;
    };

    // Seeds base.seed, base.seed + 1, ...
    std::vector<SweepRow> run_sweep(const RunConfig& base, SweepParam param, const std::vector<double>& values,
                                    int seeds, int jobs);
    std::string sweep_csv(const std::vector<SweepRow>& rows);

    struct PresetOptions
    {
        std::uint64_t base_seed = 1;
        int seeds = 3;
        Count horizon = 100'000;
        // Empty keeps the preset's own lists.
        std::vector<int> nodes;              // figures: K values
        std::vector<QubitPolicy> policies;
        std::vector<double> values;          // figures: the swept grid
    };

    struct PresetRun
    {
        RunConfig config;
        std::string protocol; // table label, e.g. "maxweight T0=20"
        QubitPolicy policy = QubitPolicy::yqf;
        int K = 0;
        double value = 0.0;   // figures: grid value in display units
        int seed_index = 0;
    };

    struct ExperimentPreset
    {
        std::string name;
        std::string artifact;   // what the combined CSV mirrors
        std::string value_name; // figures only
        bool table = false;
        std::vector<PresetRun> runs;
    };

    const std::vector<std::string>& preset_names();
    ExperimentPreset make_preset(const std::string& name, const PresetOptions& options = {});

    struct PresetResult
    {
        std::vector<BatchItem> items; // one per run, same order
        std::string combined_csv;
        std::string runs_csv;
    };

    PresetResult run_preset(const ExperimentPreset& preset, int jobs);

    // <dir>/<name>.csv and <dir>/<name>_runs.csv
    void write_preset(const ExperimentPreset& preset, const PresetResult& result, const std::filesystem::path& dir);

    // Table base setting: K = 5, p = q = 0.9, mixed Poisson arrivals at `rate`
    // per pair, 100 link pairs per interface, T2 = 1 ms, threshold 0.75.
    RunConfig table_setting(double rate, Count horizon);
    // Figure base setting: on-demand over K nodes, total rate 1.2 split evenly.
    RunConfig figure_setting(int nodes, Count horizon);
}
