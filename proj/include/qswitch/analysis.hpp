#pragma once

// Finite-horizon diagnostics over completed runs. The stability verdict is
// an engineering proxy for an asymptotic definition: it looks at the growth
// of total backlog over the second half of the run and at how often any
// pair's backlog sits far above its mean.

#include "qswitch/engine.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qswitch
{
    // Fraction of slots in [from, to) with U > V, one curve per pair.
    std::vector<std::vector<double>> empirical_g(const Series& U, std::span<const double> V, std::size_t from = 0,
                                                 std::size_t to = static_cast<std::size_t>(-1));
    double empirical_g(std::span<const double> trace, double V);

    enum class LyapunovKind : std::uint8_t
    {
        quadratic, // sum u^2
        linear,    // sum u
    };

    struct DriftReport
    {
        Count T = 1;
        std::vector<double> samples;  // L(U(mT + T)) - L(U(mT))
        std::vector<double> backlog;  // sum U(mT) for each sample
        double mean = 0.0;
        // Least-squares fit samples ~ C - theta * backlog.
        double C = 0.0;
        double theta = 0.0;
        // Mean drift over samples whose backlog exceeds its 90th percentile.
        double mean_high_backlog = 0.0;
    };

    DriftReport drift_estimate(const Series& U, Count T, LyapunovKind kind);
    // A scalar trace, read as a single pair.
    DriftReport drift_estimate(std::span<const double> trace, Count T, LyapunovKind kind);

    struct LittleReport
    {
        std::optional<double> mean_latency_slots;
        std::optional<double> mean_queue;
        std::optional<double> rate;  // served requests per slot
        std::optional<double> ratio; // mean_queue / (rate * latency)
    };

    // Requests that arrived in [from, to) and were served, against the mean of
    // backlog[t] over the same window.
    LittleReport littles_law_check(const std::vector<Request>& served, std::span<const Count> backlog, Count from,
                                   Count to);

    enum class Stability : std::uint8_t
    {
        stable,
        unstable,
        inconclusive,
    };

    std::string to_string(Stability s);

    struct StabilityOptions
    {
        Count min_horizon = 10'000;
        int batches = 20;
        double confidence = 0.99;
        double stable_g = 0.05;
        double stable_factor = 10.0; // V = factor * mean backlog of the pair
        double unstable_g = 0.1;
        double V_max = 100.0;
    };

    struct StabilityReport
    {
        Stability verdict = Stability::inconclusive;
        Count window_from = 0;
        Count window_to = 0;
        double slope = 0.0; // requests per slot
        double ci_low = 0.0;
        double ci_high = 0.0;
        double g_at_mean = 0.0; // max over pairs of g(V) at V = factor * mean
        double g_at_vmax = 0.0; // max over pairs of g(V_max)
        std::vector<double> V_grid;
        std::vector<std::vector<double>> g_curves;
        std::string note;
    };

    // Least-squares slope of batch means of y against their batch centres,
    // with a Student-t interval.
    struct SlopeFit
    {
        double slope = 0.0;
        double ci_low = 0.0;
        double ci_high = 0.0;
    };
    SlopeFit batch_slope(std::span<const Count> y, std::size_t from, std::size_t to, int batches, double confidence);

    StabilityReport stability_verdict(const RunResult& run, const StabilityOptions& options = {});

    // What sweeps and presets keep from a run.
    struct RunSummary
    {
        std::uint64_t seed = 0;
        RunTotals totals;
        RunAggregates aggregates;
        Stability verdict = Stability::inconclusive;
        double slope = 0.0;
    };

    RunSummary summarize(const RunResult& run, const StabilityOptions& options = {});
}
