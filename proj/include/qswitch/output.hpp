#pragma once

// File outputs of a run. Numbers are written with std::to_chars, so the
// decimal point never depends on the process locale. Pair columns use the
// 1-based "i-j" labels, in pair_index order.
//
//   slots.csv      t, U_<pair>..., E0_<iface>..., F_<pair>..., R_<pair>...
//   served.csv     pair, arrival_ns, served_ns, latency_ns, fidelity
//   discards.csv   t, cause, count          (cause: memory_full|fidelity|protocol)
//   g_curves.csv   pair, V, g
//   summary.json   config, totals, aggregates, stability, littles_law, capacity

#include "qswitch/analysis.hpp"
#include "qswitch/engine.hpp"

#include <filesystem>
#include <string>

namespace qswitch
{
    // Shortest round-trip decimal form; "inf", "-inf" and "nan" for the rest.
    std::string format_number(double v);
    std::string format_number(Count v);

    std::string slots_header(int nodes);
    std::string slots_csv(const RunResult& run); // needs TraceDetail::full
    std::string served_csv(const RunResult& run);
    std::string discards_csv(const RunResult& run);
    std::string g_curves_csv(const StabilityReport& report, int nodes);
    std::string summary_json(const RunConfig& config, const RunResult& run, const StabilityReport& report);

    void write_text(const std::filesystem::path& path, const std::string& content);

    // Writes the four run files (and g_curves.csv) into dir, creating it.
    void write_run_outputs(const RunConfig& config, const RunResult& run, const std::filesystem::path& dir);
}
