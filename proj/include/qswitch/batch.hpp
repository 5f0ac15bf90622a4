#pragma once

// Many independent runs. Each run owns all of its state, so the parallel
// driver only shares the read-only input list and writes one output slot per
// index; results come back in input order either way.

#include "qswitch/analysis.hpp"
#include "qswitch/engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qswitch
{
    struct BatchItem
    {
        std::optional<RunSummary> summary;
        std::string error;          // what() of the exception, if any
        bool contract_error = false; // ContractViolation or RunAborted rather than bad input
        bool ok() const noexcept { return summary.has_value(); }
    };

    // One run, with exceptions turned into an error entry.
    BatchItem run_one(const RunConfig& config, const StabilityOptions& options = {});

    // OpenMP across runs; jobs <= 0 means the OpenMP default.
    std::vector<BatchItem> run_batch(const std::vector<RunConfig>& configs, int jobs,
                                     const StabilityOptions& options = {});

    // Reference loop with the same results.
    std::vector<BatchItem> run_batch_serial(const std::vector<RunConfig>& configs,
                                            const StabilityOptions& options = {});

    // Throws the first failure (by index) as the matching exception type.
    void rethrow_first_error(const std::vector<BatchItem>& items);
}
