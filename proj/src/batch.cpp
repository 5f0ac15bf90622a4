#include "qswitch/batch.hpp"

#include <omp.h>

namespace qswitch
{
    BatchItem run_one(const RunConfig& config, const StabilityOptions& options)
    {
        BatchItem item;
        try
        {
            item.summary = summarize(run(config), options);
        }
        catch (const ValidationError& e)
        {
            item.error = e.what();
        }
        catch (const ContractViolation& e)
        {
            item.error = e.what();
            item.contract_error = true;
        }
        catch (const std::exception& e)
        {
            item.error = e.what();
            item.contract_error = true;
        }
        return item;
    }

    std::vector<BatchItem> run_batch(const std::vector<RunConfig>& configs, int jobs, const StabilityOptions& options)
    {
        std::vector<BatchItem> out(configs.size());
        const int threads = jobs > 0 ? jobs : omp_get_max_threads();
        const auto n = static_cast<std::ptrdiff_t>(configs.size());
        // Runs differ a lot in cost (K, horizon), hence dynamic chunks of one.
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (std::ptrdiff_t k = 0; k < n; ++k)
        {
            out[static_cast<std::size_t>(k)] = run_one(configs[static_cast<std::size_t>(k)], options);
        }
        return out;
    }

    std::vector<BatchItem> run_batch_serial(const std::vector<RunConfig>& configs, const StabilityOptions& options)
    {
        std::vector<BatchItem> out;
        out.reserve(configs.size());
        for (const RunConfig& c : configs)
        {
            out.push_back(run_one(c, options));
        }
        return out;
    }

    void rethrow_first_error(const std::vector<BatchItem>& items)
    {
        for (std::size_t k = 0; k < items.size(); ++k)
        {
            if (items[k].ok())
            {
                continue;
            }
            const std::string msg = "run " + std::to_string(k) + ": " + items[k].error;
            if (items[k].contract_error)
            {
                throw ContractViolation(msg);
            }
            throw ValidationError(msg);
        }
    }
}
