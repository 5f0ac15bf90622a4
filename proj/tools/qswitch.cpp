// qswitch: command-line driver.
//
//   qswitch capacity --config c.json
//   qswitch run      --config c.json [--seed N] [--horizon H] --out dir
//   qswitch sweep    --config c.json --param q --values 0.5,0.6 [--seeds 3] [--jobs 4] --out sweep.csv
//   qswitch preset   table-heavy [--seed N] [--seeds 3] [--horizon H] [--jobs 4] --out dir
//
// Exit status: 0 success, 1 bad input, 2 runtime contract violation.

#include "qswitch/capacity.hpp"
#include "qswitch/config.hpp"
#include "qswitch/experiments.hpp"
#include "qswitch/output.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iostream>

using namespace qswitch;

namespace
{
    std::vector<double> parse_values(const std::string& list)
    {
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= list.size())
        {
            const std::size_t comma = std::min(list.find(',', start), list.size());
            const std::string tok = list.substr(start, comma - start);
            if (tok == "inf")
            {
                out.push_back(kInfinity);
            }
            else
            {
                double v = 0.0;
                const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (tok.empty() || r.ec != std::errc() || r.ptr != tok.data() + tok.size())
                {
                    throw ValidationError("bad number '" + tok + "' in --values");
                }
                out.push_back(v);
            }
            start = comma + 1;
        }
        return out;
    }

    void print_capacity(const RunConfig& cfg)
    {
        const RateMatrix rates = cfg.rates();
        const Membership m = region_membership(rates, cfg.params);
        std::cout << "verdict: " << to_string(m.verdict) << '\n'
                  << "margin: " << format_number(m.margin) << '\n'
                  << "boundary_q: " << format_number(boundary_q(rates, cfg.params)) << '\n'
                  << "max_uniform_epsilon: " << format_number(m.max_uniform_epsilon) << '\n'
                  << "minimal flow (lambda / q):\n";
        const int K = cfg.params.K;
        for (int i = 0; i < K; ++i)
        {
            std::cout << ' ';
            for (int j = 0; j < K; ++j)
            {
                std::cout << ' ' << format_number(m.flow(i, j));
            }
            std::cout << '\n';
        }
    }

    void print_aggregates(const RunResult& r, const StabilityReport& rep)
    {
        const RunAggregates& a = r.aggregates;
        std::cout << "arrivals=" << r.totals.arrivals << " served=" << r.totals.served
                  << " mean_latency_ns=" << (a.has_served() ? format_number(a.mean_latency_ns) : "na")
                  << " mean_fidelity=" << (a.has_served() ? format_number(a.mean_fidelity) : "na")
                  << " mean_backlog=" << format_number(a.mean_backlog) << " verdict=" << to_string(rep.verdict)
                  << '\n';
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"Entanglement switch simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<Count> horizon;
    std::string out;
    std::string param;
    std::string values;
    int seeds = 1;
    int jobs = 0;
    std::string preset_name;

    auto* cap = app.add_subcommand("capacity", "Report capacity-region membership of the configured rates");
    cap->add_option("--config", config_path, "JSON config")->required();

    auto* run_cmd = app.add_subcommand("run", "Run one simulation and write its traces");
    run_cmd->add_option("--config", config_path, "JSON config")->required();
    run_cmd->add_option("--seed", seed, "Override run.seed");
    run_cmd->add_option("--horizon", horizon, "Override run.horizon_slots");
    run_cmd->add_option("--out", out, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over values and seeds");
    sweep->add_option("--config", config_path, "JSON config")->required();
    sweep->add_option("--param", param, "q | T2 | mem | lambda_scale")->required();
    sweep->add_option("--values", values, "Comma-separated values (T2 in ns, 'inf' allowed)")->required();
    sweep->add_option("--seeds", seeds, "Seeds per value, counting up from the config seed");
    sweep->add_option("--seed", seed, "Override the first seed");
    sweep->add_option("--horizon", horizon, "Override run.horizon_slots");
    sweep->add_option("--jobs", jobs, "Concurrent runs (0 = all cores)");
    sweep->add_option("--out", out, "Output CSV (stdout if omitted)");

    auto* preset = app.add_subcommand("preset", "Run a named experiment");
    preset->add_option("name", preset_name, "table-heavy | table-light | fig-memory | fig-T2 | fig-q")->required();
    preset->add_option("--seed", seed, "Base seed");
    preset->add_option("--seeds", seeds, "Seeds per configuration")->default_val(3);
    preset->add_option("--horizon", horizon, "Slots per run");
    preset->add_option("--jobs", jobs, "Concurrent runs (0 = all cores)");
    preset->add_option("--out", out, "Output directory")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return 1;
    }

    try
    {
        if (cap->parsed())
        {
            print_capacity(load_config(config_path));
        }
        else if (run_cmd->parsed())
        {
            RunConfig cfg = load_config(config_path);
            if (seed)
            {
                cfg.seed = *seed;
            }
            if (horizon)
            {
                cfg.horizon_slots = *horizon;
            }
            cfg.trace_detail = TraceDetail::full;
            cfg.validate();
            const RunResult r = run(cfg);
            write_run_outputs(cfg, r, out);
            print_aggregates(r, stability_verdict(r));
        }
        else if (sweep->parsed())
        {
            RunConfig cfg = load_config(config_path);
            if (seed)
            {
                cfg.seed = *seed;
            }
            if (horizon)
            {
                cfg.horizon_slots = *horizon;
            }
            const auto rows = run_sweep(cfg, sweep_param_from_string(param), parse_values(values), seeds, jobs);
            const std::string csv = sweep_csv(rows);
            if (out.empty())
            {
                std::cout << csv;
            }
            else
            {
                write_text(out, csv);
            }
        }
        else if (preset->parsed())
        {
            PresetOptions o;
            o.base_seed = seed.value_or(1);
            o.seeds = seeds;
            if (horizon)
            {
                o.horizon = *horizon;
            }
            const ExperimentPreset p = make_preset(preset_name, o);
            const PresetResult res = run_preset(p, jobs);
            write_preset(p, res, out);
            std::cout << res.combined_csv;
        }
        return 0;
    }
    catch (const ValidationError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    catch (const ContractViolation& e)
    {
        std::cerr << "contract violation: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "contract violation: " << e.what() << '\n';
        return 2;
    }
}
