#include "qswitch/experiments.hpp"

#include "qswitch/output.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qswitch
{
    std::string to_string(SweepParam p)
    {
        switch (p)
        {
        case SweepParam::q:
            return "q";
        case SweepParam::T2:
            return "T2";
        case SweepParam::mem:
            return "mem";
        case SweepParam::lambda_scale:
            return "lambda_scale";
        }
        return "?";
    }

    SweepParam sweep_param_from_string(const std::string& s)
    {
        for (SweepParam p : {SweepParam::q, SweepParam::T2, SweepParam::mem, SweepParam::lambda_scale})
        {
            if (to_string(p) == s)
            {
                return p;
            }
        }
        throw ValidationError("unknown sweep parameter '" + s + "' (expected q, T2, mem or lambda_scale)");
    }

    ArrivalSpec scale_arrival(const ArrivalSpec& a, double factor)
    {
        if (!(factor >= 0.0) || !std::isfinite(factor))
        {
            throw ValidationError("rate scale must be finite and nonnegative");
        }
        switch (a.family)
        {
        case ArrivalFamily::bernoulli:
            return ArrivalSpec::bernoulli(a.p * factor);
        case ArrivalFamily::mixed_poisson:
            return ArrivalSpec::mixed_poisson(a.lambda1 * factor, a.lambda2 * factor);
        case ArrivalFamily::constant:
        {
            const double c = static_cast<double>(a.constant) * factor;
            if (std::floor(c) != c)
            {
                throw ValidationError("scaling constant arrivals must keep integer counts");
            }
            return ArrivalSpec::constant_count(static_cast<Count>(c));
        }
        }
        return a;
    }

    RunConfig apply_sweep_value(const RunConfig& base, SweepParam param, double value)
    {
        RunConfig c = base;
        switch (param)
        {
        case SweepParam::q:
            c.params.q = value;
            break;
        case SweepParam::T2:
            c.params.T2_ns = value;
            break;
        case SweepParam::mem:
            if (std::isinf(value))
            {
                c.params.mem_per_interface.reset();
            }
            else
            {
                if (value < 0.0 || std::floor(value) != value)
                {
                    throw ValidationError("memory sizes must be nonnegative integers");
                }
                c.params.mem_per_interface = static_cast<Count>(value);
            }
            break;
        case SweepParam::lambda_scale:
            for (ArrivalSpec& a : c.arrivals)
            {
                a = scale_arrival(a, value);
            }
            break;
        }
        c.validate();
        return c;
    }

    namespace
    {
        std::string opt_number(const std::optional<double>& v)
        {
            return v ? format_number(*v) : std::string();
        }

        // Mean over the runs that served at least one request.
        struct Mean
        {
            double sum = 0.0;
            int n = 0;
            void add(double v)
            {
                sum += v;
                ++n;
            }
            std::optional<double> get() const
            {
                return n > 0 ? std::optional<double>(sum / n) : std::nullopt;
            }
        };

        std::string pooled_verdict(const std::vector<Stability>& v)
        {
            if (v.empty())
            {
                return "inconclusive";
            }
            for (Stability s : {Stability::stable, Stability::unstable, Stability::inconclusive})
            {
                if (std::all_of(v.begin(), v.end(), [s](Stability x) { return x == s; }))
                {
                    return to_string(s);
                }
            }
            return "mixed";
        }
    }

    std::vector<SweepRow> run_sweep(const RunConfig& base, SweepParam param, const std::vector<double>& values,
                                    int seeds, int jobs)
    {
        if (seeds < 1)
        {
            throw ValidationError("--seeds must be at least 1");
        }
        if (values.empty())
        {
            throw ValidationError("sweep needs at least one value");
        }
        std::vector<RunConfig> configs;
        for (double v : values)
        {
            for (int s = 0; s < seeds; ++s)
            {
                RunConfig c = apply_sweep_value(base, param, v);
                c.seed = base.seed + static_cast<std::uint64_t>(s);
                c.trace_detail = TraceDetail::summary;
                configs.push_back(std::move(c));
            }
        }
        const auto items = run_batch(configs, jobs);
        rethrow_first_error(items);

        std::vector<SweepRow> rows;
        std::size_t k = 0;
        for (double v : values)
        {
            Mean fid;
            Mean lat;
            std::vector<Stability> verdicts;
            for (int s = 0; s < seeds; ++s, ++k)
            {
                const RunSummary& r = *items[k].summary;
                SweepRow row;
                row.value = v;
                row.seed = r.seed;
                if (r.aggregates.has_served())
                {
                    row.mean_fidelity = r.aggregates.mean_fidelity;
                    row.mean_latency_ns = r.aggregates.mean_latency_ns;
                    fid.add(r.aggregates.mean_fidelity);
                    lat.add(r.aggregates.mean_latency_ns);
                }
                row.verdict = to_string(r.verdict);
                verdicts.push_back(r.verdict);
                rows.push_back(row);
            }
            SweepRow mean;
            mean.value = v;
            mean.mean_fidelity = fid.get();
            mean.mean_latency_ns = lat.get();
            mean.verdict = pooled_verdict(verdicts);
            rows.push_back(mean);
        }
        return rows;
    }

    std::string sweep_csv(const std::vector<SweepRow>& rows)
    {
        std::string out = "value,seed,mean_fidelity,mean_latency_ns,stability_verdict\n";
        for (const SweepRow& r : rows)
        {
            out += format_number(r.value) + ',';
            out += r.seed ? std::to_string(*r.seed) : std::string("mean");
            out += ',' + opt_number(r.mean_fidelity) + ',' + opt_number(r.mean_latency_ns) + ',' + r.verdict + '\n';
        }
        return out;
    }

    RunConfig table_setting(double rate, Count horizon)
    {
        RunConfig c;
        c.params = SwitchParams::uniform(5, 0.9, 0.9);
        c.params.mem_per_interface = 100;
        c.params.T2_ns = 1e6;
        c.params.fidelity_threshold = 0.75;
        c.arrivals.assign(pair_count(5), ArrivalSpec::mixed_poisson(rate * 0.5, rate * 1.5));
        c.horizon_slots = horizon;
        return c;
    }

    RunConfig figure_setting(int nodes, Count horizon)
    {
        RunConfig c;
        c.params = SwitchParams::uniform(nodes, 0.9, 0.9);
        c.params.mem_per_interface = 100;
        c.params.T2_ns = 1e6;
        c.params.fidelity_threshold = 0.75;
        const double rate = 1.2 / static_cast<double>(pair_count(nodes));
        c.arrivals.assign(pair_count(nodes), ArrivalSpec::mixed_poisson(rate * 0.5, rate * 1.5));
        c.protocol.kind = Protocol::on_demand;
        c.horizon_slots = horizon;
        return c;
    }

    const std::vector<std::string>& preset_names()
    {
        static const std::vector<std::string> names = {"table-heavy", "table-light", "fig-memory", "fig-T2", "fig-q"};
        return names;
    }

    namespace
    {
        struct TableRow
        {
            std::string label;
            Protocol kind;
            std::optional<Count> T0;
        };

        void add_seeds(ExperimentPreset& p, PresetRun run, const PresetOptions& o)
        {
            for (int s = 0; s < o.seeds; ++s)
            {
                run.config.seed = o.base_seed + static_cast<std::uint64_t>(s);
                run.seed_index = s;
                p.runs.push_back(run);
            }
        }

        ExperimentPreset table_preset(const std::string& name, double rate, const PresetOptions& o)
        {
            ExperimentPreset p;
            p.name = name;
            p.table = true;
            p.artifact = "protocol x qubit policy table at " + format_number(rate) + " requests per pair per slot";
            const std::vector<TableRow> rows = {
                {"stationary", Protocol::stationary, 1},
                {"maxweight T0=1", Protocol::maxweight, 1},
                {"maxweight T0=20", Protocol::maxweight, 20},
                {"on-demand", Protocol::on_demand, std::nullopt},
            };
            const std::vector<QubitPolicy> policies =
                o.policies.empty() ? std::vector<QubitPolicy>{QubitPolicy::yqf, QubitPolicy::oqf} : o.policies;
            for (const TableRow& row : rows)
            {
                for (QubitPolicy pol : policies)
                {
                    PresetRun run;
                    run.config = table_setting(rate, o.horizon);
                    run.config.protocol.kind = row.kind;
                    run.config.protocol.T0 = row.T0;
                    run.config.protocol.qubit_policy = pol;
                    run.protocol = row.label;
                    run.policy = pol;
                    run.K = 5;
                    add_seeds(p, run, o);
                }
            }
            return p;
        }

        ExperimentPreset figure_preset(const std::string& name, const PresetOptions& o)
        {
            ExperimentPreset p;
            p.name = name;
            std::vector<double> grid;
            if (name == "fig-memory")
            {
                p.value_name = "memory";
                p.artifact = "latency and fidelity against link pairs stored per interface";
                grid = {1, 2, 3, 5, 10, 20, 50, 100};
            }
            else if (name == "fig-T2")
            {
                p.value_name = "T2_ms";
                p.artifact = "latency and fidelity against the dephasing time T2";
                grid = {0.1, 0.2, 0.5, 1, 2, 5, 10};
            }
            else
            {
                p.value_name = "q";
                p.artifact = "latency and fidelity against the swap success probability q";
                for (int k = 2; k <= 20; ++k)
                {
                    grid.push_back(0.05 * k);
                }
            }
            if (!o.values.empty())
            {
                grid = o.values;
            }
            const std::vector<int> nodes = o.nodes.empty() ? std::vector<int>{4, 8} : o.nodes;
            const std::vector<QubitPolicy> policies =
                o.policies.empty() ? std::vector<QubitPolicy>{QubitPolicy::yqf, QubitPolicy::oqf} : o.policies;
            for (int K : nodes)
            {
                for (QubitPolicy pol : policies)
                {
                    for (double v : grid)
                    {
                        PresetRun run;
                        run.config = figure_setting(K, o.horizon);
                        run.config.protocol.qubit_policy = pol;
                        if (p.value_name == "memory")
                        {
                            run.config = apply_sweep_value(run.config, SweepParam::mem, v);
                        }
                        else if (p.value_name == "T2_ms")
                        {
                            run.config = apply_sweep_value(run.config, SweepParam::T2, v * 1e6);
                        }
                        else
                        {
                            run.config = apply_sweep_value(run.config, SweepParam::q, v);
                        }
                        run.protocol = to_string(Protocol::on_demand);
                        run.policy = pol;
                        run.K = K;
                        run.value = v;
                        add_seeds(p, run, o);
                    }
                }
            }
            return p;
        }
    }

    ExperimentPreset make_preset(const std::string& name, const PresetOptions& o)
    {
        if (o.seeds < 1)
        {
            throw ValidationError("presets need at least one seed");
        }
        if (o.horizon < 0)
        {
            throw ValidationError("horizon must be nonnegative");
        }
        if (name == "table-heavy")
        {
            return table_preset(name, 0.2, o);
        }
        if (name == "table-light")
        {
            return table_preset(name, 0.12, o);
        }
        if (name == "fig-memory" || name == "fig-T2" || name == "fig-q")
        {
            return figure_preset(name, o);
        }
        throw ValidationError("unknown preset '" + name + "'");
    }

    PresetResult run_preset(const ExperimentPreset& preset, int jobs)
    {
        std::vector<RunConfig> configs;
        configs.reserve(preset.runs.size());
        for (const PresetRun& r : preset.runs)
        {
            configs.push_back(r.config);
        }
        PresetResult res;
        res.items = run_batch(configs, jobs);
        rethrow_first_error(res.items);

        res.runs_csv = "protocol,policy,K,value,seed,mean_fidelity,mean_latency_us,mean_backlog,served,verdict,slope\n";
        // Group key keeps first-appearance order so the combined CSV follows the run list.
        std::vector<std::string> order;
        struct Group
        {
            const PresetRun* first = nullptr;
            Mean fid;
            Mean lat;
            int stable = 0;
            int runs = 0;
        };
        std::map<std::string, Group> groups;
        for (std::size_t k = 0; k < preset.runs.size(); ++k)
        {
            const PresetRun& r = preset.runs[k];
            const RunSummary& s = *res.items[k].summary;
            const RunAggregates& a = s.aggregates;
            res.runs_csv += r.protocol + ',' + to_string(r.policy) + ',' + std::to_string(r.K) + ',' +
                            (preset.table ? std::string() : format_number(r.value)) + ',' + std::to_string(s.seed) +
                            ',' + (a.has_served() ? format_number(a.mean_fidelity) : "") + ',' +
                            (a.has_served() ? format_number(a.mean_latency_ns / 1000.0) : "") + ',' +
                            format_number(a.mean_backlog) + ',' + format_number(s.totals.served) + ',' +
                            to_string(s.verdict) + ',' + format_number(s.slope) + '\n';

            const std::string key = r.protocol + '|' + to_string(r.policy) + '|' + std::to_string(r.K) + '|' +
                                    format_number(r.value);
            auto [it, fresh] = groups.try_emplace(key);
            if (fresh)
            {
                it->second.first = &r;
                order.push_back(key);
            }
            Group& g = it->second;
            if (a.has_served())
            {
                g.fid.add(a.mean_fidelity);
                g.lat.add(a.mean_latency_ns / 1000.0);
            }
            g.stable += s.verdict == Stability::stable ? 1 : 0;
            ++g.runs;
        }

        res.combined_csv = preset.table ? "protocol,policy,mean_fidelity,mean_latency_us\n"
                                        : "K,policy," + preset.value_name +
                                              ",mean_fidelity,mean_latency_us,stable_runs,runs\n";
        for (const std::string& key : order)
        {
            const Group& g = groups.at(key);
            if (preset.table)
            {
                res.combined_csv += g.first->protocol + ',' + to_string(g.first->policy) + ',' +
                                    opt_number(g.fid.get()) + ',' + opt_number(g.lat.get()) + '\n';
            }
            else
            {
                res.combined_csv += std::to_string(g.first->K) + ',' + to_string(g.first->policy) + ',' +
                                    format_number(g.first->value) + ',' + opt_number(g.fid.get()) + ',' +
                                    opt_number(g.lat.get()) + ',' + std::to_string(g.stable) + ',' +
                                    std::to_string(g.runs) + '\n';
            }
        }
        return res;
    }

    void write_preset(const ExperimentPreset& preset, const PresetResult& result, const std::filesystem::path& dir)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
        {
            throw ValidationError("cannot create " + dir.string() + ": " + ec.message());
        }
        write_text(dir / (preset.name + ".csv"), result.combined_csv);
        write_text(dir / (preset.name + "_runs.csv"), result.runs_csv);
    }
}
