#include "qswitch/output.hpp"

#include "qswitch/capacity.hpp"
#include "qswitch/config.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>

namespace qswitch
{
    using nlohmann::json;

    std::string format_number(double v)
    {
        if (std::isnan(v))
        {
            return "nan";
        }
        if (std::isinf(v))
        {
            return v > 0 ? "inf" : "-inf";
        }
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return {buf, r.ptr};
    }

    std::string format_number(Count v)
    {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return {buf, r.ptr};
    }

    namespace
    {
        void csv_pairs(std::string& out, const char* prefix, int nodes)
        {
            for (const NodePair& p : all_pairs(nodes))
            {
                out += ',';
                out += prefix;
                out += pair_label(p);
            }
        }

        void csv_row(std::string& out, const Series& s, std::size_t t)
        {
            for (std::uint32_t v : s.row(t))
            {
                out += ',';
                out += format_number(static_cast<Count>(v));
            }
        }

        json optional_number(const std::optional<double>& v)
        {
            return v && std::isfinite(*v) ? json(*v) : json(nullptr);
        }

        json finite_or_string(double v)
        {
            return std::isfinite(v) ? json(v) : json(format_number(v));
        }
    }

    std::string slots_header(int nodes)
    {
        std::string out = "t";
        csv_pairs(out, "U_", nodes);
        for (int k = 0; k < nodes; ++k)
        {
            out += ",E0_" + std::to_string(k + 1);
        }
        csv_pairs(out, "F_", nodes);
        csv_pairs(out, "R_", nodes);
        out += '\n';
        return out;
    }

    std::string slots_csv(const RunResult& run)
    {
        std::string out = slots_header(run.K);
        const std::size_t rows = run.U.rows();
        if (rows > 0 && (run.E0.rows() < rows || run.F.rows() < rows || run.R.rows() < rows))
        {
            throw ContractViolation("slots.csv needs a run recorded with full trace detail");
        }
        for (std::size_t t = 0; t < rows; ++t)
        {
            out += format_number(static_cast<Count>(t));
            csv_row(out, run.U, t);
            csv_row(out, run.E0, t);
            csv_row(out, run.F, t);
            csv_row(out, run.R, t);
            out += '\n';
        }
        return out;
    }

    std::string served_csv(const RunResult& run)
    {
        std::string out = "pair,arrival_ns,served_ns,latency_ns,fidelity\n";
        for (const Request& r : run.served)
        {
            if (!r.served_ns)
            {
                continue;
            }
            out += pair_label(r.pair);
            out += ',' + format_number(r.arrival_ns);
            out += ',' + format_number(*r.served_ns);
            out += ',' + format_number(*r.served_ns - r.arrival_ns);
            out += ',' + format_number(r.served_fidelity.value_or(kInfinity));
            out += '\n';
        }
        return out;
    }

    std::string discards_csv(const RunResult& run)
    {
        std::string out = "t,cause,count\n";
        for (const DiscardRecord& d : run.discards)
        {
            out += format_number(d.slot) + ',' + to_string(d.cause) + ',' + format_number(d.count) + '\n';
        }
        return out;
    }

    std::string g_curves_csv(const StabilityReport& report, int nodes)
    {
        std::string out = "pair,V,g\n";
        const auto pairs = all_pairs(nodes);
        for (std::size_t p = 0; p < report.g_curves.size() && p < pairs.size(); ++p)
        {
            for (std::size_t v = 0; v < report.V_grid.size(); ++v)
            {
                out += pair_label(pairs[p]) + ',' + format_number(report.V_grid[v]) + ',' +
                       format_number(report.g_curves[p][v]) + '\n';
            }
        }
        return out;
    }

    std::string summary_json(const RunConfig& config, const RunResult& run, const StabilityReport& report)
    {
        json root = json::object();
        root["config"] = json::parse(serialize_config(config));

        const RunTotals& t = run.totals;
        root["totals"] = {
            {"arrivals", t.arrivals},
            {"served", t.served},
            {"served_on_arrival", t.served_on_arrival},
            {"swap_attempts", t.attempts},
            {"swap_successes", t.successes},
            {"link_pairs_generated", t.generated},
            {"discard_memory_full", t.discard_memory_full},
            {"discard_fidelity", t.discard_fidelity},
            {"discard_protocol", t.discard_protocol},
            {"plain_slots_checked", run.plain_slots_checked},
        };

        const RunAggregates& a = run.aggregates;
        json agg = json::object();
        agg["warmup_slots"] = run.warmup;
        agg["counted_requests"] = a.counted;
        agg["mean_fidelity"] = a.has_served() ? json(a.mean_fidelity) : json(nullptr);
        agg["mean_latency_ns"] = a.has_served() ? json(a.mean_latency_ns) : json(nullptr);
        agg["mean_latency_slots"] = a.has_served() ? json(a.mean_latency_slots) : json(nullptr);
        agg["mean_backlog"] = a.mean_backlog;
        json per_pair = json::object();
        const auto pairs = all_pairs(run.K);
        for (std::size_t p = 0; p < pairs.size() && p < a.mean_backlog_pair.size(); ++p)
        {
            per_pair[pair_label(pairs[p])] = a.mean_backlog_pair[p];
        }
        agg["mean_backlog_pair"] = per_pair;
        root["aggregates"] = agg;

        root["stability"] = {
            {"verdict", to_string(report.verdict)},
            {"window_from", report.window_from},
            {"window_to", report.window_to},
            {"slope", report.slope},
            {"ci_low", report.ci_low},
            {"ci_high", report.ci_high},
            {"g_at_mean", report.g_at_mean},
            {"g_at_vmax", report.g_at_vmax},
            {"V_grid", report.V_grid},
            {"note", report.note},
        };

        const LittleReport little = littles_law_check(run.served, run.backlog, run.warmup, run.horizon);
        root["littles_law"] = {
            {"mean_latency_slots", optional_number(little.mean_latency_slots)},
            {"mean_queue", optional_number(little.mean_queue)},
            {"rate", optional_number(little.rate)},
            {"ratio", optional_number(little.ratio)},
        };

        const RateMatrix rates = config.rates();
        const Membership m = region_membership(rates, config.params);
        root["capacity"] = {
            {"verdict", to_string(m.verdict)},
            {"margin", m.margin},
            {"boundary_q", finite_or_string(boundary_q(rates, config.params))},
        };
        return root.dump(2) + "\n";
    }

    void write_text(const std::filesystem::path& path, const std::string& content)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
        {
            throw ValidationError("cannot write " + path.string());
        }
        out << content;
        if (!out)
        {
            throw ValidationError("write failed for " + path.string());
        }
    }

    void write_run_outputs(const RunConfig& config, const RunResult& run, const std::filesystem::path& dir)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
        {
            throw ValidationError("cannot create " + dir.string() + ": " + ec.message());
        }
        const StabilityReport report = stability_verdict(run);
        write_text(dir / "summary.json", summary_json(config, run, report));
        write_text(dir / "slots.csv", slots_csv(run));
        write_text(dir / "served.csv", served_csv(run));
        write_text(dir / "discards.csv", discards_csv(run));
        write_text(dir / "g_curves.csv", g_curves_csv(report, run.K));
    }
}
