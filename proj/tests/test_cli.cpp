#include "qswitch/config.hpp"
#include "qswitch/experiments.hpp"
#include "qswitch/output.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qswitch;
namespace fs = std::filesystem;

namespace
{
    const char* kBasic = R"({
  "switch": { "K": 3, "p": [0.9, 0.8, 0.7], "q": 0.9, "W": 2, "memory": 10, "T2_ns": 1e6,
              "fidelity_threshold": 0.75, "memory_full": "drop_oldest" },
  "arrivals": { "family": "mixed_poisson", "rates": { "1-2": 0.1, "1-3": 0.05, "2-3": 0.02 }, "spread": 0.25 },
  "protocol": { "name": "maxweight", "T0": 4, "qubit_policy": "oqf" },
  "run": { "horizon_slots": 500, "warmup_slots": 50, "seed": 9, "trace_detail": "full" }
})";

    std::string slurp(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    fs::path scratch(const std::string& name)
    {
        const fs::path d = fs::temp_directory_path() / ("qswitch_test_" + name);
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }

    int cli(const std::string& args)
    {
        const std::string cmd = std::string(QSWITCH_CLI) + " " + args + " >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    }

    std::string error_of(const std::string& text)
    {
        try
        {
            (void)parse_config(text);
        }
        catch (const ValidationError& e)
        {
            return e.what();
        }
        return "";
    }

    std::size_t lines(const std::string& s)
    {
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    }
}

TEST_CASE("config parsing")
{
    const RunConfig c = parse_config(kBasic);
    CHECK(c.params.K == 3);
    CHECK(c.params.p == std::vector<double>{0.9, 0.8, 0.7});
    CHECK(c.params.max_swaps == 2);
    CHECK(c.params.mem_per_interface == 10);
    CHECK(c.params.memory_full == MemoryFullPolicy::drop_oldest);
    REQUIRE(c.arrivals.size() == 3);
    CHECK(c.arrivals[0].family == ArrivalFamily::mixed_poisson);
    CHECK(c.arrivals[0].rate() == doctest::Approx(0.1));
    CHECK(c.arrivals[1].rate() == doctest::Approx(0.05));
    CHECK(c.protocol.kind == Protocol::maxweight);
    CHECK(c.protocol.T0 == 4);
    CHECK(c.protocol.qubit_policy == QubitPolicy::oqf);
    CHECK(c.horizon_slots == 500);
    CHECK(c.warmup() == 50);
    CHECK(c.seed == 9);
    CHECK(c.trace_detail == TraceDetail::full);

    CHECK(parse_pair_label("2-3", 3) == NodePair{1, 2});
    CHECK(parse_pair_label("3-1", 3) == NodePair{0, 2});
    CHECK_THROWS_AS(parse_pair_label("1-1", 3), ValidationError);
    CHECK_THROWS_AS(parse_pair_label("1-4", 3), ValidationError);
    CHECK_THROWS_AS(parse_pair_label("12", 3), ValidationError);

    const RunConfig t = parse_config(R"({"switch": {"K": 4, "p": 0.9, "q": 0.9, "T2_ns": "inf"},
        "arrivals": {"total_rate": 0.6}, "protocol": {"name": "on-demand"}, "run": {"horizon_slots": 10}})");
    CHECK(std::isinf(t.params.T2_ns));
    CHECK(t.arrivals[5].rate() == doctest::Approx(0.1));
    CHECK_FALSE(t.params.mem_per_interface.has_value());
}

TEST_CASE("config round trip")
{
    const RunConfig c = parse_config(kBasic);
    const std::string once = serialize_config(c);
    const RunConfig back = parse_config(once);
    CHECK(back == c);
    CHECK(serialize_config(back) == once);

    RunConfig s = table_setting(0.2, 1000);
    s.protocol.kind = Protocol::stationary;
    s.protocol.epsilon = 0.001;
    s.protocol.visit_order = {};
    s.params.T2_ns = kInfinity;
    CHECK(parse_config(serialize_config(s)) == s);
}

TEST_CASE("config errors name the key and line")
{
    const std::string bad_q = R"({
  "switch": { "K": 3, "p": 0.9,
    "q": 1.5 },
  "arrivals": { "rate": 0.1 },
  "protocol": { "name": "on-demand" },
  "run": { "horizon_slots": 10 }
})";
    const std::string e = error_of(bad_q);
    CHECK(e.find("switch.q") != std::string::npos);
    CHECK(e.find("line 3") != std::string::npos);

    const std::string unknown = R"({
  "switch": { "K": 3, "p": 0.9, "q": 0.9 },
  "arrivals": { "rate": 0.1 },
  "protocol": { "name": "on-demand", "colour": "red" },
  "run": { "horizon_slots": 10 }
})";
    const std::string u = error_of(unknown);
    CHECK(u.find("protocol.colour") != std::string::npos);
    CHECK(u.find("line 4") != std::string::npos);

    CHECK(error_of("{\n  \"switch\": {,\n}").find("line 2") != std::string::npos);
    CHECK(error_of(R"({"switch": {"K": 3, "p": 0.9, "q": 0.9}, "arrivals": {"rate": 0.1, "total_rate": 1},
        "protocol": {"name": "on-demand"}, "run": {"horizon_slots": 10}})")
              .find("exactly one") != std::string::npos);
    CHECK_FALSE(error_of(R"({"switch": {"K": 1, "p": 0.9, "q": 0.9}})").empty());
    CHECK_FALSE(error_of(R"({"switch": {"K": 3, "p": 0.9, "q": 0.9}, "arrivals": {"rate": 0.1},
        "protocol": {"name": "teleport"}, "run": {"horizon_slots": 10}})").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ValidationError);
}

TEST_CASE("number formatting")
{
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(kInfinity) == "inf");
    CHECK(format_number(-kInfinity) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(Count{42}) == "42");
}

TEST_CASE("run outputs")
{
    RunConfig c = parse_config(kBasic);
    const RunResult r = run(c);
    const fs::path dir = scratch("outputs");
    write_run_outputs(c, r, dir);
    for (const char* f : {"summary.json", "slots.csv", "served.csv", "discards.csv", "g_curves.csv"})
    {
        CHECK(fs::exists(dir / f));
    }
    const std::string slots = slurp(dir / "slots.csv");
    CHECK(slots.rfind("t,U_1-2,U_1-3,U_2-3,E0_1,E0_2,E0_3,F_1-2,F_1-3,F_2-3,R_1-2,R_1-3,R_2-3\n", 0) == 0);
    CHECK(lines(slots) == 501);
    const std::string served = slurp(dir / "served.csv");
    CHECK(served.rfind("pair,arrival_ns,served_ns,latency_ns,fidelity\n", 0) == 0);
    CHECK(lines(served) == 1 + r.served.size());
    CHECK(slurp(dir / "discards.csv").rfind("t,cause,count\n", 0) == 0);
    CHECK(slurp(dir / "g_curves.csv").rfind("pair,V,g\n", 0) == 0);

    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    for (const char* k : {"config", "totals", "aggregates", "stability", "littles_law", "capacity"})
    {
        CHECK(j.contains(k));
    }
    CHECK(j["totals"]["arrivals"] == r.totals.arrivals);
    CHECK(j["totals"]["served"] == r.totals.served);
    CHECK(j["capacity"]["verdict"] == "inside");
    CHECK(parse_config(j["config"].dump()) == c);

    // Same seed, same bytes.
    const fs::path again = scratch("outputs_again");
    write_run_outputs(c, run(c), again);
    for (const char* f : {"summary.json", "slots.csv", "served.csv", "discards.csv", "g_curves.csv"})
    {
        CHECK(slurp(dir / f) == slurp(again / f));
    }

    RunConfig summary_only = c;
    summary_only.trace_detail = TraceDetail::summary;
    CHECK_THROWS_AS(slots_csv(run(summary_only)), ContractViolation);
}

TEST_CASE("zero horizon writes header-only tables")
{
    RunConfig c = parse_config(kBasic);
    c.horizon_slots = 0;
    c.warmup_slots = 0;
    const RunResult r = run(c);
    CHECK(slots_csv(r) == slots_header(3));
    CHECK(lines(slots_header(3)) == 1);
    CHECK(lines(served_csv(r)) == 1);
    CHECK(lines(discards_csv(r)) == 1);
    const auto j = nlohmann::json::parse(summary_json(c, r, stability_verdict(r)));
    CHECK(j["aggregates"]["mean_latency_ns"].is_null());
}

TEST_CASE("sweeps")
{
    RunConfig c = parse_config(kBasic);
    c.trace_detail = TraceDetail::summary;
    const auto one = run_sweep(c, SweepParam::q, {0.8}, 1, 1);
    REQUIRE(one.size() == 2);
    CHECK(one[0].seed == 9);
    CHECK_FALSE(one[1].seed.has_value());
    const std::string csv = sweep_csv(one);
    CHECK(csv.rfind("value,seed,mean_fidelity,mean_latency_ns,stability_verdict\n", 0) == 0);
    CHECK(csv.find("\n0.8,mean,") != std::string::npos);

    const auto rows = run_sweep(c, SweepParam::mem, {1, 5}, 3, 2);
    CHECK(rows.size() == 8);
    CHECK(rows[3].value == 1.0);
    CHECK_FALSE(rows[3].seed.has_value());
    CHECK(rows[6].seed == 11);
    // Same rows regardless of how many runs go at once.
    CHECK(sweep_csv(run_sweep(c, SweepParam::mem, {1, 5}, 3, 1)) == sweep_csv(rows));

    CHECK(apply_sweep_value(c, SweepParam::T2, 5e5).params.T2_ns == 5e5);
    CHECK(apply_sweep_value(c, SweepParam::lambda_scale, 2.0).rates()[0] == doctest::Approx(0.2));
    CHECK_THROWS_AS(apply_sweep_value(c, SweepParam::q, 1.5), ValidationError);
    CHECK_THROWS_AS(scale_arrival(ArrivalSpec::constant_count(1), 0.5), ValidationError);
    CHECK_THROWS_AS(sweep_param_from_string("gamma"), ValidationError);
    CHECK(sweep_param_from_string(to_string(SweepParam::lambda_scale)) == SweepParam::lambda_scale);
}

TEST_CASE("presets")
{
    CHECK(preset_names().size() == 5);
    CHECK_THROWS_AS(make_preset("fig-9"), ValidationError);

    PresetOptions o;
    o.seeds = 2;
    o.horizon = 2000;
    const ExperimentPreset t = make_preset("table-heavy", o);
    CHECK(t.table);
    CHECK(t.runs.size() == 4 * 2 * 2);

    o.nodes = {4};
    o.policies = {QubitPolicy::yqf};
    o.values = {2, 10};
    const ExperimentPreset f = make_preset("fig-memory", o);
    CHECK(f.runs.size() == 4);
    CHECK(f.value_name == "memory");
    const PresetResult a = run_preset(f, 2);
    const PresetResult b = run_preset(f, 1);
    CHECK(a.combined_csv == b.combined_csv);
    CHECK(a.runs_csv == b.runs_csv);
    CHECK(a.combined_csv.rfind("K,policy,memory,mean_fidelity,mean_latency_us,stable_runs,runs\n", 0) == 0);
    CHECK(lines(a.combined_csv) == 3);
    CHECK(lines(a.runs_csv) == 5);

    const fs::path dir = scratch("preset");
    write_preset(f, a, dir);
    CHECK(slurp(dir / "fig-memory.csv") == a.combined_csv);
    CHECK(slurp(dir / "fig-memory_runs.csv") == a.runs_csv);
}

TEST_CASE("command line")
{
    const fs::path dir = scratch("cli");
    {
        std::ofstream(dir / "ok.json") << kBasic;
        std::ofstream(dir / "bad.json") << "{ \"switch\": { \"K\": 3 ";
    }
    const std::string ok = (dir / "ok.json").string();
    CHECK(cli("capacity --config " + ok) == 0);
    CHECK(cli("run --config " + ok + " --out " + (dir / "run").string()) == 0);
    CHECK(fs::exists(dir / "run" / "slots.csv"));
    CHECK(cli("run --config " + ok + " --seed 9 --out " + (dir / "run2").string()) == 0);
    CHECK(slurp(dir / "run" / "slots.csv") == slurp(dir / "run2" / "slots.csv"));
    CHECK(cli("sweep --config " + ok + " --param q --values 0.7,0.9 --seeds 2 --out " + (dir / "s.csv").string()) == 0);
    CHECK(lines(slurp(dir / "s.csv")) == 7);
    CHECK(cli("preset fig-q --seeds 1 --horizon 500 --out " + (dir / "p").string()) == 0);
    CHECK(fs::exists(dir / "p" / "fig-q.csv"));

    CHECK(cli("capacity --config " + (dir / "bad.json").string()) == 1);
    CHECK(cli("capacity --config " + (dir / "missing.json").string()) == 1);
    CHECK(cli("sweep --config " + ok + " --param gamma --values 1 --out x.csv") == 1);
    CHECK(cli("sweep --config " + ok + " --param q --values 0.5,abc") == 1);
    CHECK(cli("preset nothing --out " + dir.string()) == 1);
    CHECK(cli("frobnicate") == 1);
}
