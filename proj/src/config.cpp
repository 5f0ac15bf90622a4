#include "qswitch/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qswitch
{
    using nlohmann::json;

    namespace
    {
        // Line of the first occurrence of `"key"` for each path component in turn.
        int line_of(const std::string& text, const std::vector<std::string>& path)
        {
            std::size_t pos = 0;
            for (const std::string& key : path)
            {
                const std::size_t at = text.find("\"" + key + "\"", pos);
                if (at == std::string::npos)
                {
                    break;
                }
                pos = at;
            }
            return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
        }

        class Reader
        {
        public:
            Reader(const std::string& text) : text_(text) {}

            [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const
            {
                std::string where;
                for (const auto& k : path)
                {
                    where += (where.empty() ? "" : ".") + k;
                }
                throw ValidationError("config " + where + ": " + msg + " (line " + std::to_string(line_of(text_, path)) +
                                      ")");
            }

            const json& section(const json& root, const std::string& key, bool required) const
            {
                static const json empty = json::object();
                if (!root.contains(key))
                {
                    if (required)
                    {
                        fail({key}, "missing section");
                    }
                    return empty;
                }
                if (!root[key].is_object())
                {
                    fail({key}, "must be an object");
                }
                return root[key];
            }

            double number(const json& v, const std::vector<std::string>& path, bool allow_inf = false) const
            {
                if (v.is_number())
                {
                    return v.get<double>();
                }
                if (allow_inf && v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity"))
                {
                    return kInfinity;
                }
                fail(path, allow_inf ? "expected a number or \"inf\"" : "expected a number");
            }

            Count integer(const json& v, const std::vector<std::string>& path) const
            {
                if (v.is_number_integer())
                {
                    return v.get<Count>();
                }
                if (v.is_number_float())
                {
                    const double d = v.get<double>();
                    if (std::floor(d) == d && std::abs(d) < 9e15)
                    {
                        return static_cast<Count>(d);
                    }
                }
                fail(path, "expected an integer");
            }

            std::optional<Count> bounded(const json& v, const std::vector<std::string>& path) const
            {
                if (v.is_null() || (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "unbounded")))
                {
                    return std::nullopt;
                }
                return integer(v, path);
            }

            std::string string(const json& v, const std::vector<std::string>& path) const
            {
                if (!v.is_string())
                {
                    fail(path, "expected a string");
                }
                return v.get<std::string>();
            }

            bool boolean(const json& v, const std::vector<std::string>& path) const
            {
                if (!v.is_boolean())
                {
                    fail(path, "expected true or false");
                }
                return v.get<bool>();
            }

            template <class F>
            auto guarded(const std::vector<std::string>& path, F&& f) const
            {
                try
                {
                    return f();
                }
                catch (const ValidationError& e)
                {
                    if (std::string(e.what()).rfind("config ", 0) == 0)
                    {
                        throw;
                    }
                    fail(path, e.what());
                }
            }

            void known_keys(const json& obj, const std::string& sec, std::initializer_list<const char*> keys) const
            {
                for (auto it = obj.begin(); it != obj.end(); ++it)
                {
                    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
                    {
                        fail({sec, it.key()}, "unknown key");
                    }
                }
            }

        private:
            const std::string& text_;
        };

        // Rates from one of the uniform / matrix / total forms.
        RateMatrix read_rates(const Reader& rd, const json& a, const std::string& sec, int K)
        {
            RateMatrix r(K);
            const int forms = static_cast<int>(a.contains("rate")) + static_cast<int>(a.contains("rates")) +
                              static_cast<int>(a.contains("total_rate"));
            if (forms != 1)
            {
                rd.fail({sec}, "give exactly one of rate, rates, total_rate");
            }
            if (a.contains("rate"))
            {
                r = RateMatrix::uniform(K, rd.number(a["rate"], {sec, "rate"}));
            }
            else if (a.contains("total_rate"))
            {
                const double total = rd.number(a["total_rate"], {sec, "total_rate"});
                r = RateMatrix::uniform(K, total / static_cast<double>(pair_count(K)));
            }
            else
            {
                const json& m = a["rates"];
                if (!m.is_object())
                {
                    rd.fail({sec, "rates"}, "expected an object mapping \"i-j\" to a rate");
                }
                for (auto it = m.begin(); it != m.end(); ++it)
                {
                    const NodePair p = rd.guarded({sec, "rates", it.key()}, [&] { return parse_pair_label(it.key(), K); });
                    r.at(p.i, p.j) = rd.number(it.value(), {sec, "rates", it.key()});
                }
            }
            rd.guarded({sec}, [&] {
                r.validate();
                return 0;
            });
            return r;
        }

        ArrivalSpec law_from_rate(const Reader& rd, ArrivalFamily family, double rate, double spread,
                                  const std::vector<std::string>& path)
        {
            switch (family)
            {
            case ArrivalFamily::bernoulli:
                return ArrivalSpec::bernoulli(rate);
            case ArrivalFamily::mixed_poisson:
                return ArrivalSpec::mixed_poisson(rate * (1.0 - spread), rate * (1.0 + spread));
            case ArrivalFamily::constant:
                if (std::floor(rate) != rate)
                {
                    rd.fail(path, "constant arrivals need integer rates");
                }
                return ArrivalSpec::constant_count(static_cast<Count>(rate));
            }
            return {};
        }

        std::vector<ArrivalSpec> read_arrivals(const Reader& rd, const json& a, int K)
        {
            const std::string sec = "arrivals";
            rd.known_keys(a, sec, {"family", "rate", "rates", "total_rate", "spread", "per_pair"});
            const auto P = pair_count(K);
            std::vector<ArrivalSpec> out(P);
            if (a.contains("per_pair"))
            {
                if (a.contains("rate") || a.contains("rates") || a.contains("total_rate"))
                {
                    rd.fail({sec, "per_pair"}, "per_pair cannot be combined with rate forms");
                }
                const json& list = a["per_pair"];
                if (!list.is_array())
                {
                    rd.fail({sec, "per_pair"}, "expected a list");
                }
                std::vector<bool> seen(P, false);
                for (const json& e : list)
                {
                    if (!e.is_object() || !e.contains("pair") || !e.contains("family"))
                    {
                        rd.fail({sec, "per_pair"}, "each entry needs pair and family");
                    }
                    const std::string label = rd.string(e["pair"], {sec, "per_pair", "pair"});
                    const NodePair np = rd.guarded({sec, "per_pair", "pair"}, [&] { return parse_pair_label(label, K); });
                    const std::size_t idx = pair_index(K, np.i, np.j);
                    if (seen[idx])
                    {
                        rd.fail({sec, "per_pair", "pair"}, "pair " + label + " listed twice");
                    }
                    seen[idx] = true;
                    const ArrivalFamily fam = rd.guarded({sec, "per_pair", "family"}, [&] {
                        return arrival_family_from_string(rd.string(e["family"], {sec, "per_pair", "family"}));
                    });
                    ArrivalSpec s;
                    switch (fam)
                    {
                    case ArrivalFamily::bernoulli:
                        s = ArrivalSpec::bernoulli(rd.number(e.value("p", json(0.0)), {sec, "per_pair", "p"}));
                        break;
                    case ArrivalFamily::mixed_poisson:
                        s = ArrivalSpec::mixed_poisson(rd.number(e.value("lambda1", json(0.0)), {sec, "per_pair", "lambda1"}),
                                                       rd.number(e.value("lambda2", json(0.0)), {sec, "per_pair", "lambda2"}));
                        break;
                    case ArrivalFamily::constant:
                        s = ArrivalSpec::constant_count(rd.integer(e.value("count", json(0)), {sec, "per_pair", "count"}));
                        break;
                    }
                    rd.guarded({sec, "per_pair"}, [&] {
                        s.validate();
                        return 0;
                    });
                    out[idx] = s;
                }
                // Pairs not listed receive no requests.
                for (std::size_t p = 0; p < P; ++p)
                {
                    if (!seen[p])
                    {
                        out[p] = ArrivalSpec::constant_count(0);
                    }
                }
                return out;
            }
            const ArrivalFamily fam = a.contains("family") ? rd.guarded({sec, "family"}, [&] {
                return arrival_family_from_string(rd.string(a["family"], {sec, "family"}));
            })
                                                           : ArrivalFamily::bernoulli;
            const double spread = a.contains("spread") ? rd.number(a["spread"], {sec, "spread"}) : 0.5;
            if (!(spread >= 0.0 && spread <= 1.0))
            {
                rd.fail({sec, "spread"}, "spread must lie in [0, 1]");
            }
            const RateMatrix r = read_rates(rd, a, sec, K);
            for (std::size_t p = 0; p < P; ++p)
            {
                out[p] = law_from_rate(rd, fam, r[p], spread, {sec});
                rd.guarded({sec}, [&] {
                    out[p].validate();
                    return 0;
                });
            }
            return out;
        }
    }

    NodePair parse_pair_label(const std::string& s, int nodes)
    {
        const auto dash = s.find('-');
        int a = 0;
        int b = 0;
        try
        {
            if (dash == std::string::npos)
            {
                throw std::invalid_argument("no dash");
            }
            std::size_t used_a = 0;
            std::size_t used_b = 0;
            a = std::stoi(s.substr(0, dash), &used_a);
            b = std::stoi(s.substr(dash + 1), &used_b);
            if (used_a != dash || used_b != s.size() - dash - 1)
            {
                throw std::invalid_argument("trailing text");
            }
        }
        catch (const std::logic_error&)
        {
            throw ValidationError("pair label '" + s + "' is not of the form i-j");
        }
        if (a < 1 || b < 1 || a > nodes || b > nodes || a == b)
        {
            throw ValidationError("pair label '" + s + "' must name two distinct nodes in 1.." + std::to_string(nodes));
        }
        return a < b ? NodePair{a - 1, b - 1} : NodePair{b - 1, a - 1};
    }

    RunConfig parse_config(const std::string& text)
    {
        json root;
        try
        {
            root = json::parse(text);
        }
        catch (const json::parse_error& e)
        {
            const auto byte = std::min<std::size_t>(e.byte, text.size());
            const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
            throw ValidationError("config is not valid JSON (line " + std::to_string(line) + "): " + e.what());
        }
        const Reader rd(text);
        if (!root.is_object())
        {
            rd.fail({}, "top level must be an object");
        }
        rd.known_keys(root, "", {"switch", "arrivals", "protocol", "run"});
        RunConfig cfg;

        const json& sw = rd.section(root, "switch", true);
        rd.known_keys(sw, "switch",
                      {"K", "p", "q", "W", "memory", "T2_ns", "slot_ns", "fidelity_threshold", "memory_full"});
        if (!sw.contains("K"))
        {
            rd.fail({"switch", "K"}, "missing");
        }
        SwitchParams& sp = cfg.params;
        sp.K = static_cast<int>(rd.integer(sw["K"], {"switch", "K"}));
        if (sp.K < 2 || sp.K > 64)
        {
            rd.fail({"switch", "K"}, "K must lie in 2..64");
        }
        if (!sw.contains("p"))
        {
            rd.fail({"switch", "p"}, "missing");
        }
        if (sw["p"].is_array())
        {
            for (const json& v : sw["p"])
            {
                sp.p.push_back(rd.number(v, {"switch", "p"}));
            }
        }
        else
        {
            sp.p.assign(static_cast<std::size_t>(sp.K), rd.number(sw["p"], {"switch", "p"}));
        }
        if (!sw.contains("q"))
        {
            rd.fail({"switch", "q"}, "missing");
        }
        sp.q = rd.number(sw["q"], {"switch", "q"});
        if (sw.contains("W"))
        {
            sp.max_swaps = rd.bounded(sw["W"], {"switch", "W"});
        }
        if (sw.contains("memory"))
        {
            sp.mem_per_interface = rd.bounded(sw["memory"], {"switch", "memory"});
        }
        if (sw.contains("T2_ns"))
        {
            sp.T2_ns = rd.number(sw["T2_ns"], {"switch", "T2_ns"}, true);
        }
        if (sw.contains("slot_ns"))
        {
            sp.slot_ns = rd.number(sw["slot_ns"], {"switch", "slot_ns"});
        }
        if (sw.contains("fidelity_threshold"))
        {
            sp.fidelity_threshold = rd.number(sw["fidelity_threshold"], {"switch", "fidelity_threshold"});
        }
        if (sw.contains("memory_full"))
        {
            const std::string m = rd.string(sw["memory_full"], {"switch", "memory_full"});
            if (m == "drop_newest")
            {
                sp.memory_full = MemoryFullPolicy::drop_newest;
            }
            else if (m == "drop_oldest")
            {
                sp.memory_full = MemoryFullPolicy::drop_oldest;
            }
            else
            {
                rd.fail({"switch", "memory_full"}, "expected drop_newest or drop_oldest");
            }
        }
        // Per-field range checks first, so the message points at the key.
        auto require = [&](bool ok, const char* key, const char* msg) {
            if (!ok)
            {
                rd.fail({"switch", key}, msg);
            }
        };
        require(sp.p.size() == static_cast<std::size_t>(sp.K), "p", "must have one entry per interface");
        for (double pk : sp.p)
        {
            require(pk >= 0.0 && pk <= 1.0, "p", "link generation probabilities must lie in [0, 1]");
        }
        require(sp.q > 0.0 && sp.q <= 1.0, "q", "swap success probability must lie in (0, 1]");
        require(!sp.max_swaps || *sp.max_swaps >= 1, "W", "must be a positive integer or null");
        require(!sp.mem_per_interface || *sp.mem_per_interface >= 1, "memory", "must be a positive integer or null");
        require(sp.T2_ns > 0.0, "T2_ns", "must be positive or \"inf\"");
        require(sp.slot_ns > 0.0 && std::isfinite(sp.slot_ns), "slot_ns", "must be positive and finite");
        require(sp.fidelity_threshold >= 0.5 && sp.fidelity_threshold <= 1.0, "fidelity_threshold",
                "must lie in [0.5, 1]");
        rd.guarded({"switch"}, [&] {
            sp.validate();
            return 0;
        });

        cfg.arrivals = read_arrivals(rd, rd.section(root, "arrivals", true), sp.K);

        const json& pr = rd.section(root, "protocol", true);
        rd.known_keys(pr, "protocol",
                      {"name", "qubit_policy", "request_policy", "T0", "T0_cap", "epsilon", "plan_rates", "visit_order",
                       "immediate_service"});
        ProtocolConfig& pc = cfg.protocol;
        if (!pr.contains("name"))
        {
            rd.fail({"protocol", "name"}, "missing");
        }
        pc.kind = rd.guarded({"protocol", "name"},
                             [&] { return protocol_from_string(rd.string(pr["name"], {"protocol", "name"})); });
        if (pr.contains("qubit_policy"))
        {
            pc.qubit_policy = rd.guarded({"protocol", "qubit_policy"}, [&] {
                return qubit_policy_from_string(rd.string(pr["qubit_policy"], {"protocol", "qubit_policy"}));
            });
        }
        if (pr.contains("request_policy"))
        {
            pc.request_policy = rd.string(pr["request_policy"], {"protocol", "request_policy"});
        }
        if (pr.contains("T0"))
        {
            if (pr["T0"].is_string() && pr["T0"].get<std::string>() == "auto")
            {
                pc.T0_auto = true;
            }
            else
            {
                pc.T0 = rd.integer(pr["T0"], {"protocol", "T0"});
            }
        }
        if (pr.contains("T0_cap"))
        {
            pc.T0_cap = rd.integer(pr["T0_cap"], {"protocol", "T0_cap"});
        }
        if (pr.contains("epsilon"))
        {
            pc.epsilon = rd.number(pr["epsilon"], {"protocol", "epsilon"});
        }
        if (pr.contains("plan_rates"))
        {
            const json& m = pr["plan_rates"];
            if (!m.is_object())
            {
                rd.fail({"protocol", "plan_rates"}, "expected an object with rate, rates or total_rate");
            }
            pc.plan_rates = read_rates(rd, m, "plan_rates", sp.K);
        }
        if (pr.contains("visit_order"))
        {
            if (!pr["visit_order"].is_array())
            {
                rd.fail({"protocol", "visit_order"}, "expected a list of \"i-j\" labels");
            }
            for (const json& v : pr["visit_order"])
            {
                const std::string label = rd.string(v, {"protocol", "visit_order"});
                pc.visit_order.push_back(
                    rd.guarded({"protocol", "visit_order"}, [&] { return parse_pair_label(label, sp.K); }));
            }
        }
        if (pr.contains("immediate_service"))
        {
            pc.immediate_service = rd.boolean(pr["immediate_service"], {"protocol", "immediate_service"});
        }
        rd.guarded({"protocol"}, [&] {
            pc.validate(sp.K);
            return 0;
        });

        const json& rn = rd.section(root, "run", false);
        rd.known_keys(rn, "run", {"horizon_slots", "warmup_slots", "seed", "trace_detail"});
        if (rn.contains("horizon_slots"))
        {
            cfg.horizon_slots = rd.integer(rn["horizon_slots"], {"run", "horizon_slots"});
        }
        if (rn.contains("warmup_slots"))
        {
            cfg.warmup_slots = rd.integer(rn["warmup_slots"], {"run", "warmup_slots"});
        }
        if (rn.contains("seed"))
        {
            if (!rn["seed"].is_number_unsigned() && !(rn["seed"].is_number_integer() && rn["seed"].get<Count>() >= 0))
            {
                rd.fail({"run", "seed"}, "expected a nonnegative 64-bit integer");
            }
            cfg.seed = rn["seed"].get<std::uint64_t>();
        }
        if (rn.contains("trace_detail"))
        {
            cfg.trace_detail = rd.guarded({"run", "trace_detail"}, [&] {
                return trace_detail_from_string(rd.string(rn["trace_detail"], {"run", "trace_detail"}));
            });
        }
        rd.guarded({"run"}, [&] {
            cfg.validate();
            return 0;
        });
        return cfg;
    }

    RunConfig load_config(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw ValidationError("cannot open config " + path.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str());
    }

    namespace
    {
        json number_or_inf(double v)
        {
            return std::isinf(v) ? json("inf") : json(v);
        }

        json rates_json(const RateMatrix& r)
        {
            json m = json::object();
            const auto pairs = all_pairs(r.nodes());
            for (std::size_t p = 0; p < pairs.size(); ++p)
            {
                m[pair_label(pairs[p])] = r[p];
            }
            return json{{"rates", m}};
        }
    }

    std::string serialize_config(const RunConfig& cfg)
    {
        const SwitchParams& sp = cfg.params;
        json sw = json::object();
        sw["K"] = sp.K;
        sw["p"] = sp.p;
        sw["q"] = sp.q;
        sw["W"] = sp.max_swaps ? json(*sp.max_swaps) : json(nullptr);
        sw["memory"] = sp.mem_per_interface ? json(*sp.mem_per_interface) : json(nullptr);
        sw["T2_ns"] = number_or_inf(sp.T2_ns);
        sw["slot_ns"] = sp.slot_ns;
        sw["fidelity_threshold"] = sp.fidelity_threshold;
        sw["memory_full"] = sp.memory_full == MemoryFullPolicy::drop_newest ? "drop_newest" : "drop_oldest";

        json list = json::array();
        const auto pairs = all_pairs(sp.K);
        for (std::size_t p = 0; p < cfg.arrivals.size(); ++p)
        {
            const ArrivalSpec& a = cfg.arrivals[p];
            json e = {{"pair", pair_label(pairs[p])}, {"family", to_string(a.family)}};
            switch (a.family)
            {
            case ArrivalFamily::bernoulli:
                e["p"] = a.p;
                break;
            case ArrivalFamily::mixed_poisson:
                e["lambda1"] = a.lambda1;
                e["lambda2"] = a.lambda2;
                break;
            case ArrivalFamily::constant:
                e["count"] = a.constant;
                break;
            }
            list.push_back(e);
        }

        const ProtocolConfig& pc = cfg.protocol;
        json pr = json::object();
        pr["name"] = to_string(pc.kind);
        pr["qubit_policy"] = to_string(pc.qubit_policy);
        pr["request_policy"] = pc.request_policy;
        if (pc.T0_auto)
        {
            pr["T0"] = "auto";
        }
        else if (pc.T0)
        {
            pr["T0"] = *pc.T0;
        }
        pr["T0_cap"] = pc.T0_cap;
        if (pc.epsilon)
        {
            pr["epsilon"] = *pc.epsilon;
        }
        if (pc.plan_rates)
        {
            pr["plan_rates"] = rates_json(*pc.plan_rates);
        }
        if (!pc.visit_order.empty())
        {
            json order = json::array();
            for (const NodePair& np : pc.visit_order)
            {
                order.push_back(pair_label(np));
            }
            pr["visit_order"] = order;
        }
        pr["immediate_service"] = pc.immediate_service;

        json rn = json::object();
        rn["horizon_slots"] = cfg.horizon_slots;
        if (cfg.warmup_slots)
        {
            rn["warmup_slots"] = *cfg.warmup_slots;
        }
        rn["seed"] = cfg.seed;
        rn["trace_detail"] = to_string(cfg.trace_detail);

        json root = json::object();
        root["switch"] = sw;
        root["arrivals"] = json{{"per_pair", list}};
        root["protocol"] = pr;
        root["run"] = rn;
        return root.dump(2) + "\n";
    }
}
