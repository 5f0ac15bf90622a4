#include "qswitch/engine.hpp"
#include "qswitch/physics.hpp"

#include <algorithm>
#include <cmath>

namespace qswitch
{
    std::string to_string(TraceDetail d)
    {
        switch (d)
        {
        case TraceDetail::summary:
            return "summary";
        case TraceDetail::served:
            return "served";
        case TraceDetail::full:
            return "full";
        }
        return "?";
    }

    TraceDetail trace_detail_from_string(const std::string& s)
    {
        if (s == "summary")
        {
            return TraceDetail::summary;
        }
        if (s == "served")
        {
            return TraceDetail::served;
        }
        if (s == "full")
        {
            return TraceDetail::full;
        }
        throw ValidationError("unknown trace_detail '" + s + "' (summary | served | full)");
    }

    std::string to_string(DiscardCause c)
    {
        switch (c)
        {
        case DiscardCause::memory_full:
            return "memory_full";
        case DiscardCause::fidelity:
            return "fidelity";
        case DiscardCause::protocol:
            return "protocol";
        }
        return "?";
    }

    RateMatrix RunConfig::rates() const
    {
        RateMatrix r(params.K);
        for (std::size_t p = 0; p < arrivals.size() && p < r.size(); ++p)
        {
            r[p] = arrivals[p].rate();
        }
        return r;
    }

    Count RunConfig::warmup() const
    {
        return warmup_slots ? *warmup_slots : horizon_slots / 10;
    }

    void RunConfig::validate() const
    {
        params.validate();
        if (arrivals.size() != pair_count(params.K))
        {
            throw ValidationError("arrivals must give one law per node pair (" + std::to_string(pair_count(params.K)) +
                                  " expected, " + std::to_string(arrivals.size()) + " given)");
        }
        for (const auto& a : arrivals)
        {
            a.validate();
        }
        protocol.validate(params.K);
        if (horizon_slots < 0)
        {
            throw ValidationError("horizon must be nonnegative");
        }
        const Count w = warmup();
        if (w < 0 || w > horizon_slots)
        {
            throw ValidationError("warm-up must lie between 0 and the horizon");
        }
    }

    void Series::push(std::span<const Count> values)
    {
        if (values.size() != width_)
        {
            throw ContractViolation("series row has the wrong width");
        }
        for (Count v : values)
        {
            if (v < 0 || v > static_cast<Count>(UINT32_MAX))
            {
                throw ContractViolation("count does not fit the trace");
            }
            data_.push_back(static_cast<std::uint32_t>(v));
        }
    }

    Admission admit_pair(LinkMemory& memory, EprPair pair, const SwitchParams& params)
    {
        Admission out;
        if (params.mem_per_interface &&
            static_cast<Count>(memory.size(pair.a)) >= *params.mem_per_interface)
        {
            if (params.memory_full == MemoryFullPolicy::drop_newest)
            {
                return out;
            }
            out.evicted = memory.pop_oldest(pair.a);
        }
        memory.push(std::move(pair));
        out.admitted = true;
        return out;
    }

    namespace
    {
        Request serve(Request r, double now_ns, Count slot, double fidelity, bool on_arrival)
        {
            r.served_ns = now_ns;
            r.served_slot = slot;
            r.served_fidelity = fidelity;
            r.served_on_arrival = on_arrival;
            return r;
        }
    }

    std::vector<Request> serve_matches(std::vector<std::vector<EprPair>>& successes,
                                       std::vector<std::deque<Request>>& queues, PairStore& store,
                                       const SwitchParams& params, double now_ns, Count slot)
    {
        std::vector<Request> out;
        for (std::size_t p = 0; p < successes.size(); ++p)
        {
            for (EprPair& e : successes[p])
            {
                if (queues[p].empty())
                {
                    store.add(p, std::move(e));
                    continue;
                }
                out.push_back(serve(std::move(queues[p].front()), now_ns, slot, fidelity_now(e, now_ns, params.T2_ns), false));
                queues[p].pop_front();
            }
            successes[p].clear();
        }
        return out;
    }

    namespace
    {
        class Engine
        {
        public:
            Engine(const RunConfig& cfg, const DecisionProbe& probe)
                : cfg_(cfg), params_(cfg.params), K_(cfg.params.K), P_(pair_count(cfg.params.K)),
                  streams_(cfg.seed), memory_(K_), store_(K_), queues_(P_), probe_(probe)
            {
                const RateMatrix rates = cfg.rates();
                scheduler_ = make_scheduler(cfg.protocol, rates, cfg.arrivals, params_);
                tagged_ = scheduler_->labels_pairs();
                immediate_ = cfg.protocol.immediate_service && serves_on_arrival(cfg.protocol.kind);
                pairs_ = all_pairs(K_);
            }

            RunResult run()
            {
                const Count H = cfg_.horizon_slots;
                RunResult res;
                res.K = K_;
                res.horizon = H;
                res.warmup = cfg_.warmup();
                res.seed = cfg_.seed;
                res.slot_ns = params_.slot_ns;
                res.U = Series(P_);
                res.A = Series(P_);
                res.U.reserve(static_cast<std::size_t>(H));
                res.A.reserve(static_cast<std::size_t>(H));
                const bool full = cfg_.trace_detail == TraceDetail::full;
                if (full)
                {
                    res.E = Series(P_);
                    res.E0 = Series(static_cast<std::size_t>(K_));
                    res.F = Series(P_);
                    res.R = Series(P_);
                    res.I = Series(P_);
                }
                res.served_per_pair.assign(P_, 0);
                res.arrivals_per_pair.assign(P_, 0);
                backlog_pair_sum_.assign(P_, 0.0);
                res_ = &res;

                for (Count t = 0; t < H; ++t)
                {
                    try
                    {
                        slot(t, full);
                    }
                    catch (const RunAborted&)
                    {
                        throw;
                    }
                    catch (const ContractViolation& e)
                    {
                        throw RunAborted(t, e.what());
                    }
                }
                res.final_state = observe();
                res.backlog.push_back(total_backlog(res.final_state));
                finish(res);
                res_ = nullptr;
                return res;
            }

        private:
            QueueState observe() const
            {
                QueueState s = QueueState::zero(K_);
                for (std::size_t p = 0; p < P_; ++p)
                {
                    s.U[p] = static_cast<Count>(queues_[p].size());
                    s.E[p] = static_cast<Count>(store_.size(p));
                }
                s.E0 = memory_.occupancy();
                return s;
            }

            void log_discard(Count t, DiscardCause cause, Count n)
            {
                if (n <= 0)
                {
                    return;
                }
                auto& d = res_->discards;
                if (!d.empty() && d.back().slot == t && d.back().cause == cause)
                {
                    d.back().count += n;
                }
                else
                {
                    d.push_back({t, cause, n});
                }
                switch (cause)
                {
                case DiscardCause::memory_full:
                    res_->totals.discard_memory_full += n;
                    break;
                case DiscardCause::fidelity:
                    res_->totals.discard_fidelity += n;
                    break;
                case DiscardCause::protocol:
                    res_->totals.discard_protocol += n;
                    break;
                }
            }

            void record_served(std::size_t p, const Request& r)
            {
                auto& res = *res_;
                ++res.totals.served;
                ++res.served_per_pair[p];
                if (r.served_on_arrival)
                {
                    ++res.totals.served_on_arrival;
                }
                if (r.arrival_slot >= res.warmup)
                {
                    ++counted_;
                    fidelity_sum_ += *r.served_fidelity;
                    latency_ns_sum_ += *r.served_ns - r.arrival_ns;
                    latency_slots_sum_ += static_cast<double>(*r.served_slot - r.arrival_slot);
                }
                if (cfg_.trace_detail != TraceDetail::summary)
                {
                    res.served.push_back(r);
                }
            }

            std::size_t pair_of(const Request& r) const { return pair_index(K_, r.pair.i, r.pair.j); }

            void slot(Count t, bool full)
            {
                auto& res = *res_;
                const double S = params_.slot_ns;
                const double tau = static_cast<double>(t) * S;
                const QueueState start = observe();
                res.U.push(start.U.values());
                const Count backlog = total_backlog(start);
                res.backlog.push_back(backlog);
                if (t >= res.warmup)
                {
                    backlog_sum_ += static_cast<double>(backlog);
                    for (std::size_t p = 0; p < P_; ++p)
                    {
                        backlog_pair_sum_[p] += static_cast<double>(start.U[p]);
                    }
                }

                SlotEvents ev = SlotEvents::zero(K_);

                // Stored end-to-end pairs serve waiting requests first.
                for (std::size_t p = 0; p < P_; ++p)
                {
                    while (!queues_[p].empty() && store_.size(p) > 0)
                    {
                        EprPair e = *store_.take(p, cfg_.protocol.qubit_policy);
                        Request r = serve(std::move(queues_[p].front()), tau, t, fidelity_now(e, tau, params_.T2_ns), false);
                        queues_[p].pop_front();
                        record_served(p, r);
                    }
                }

                // Decision and swaps at tau.
                const QueueState observed = observe();
                SchedulerDecision decision = scheduler_->decide(observed, memory_, t);
                if (params_.max_swaps)
                {
                    decision.F = truncate_to_budget(decision.F, decision.weight, *params_.max_swaps);
                }
                if (probe_)
                {
                    probe_(t, observed, decision.F);
                }
                auto swaps = realize(decision, memory_, cfg_.protocol.qubit_policy, tagged_);
                const SwapOutcomes outcome = sample_swap_outcomes(params_.q, decision.F, streams_, t);
                std::vector<std::vector<EprPair>> successes(P_);
                for (std::size_t p = 0; p < P_; ++p)
                {
                    for (std::size_t k = 0; k < swaps[p].size(); ++k)
                    {
                        if (outcome.per_attempt[p][k])
                        {
                            successes[p].push_back(swapped_pair(next_pair_++, swaps[p][k].left, swaps[p][k].right, tau));
                        }
                    }
                }
                ev.F = decision.F;
                ev.R = outcome.R;
                for (Request& r : serve_matches(successes, queues_, store_, params_, tau, t))
                {
                    record_served(pair_of(r), r);
                }

                if (scheduler_->discard_at(t))
                {
                    const std::vector<Count> links = memory_.occupancy();
                    const std::vector<Count> e2e = store_.occupancy();
                    const auto ids = discard_sweep(memory_, store_, t, scheduler_->period());
                    for (int k = 0; k < K_; ++k)
                    {
                        ev.D0[static_cast<std::size_t>(k)] += links[static_cast<std::size_t>(k)];
                    }
                    for (std::size_t p = 0; p < P_; ++p)
                    {
                        ev.De[p] += e2e[p];
                    }
                    log_discard(t, DiscardCause::protocol, static_cast<Count>(ids.size()));
                }

                arrivals(t, tau, ev);
                generation(t, tau + S, ev);

                // Fidelity expiry at the slot boundary.
                const std::vector<Count> d0 = memory_.expire(tau + S, params_);
                const std::vector<Count> de = store_.expire(tau + S, params_);
                Count expired = 0;
                for (int k = 0; k < K_; ++k)
                {
                    ev.D0[static_cast<std::size_t>(k)] += d0[static_cast<std::size_t>(k)];
                    expired += d0[static_cast<std::size_t>(k)];
                }
                for (std::size_t p = 0; p < P_; ++p)
                {
                    ev.De[p] += de[p];
                    expired += de[p];
                }
                log_discard(t, DiscardCause::fidelity, expired);

                res.A.push(ev.A.values());
                res.totals.attempts += ev.F.total();
                res.totals.successes += ev.R.total();
                if (full)
                {
                    res.E.push(start.E.values());
                    res.E0.push(start.E0);
                    res.F.push(ev.F.values());
                    res.R.push(ev.R.values());
                    res.I.push(ev.I.values());
                }

                const QueueState next = observe();
                if (ev.plain())
                {
                    const QueueState expect = step_queues(start, ev);
                    if (!(expect == next))
                    {
                        throw RunAborted(t, "queue counts diverged from the slot update");
                    }
                    ++res.plain_slots_checked;
                }
                for (std::size_t p = 0; p < P_; ++p)
                {
                    if (res.arrivals_per_pair[p] != res.served_per_pair[p] + next.U[p])
                    {
                        throw RunAborted(t, "request accounting broke for pair " + pair_label(pairs_[p]));
                    }
                }
            }

            void arrivals(Count t, double tau, SlotEvents& ev)
            {
                auto& res = *res_;
                struct Arrival
                {
                    double at;
                    std::size_t pair;
                };
                std::vector<Arrival> batch;
                for (std::size_t p = 0; p < P_; ++p)
                {
                    const ArrivalSample s = sample_arrivals(cfg_.arrivals[p], p, t, streams_, params_.slot_ns);
                    for (double off : s.offsets_ns)
                    {
                        batch.push_back({tau + off, p});
                    }
                    ev.A[p] = s.count;
                    res.arrivals_per_pair[p] += s.count;
                    res.totals.arrivals += s.count;
                }
                std::stable_sort(batch.begin(), batch.end(), [](const Arrival& a, const Arrival& b) { return a.at < b.at; });

                std::vector<std::optional<CounterRng>> swap_rng(P_);
                Count budget = params_.max_swaps ? *params_.max_swaps - ev.F.total() : std::numeric_limits<Count>::max();
                for (const Arrival& a : batch)
                {
                    Request r;
                    r.id = next_request_++;
                    r.pair = pairs_[a.pair];
                    r.arrival_ns = a.at;
                    r.arrival_slot = t;
                    if (immediate_ && serve_now(r, a.pair, t, ev, swap_rng, budget))
                    {
                        continue;
                    }
                    queues_[a.pair].push_back(std::move(r));
                }
            }

            bool serve_now(Request& r, std::size_t p, Count t, SlotEvents& ev, std::vector<std::optional<CounterRng>>& rngs,
                           Count& budget)
            {
                const double now = r.arrival_ns;
                const int i = r.pair.i;
                const int j = r.pair.j;
                // Requests already waiting come first.
                if (!queues_[p].empty())
                {
                    return false;
                }
                const Count stale = store_.expire_pair(p, now, params_);
                if (stale > 0)
                {
                    ev.De[p] += stale;
                    log_discard(t, DiscardCause::fidelity, stale);
                }
                if (store_.size(p) > 0)
                {
                    EprPair e = *store_.take(p, cfg_.protocol.qubit_policy);
                    record_served(p, serve(std::move(r), now, t, fidelity_now(e, now, params_.T2_ns), true));
                    ++ev.I[p];
                    return true;
                }
                const std::optional<int> tag_i = tagged_ ? std::optional<int>(j) : std::nullopt;
                const std::optional<int> tag_j = tagged_ ? std::optional<int>(i) : std::nullopt;
                for (int k : {i, j})
                {
                    const Count gone = memory_.expire_interface(k, now, params_);
                    ev.D0[static_cast<std::size_t>(k)] += gone;
                    log_discard(t, DiscardCause::fidelity, gone);
                }
                while (budget > 0 && memory_.size(i, tag_i) > 0 && memory_.size(j, tag_j) > 0)
                {
                    if (!rngs[p])
                    {
                        rngs[p] = streams_.stream(StreamKind::immediate_swap, p, static_cast<std::uint64_t>(t));
                    }
                    EprPair left = std::move(memory_.take(i, tag_i, 1, cfg_.protocol.qubit_policy).front());
                    EprPair right = std::move(memory_.take(j, tag_j, 1, cfg_.protocol.qubit_policy).front());
                    --budget;
                    ++ev.F[p];
                    if (!rngs[p]->bernoulli(params_.q))
                    {
                        continue;
                    }
                    ++ev.R[p];
                    ++ev.I[p];
                    const EprPair e = swapped_pair(next_pair_++, left, right, now);
                    record_served(p, serve(std::move(r), now, t, fidelity_now(e, now, params_.T2_ns), true));
                    return true;
                }
                return false;
            }

            void generation(Count t, double born, SlotEvents& ev)
            {
                const std::vector<Count> C = sample_link_generation(params_, streams_, t);
                for (int k = 0; k < K_; ++k)
                {
                    if (C[static_cast<std::size_t>(k)] == 0)
                    {
                        continue;
                    }
                    ++res_->totals.generated;
                    EprPair e = EprPair::link(next_pair_++, k, born);
                    if (tagged_)
                    {
                        e.label = scheduler_->label(k, t, streams_);
                        if (!e.label)
                        {
                            log_discard(t, DiscardCause::protocol, 1);
                            continue;
                        }
                    }
                    const Admission adm = admit_pair(memory_, std::move(e), params_);
                    if (!adm.admitted)
                    {
                        log_discard(t, DiscardCause::memory_full, 1);
                        continue;
                    }
                    ++ev.C0[static_cast<std::size_t>(k)];
                    if (adm.evicted)
                    {
                        ++ev.D0[static_cast<std::size_t>(k)];
                        log_discard(t, DiscardCause::memory_full, 1);
                    }
                }
            }

            void finish(RunResult& res) const
            {
                RunAggregates& g = res.aggregates;
                g.counted = counted_;
                if (counted_ > 0)
                {
                    const auto n = static_cast<double>(counted_);
                    g.mean_fidelity = fidelity_sum_ / n;
                    g.mean_latency_ns = latency_ns_sum_ / n;
                    g.mean_latency_slots = latency_slots_sum_ / n;
                }
                const Count window = res.horizon - res.warmup;
                g.mean_backlog_pair.assign(P_, 0.0);
                if (window > 0)
                {
                    g.mean_backlog = backlog_sum_ / static_cast<double>(window);
                    for (std::size_t p = 0; p < P_; ++p)
                    {
                        g.mean_backlog_pair[p] = backlog_pair_sum_[p] / static_cast<double>(window);
                    }
                }
            }

            const RunConfig& cfg_;
            const SwitchParams& params_;
            int K_;
            std::size_t P_;
            RngStreams streams_;
            LinkMemory memory_;
            PairStore store_;
            std::vector<std::deque<Request>> queues_;
            DecisionProbe probe_;
            std::unique_ptr<Scheduler> scheduler_;
            std::vector<NodePair> pairs_;
            bool tagged_ = false;
            bool immediate_ = false;
            PairId next_pair_ = 1;
            RequestId next_request_ = 1;
            RunResult* res_ = nullptr;

            Count counted_ = 0;
            double fidelity_sum_ = 0.0;
            double latency_ns_sum_ = 0.0;
            double latency_slots_sum_ = 0.0;
            double backlog_sum_ = 0.0;
            std::vector<double> backlog_pair_sum_;
        };
    }

    RunResult run(const RunConfig& config, const DecisionProbe& probe)
    {
        config.validate();
        Engine engine(config, probe);
        return engine.run();
    }
}
