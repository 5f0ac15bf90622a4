#include "qswitch/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace qswitch
{
    std::string to_string(Protocol p)
    {
        switch (p)
        {
        case Protocol::stationary:
            return "stationary";
        case Protocol::stationary_discard:
            return "stationary-discard";
        case Protocol::maxweight:
            return "maxweight";
        case Protocol::maxweight_discard:
            return "maxweight-discard";
        case Protocol::on_demand:
            return "on-demand";
        }
        return "?";
    }

    Protocol protocol_from_string(const std::string& s)
    {
        for (Protocol p : {Protocol::stationary, Protocol::stationary_discard, Protocol::maxweight,
                           Protocol::maxweight_discard, Protocol::on_demand})
        {
            if (to_string(p) == s)
            {
                return p;
            }
        }
        throw ValidationError("unknown protocol '" + s +
                              "' (stationary | stationary-discard | maxweight | maxweight-discard | on-demand)");
    }

    std::string to_string(QubitPolicy p)
    {
        return p == QubitPolicy::yqf ? "yqf" : "oqf";
    }

    QubitPolicy qubit_policy_from_string(const std::string& s)
    {
        if (s == "yqf")
        {
            return QubitPolicy::yqf;
        }
        if (s == "oqf")
        {
            return QubitPolicy::oqf;
        }
        throw ValidationError("unknown qubit policy '" + s + "' (yqf | oqf)");
    }

    bool is_stationary(Protocol p)
    {
        return p == Protocol::stationary || p == Protocol::stationary_discard;
    }

    bool is_maxweight(Protocol p)
    {
        return p == Protocol::maxweight || p == Protocol::maxweight_discard;
    }

    bool discards_periodically(Protocol p)
    {
        return p == Protocol::stationary_discard || p == Protocol::maxweight_discard;
    }

    bool serves_on_arrival(Protocol p)
    {
        return is_stationary(p) || p == Protocol::on_demand;
    }

    void ProtocolConfig::validate(int nodes) const
    {
        if (T0 && *T0 < 1)
        {
            throw ValidationError("T0 must be a positive integer");
        }
        if (T0_cap < 1)
        {
            throw ValidationError("T0 cap must be a positive integer");
        }
        if (is_maxweight(kind) && !T0 && !T0_auto)
        {
            throw ValidationError("maxweight needs protocol.T0 (an integer or \"auto\")");
        }
        if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon)))
        {
            throw ValidationError("epsilon must be positive");
        }
        if (plan_rates)
        {
            if (plan_rates->nodes() != nodes)
            {
                throw ValidationError("plan_rates must cover every node pair");
            }
            plan_rates->validate();
        }
        if (request_policy != "fifo")
        {
            throw ValidationError("unknown request policy '" + request_policy + "' (fifo)");
        }
        if (!visit_order.empty())
        {
            std::vector<bool> seen(pair_count(nodes), false);
            for (const NodePair& p : visit_order)
            {
                if (p.i < 0 || p.j < 0 || p.i >= nodes || p.j >= nodes || p.i == p.j)
                {
                    throw ValidationError("visit_order names a pair outside the switch");
                }
                const std::size_t idx = pair_index(nodes, p.i, p.j);
                if (seen[idx])
                {
                    throw ValidationError("visit_order repeats a pair");
                }
                seen[idx] = true;
            }
            if (visit_order.size() != seen.size())
            {
                throw ValidationError("visit_order must list every node pair");
            }
        }
    }

    std::optional<int> Scheduler::label(int, Count, const RngStreams&) const
    {
        return std::nullopt;
    }

    // Stationary -------------------------------------------------------------------

    std::optional<int> stationary_label(int iface, const StationaryPlan& plan, const RngStreams& streams, Count slot)
    {
        const auto& row = plan.label_prob.at(static_cast<std::size_t>(iface));
        const double mass = std::accumulate(row.begin(), row.end(), 0.0);
        if (mass > 1.0 + kBoundaryTol)
        {
            throw ContractViolation("label probabilities on interface " + std::to_string(iface + 1) + " exceed 1");
        }
        auto rng = streams.stream(StreamKind::labeling, static_cast<std::uint64_t>(iface),
                                  static_cast<std::uint64_t>(slot));
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j)
        {
            if (row[j] <= 0.0)
            {
                continue;
            }
            acc += row[j];
            if (u < acc)
            {
                return static_cast<int>(j);
            }
        }
        return std::nullopt;
    }

    SymMatrix<Count> stationary_decide(const LinkMemory& memory)
    {
        const int K = memory.nodes();
        SymMatrix<Count> F(K);
        for (int i = 0; i < K; ++i)
        {
            for (int j = i + 1; j < K; ++j)
            {
                F.at(i, j) = static_cast<Count>(std::min(memory.size(i, j), memory.size(j, i)));
            }
        }
        return F;
    }

    std::vector<PairId> discard_sweep(LinkMemory& memory, PairStore& store, Count t, Count T0)
    {
        if (!is_period_end(t, T0))
        {
            throw ContractViolation("discard sweep requested at slot " + std::to_string(t) +
                                    ", which does not end a period of " + std::to_string(T0));
        }
        std::vector<PairId> ids = memory.clear();
        const std::vector<PairId> e2e = store.clear();
        ids.insert(ids.end(), e2e.begin(), e2e.end());
        return ids;
    }

    StationaryScheduler::StationaryScheduler(StationaryPlan plan, bool discard)
        : plan_(std::move(plan)), discard_(discard)
    {
    }

    Protocol StationaryScheduler::protocol() const
    {
        return discard_ ? Protocol::stationary_discard : Protocol::stationary;
    }

    std::optional<int> StationaryScheduler::label(int iface, Count slot, const RngStreams& streams) const
    {
        return stationary_label(iface, plan_, streams, slot);
    }

    SchedulerDecision StationaryScheduler::decide(const QueueState&, const LinkMemory& memory, Count t)
    {
        SchedulerDecision d;
        d.F = stationary_decide(memory);
        d.weight = d.F;
        d.discard_now = discard_at(t);
        return d;
    }

    bool StationaryScheduler::discard_at(Count t) const
    {
        return discard_ && is_period_end(t, plan_.T0);
    }

    // Max-weight b-matching ----------------------------------------------------------

    namespace
    {
        struct Edge
        {
            int u;
            int v;
            std::size_t pair;
            Count cap;
            Count w; // perturbed weight, > 0
        };

        // Max-weight fractional b-matching through its bipartite double cover,
        // solved as a min-cost flow by successive shortest paths. Returns the
        // doubled edge values x2 (x = x2 / 2) and their weighted sum.
        class DoubleCover
        {
        public:
            DoubleCover(int nodes, const std::vector<Edge>& edges) : K_(nodes), edges_(edges) {}

            Count solve(const std::vector<Count>& node_cap, const std::vector<Count>& edge_cap, std::vector<Count>& x2)
            {
                build(node_cap, edge_cap);
                const int n = 2 * K_ + 2;
                const int s = 0;
                const int t = n - 1;
                std::vector<Count> dist(static_cast<std::size_t>(n));
                std::vector<int> via(static_cast<std::size_t>(n));
                Count gain = 0;
                for (;;)
                {
                    std::fill(dist.begin(), dist.end(), kInf);
                    std::fill(via.begin(), via.end(), -1);
                    dist[s] = 0;
                    // Bellman-Ford; the residual graph never has a negative cycle.
                    for (int round = 0; round < n; ++round)
                    {
                        bool changed = false;
                        for (std::size_t a = 0; a < arcs_.size(); ++a)
                        {
                            const Arc& arc = arcs_[a];
                            if (arc.cap <= 0 || dist[static_cast<std::size_t>(arc.from)] == kInf)
                            {
                                continue;
                            }
                            const Count nd = dist[static_cast<std::size_t>(arc.from)] + arc.cost;
                            if (nd < dist[static_cast<std::size_t>(arc.to)])
                            {
                                dist[static_cast<std::size_t>(arc.to)] = nd;
                                via[static_cast<std::size_t>(arc.to)] = static_cast<int>(a);
                                changed = true;
                            }
                        }
                        if (!changed)
                        {
                            break;
                        }
                    }
                    if (dist[static_cast<std::size_t>(t)] == kInf || dist[static_cast<std::size_t>(t)] >= 0)
                    {
                        break;
                    }
                    Count push = kInf;
                    for (int v = t; v != s; v = arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])].from)
                    {
                        push = std::min(push, arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])].cap);
                    }
                    for (int v = t; v != s; v = arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])].from)
                    {
                        const auto a = static_cast<std::size_t>(via[static_cast<std::size_t>(v)]);
                        arcs_[a].cap -= push;
                        arcs_[a ^ 1U].cap += push;
                    }
                    gain -= push * dist[static_cast<std::size_t>(t)];
                }
                x2.assign(edges_.size(), 0);
                for (std::size_t e = 0; e < edges_.size(); ++e)
                {
                    // Reverse arcs hold the flow pushed through each cross arc.
                    x2[e] = arcs_[cross_[e][0] ^ 1U].cap + arcs_[cross_[e][1] ^ 1U].cap;
                }
                return gain;
            }

        private:
            struct Arc
            {
                int from;
                int to;
                Count cap;
                Count cost;
            };

            static constexpr Count kInf = std::numeric_limits<Count>::max() / 4;

            void add_arc(int from, int to, Count cap, Count cost)
            {
                arcs_.push_back({from, to, cap, cost});
                arcs_.push_back({to, from, 0, -cost});
            }

            void build(const std::vector<Count>& node_cap, const std::vector<Count>& edge_cap)
            {
                arcs_.clear();
                cross_.assign(edges_.size(), {0, 0});
                const int t = 2 * K_ + 1;
                for (int u = 0; u < K_; ++u)
                {
                    add_arc(0, 1 + u, node_cap[static_cast<std::size_t>(u)], 0);
                    add_arc(1 + K_ + u, t, node_cap[static_cast<std::size_t>(u)], 0);
                }
                for (std::size_t e = 0; e < edges_.size(); ++e)
                {
                    const Edge& ed = edges_[e];
                    cross_[e][0] = arcs_.size();
                    add_arc(1 + ed.u, 1 + K_ + ed.v, edge_cap[e], -ed.w);
                    cross_[e][1] = arcs_.size();
                    add_arc(1 + ed.v, 1 + K_ + ed.u, edge_cap[e], -ed.w);
                }
            }

            int K_;
            const std::vector<Edge>& edges_;
            std::vector<Arc> arcs_;
            std::vector<std::array<std::size_t, 2>> cross_;
        };

        class BranchAndBound
        {
        public:
            BranchAndBound(int nodes, std::vector<Edge> edges, std::vector<Count> caps)
                : K_(nodes), edges_(std::move(edges)), caps_(std::move(caps)), cover_(K_, edges_)
            {
            }

            std::vector<Count> run()
            {
                greedy();
                std::vector<Count> lo(edges_.size(), 0);
                std::vector<Count> hi(edges_.size());
                for (std::size_t e = 0; e < edges_.size(); ++e)
                {
                    hi[e] = edges_[e].cap;
                }
                visit(lo, hi);
                return best_;
            }

        private:
            void greedy()
            {
                std::vector<std::size_t> order(edges_.size());
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return edges_[a].w > edges_[b].w; });
                std::vector<Count> rem = caps_;
                best_.assign(edges_.size(), 0);
                best_value_ = 0;
                for (std::size_t e : order)
                {
                    const Edge& ed = edges_[e];
                    const Count take = std::min(rem[static_cast<std::size_t>(ed.u)], rem[static_cast<std::size_t>(ed.v)]);
                    best_[e] = take;
                    rem[static_cast<std::size_t>(ed.u)] -= take;
                    rem[static_cast<std::size_t>(ed.v)] -= take;
                    best_value_ += take * ed.w;
                }
            }

            void visit(std::vector<Count>& lo, std::vector<Count>& hi)
            {
                std::vector<Count> node_cap = caps_;
                Count fixed = 0;
                std::vector<Count> room(edges_.size());
                for (std::size_t e = 0; e < edges_.size(); ++e)
                {
                    const Edge& ed = edges_[e];
                    node_cap[static_cast<std::size_t>(ed.u)] -= lo[e];
                    node_cap[static_cast<std::size_t>(ed.v)] -= lo[e];
                    fixed += lo[e] * ed.w;
                    room[e] = hi[e] - lo[e];
                }
                if (std::any_of(node_cap.begin(), node_cap.end(), [](Count c) { return c < 0; }))
                {
                    return;
                }
                std::vector<Count> x2;
                const Count doubled = cover_.solve(node_cap, room, x2);
                const Count bound = fixed + doubled / 2;
                if (bound <= best_value_)
                {
                    return;
                }
                std::size_t frac = edges_.size();
                for (std::size_t e = 0; e < edges_.size(); ++e)
                {
                    if (x2[e] % 2 != 0)
                    {
                        frac = e;
                        break;
                    }
                }
                if (frac == edges_.size())
                {
                    best_value_ = fixed + doubled / 2;
                    best_.resize(edges_.size());
                    for (std::size_t e = 0; e < edges_.size(); ++e)
                    {
                        best_[e] = lo[e] + x2[e] / 2;
                    }
                    return;
                }
                const Count floor_v = lo[frac] + x2[frac] / 2;
                // Ceil branch first, then floor.
                const Count saved_lo = lo[frac];
                const Count saved_hi = hi[frac];
                if (floor_v + 1 <= hi[frac])
                {
                    lo[frac] = floor_v + 1;
                    visit(lo, hi);
                    lo[frac] = saved_lo;
                }
                hi[frac] = floor_v;
                visit(lo, hi);
                hi[frac] = saved_hi;
            }

            int K_;
            std::vector<Edge> edges_;
            std::vector<Count> caps_;
            DoubleCover cover_;
            std::vector<Count> best_;
            Count best_value_ = 0;
        };

        bool fits_int64(const std::vector<Edge>& edges, Count scale)
        {
            long double total = 0.0L;
            for (const Edge& e : edges)
            {
                total += (static_cast<long double>(e.w) * static_cast<long double>(scale) +
                          static_cast<long double>(edges.size())) *
                         static_cast<long double>(e.cap) * 4.0L;
            }
            return total < static_cast<long double>(std::numeric_limits<Count>::max() / 8);
        }
    }

    SymMatrix<Count> solve_mw(const SymMatrix<Count>& weights, const std::vector<Count>& capacities)
    {
        const int K = weights.nodes();
        if (capacities.size() != static_cast<std::size_t>(K))
        {
            throw ContractViolation("one capacity per interface is required");
        }
        for (Count c : capacities)
        {
            if (c < 0)
            {
                throw ContractViolation("capacities must be nonnegative");
            }
        }
        std::vector<Edge> edges;
        for (int i = 0; i < K; ++i)
        {
            for (int j = i + 1; j < K; ++j)
            {
                const Count w = weights(i, j);
                if (w < 0)
                {
                    throw ContractViolation("weights must be nonnegative");
                }
                const Count cap = std::min(capacities[static_cast<std::size_t>(i)], capacities[static_cast<std::size_t>(j)]);
                if (w > 0 && cap > 0)
                {
                    edges.push_back({i, j, pair_index(K, i, j), cap, w});
                }
            }
        }
        SymMatrix<Count> F(K);
        if (edges.empty())
        {
            return F;
        }
        // Tie preference: w' = w S + beta_e with beta_e = m - rank, where S
        // exceeds any total of beta, so the primary objective is untouched.
        const auto m = static_cast<Count>(edges.size());
        Count scale = 1;
        for (std::size_t r = 0; r < edges.size(); ++r)
        {
            scale += (m - static_cast<Count>(r)) * edges[r].cap;
        }
        if (fits_int64(edges, scale))
        {
            for (std::size_t r = 0; r < edges.size(); ++r)
            {
                edges[r].w = edges[r].w * scale + (m - static_cast<Count>(r));
            }
        }
        const std::vector<Edge> kept = edges;
        BranchAndBound bb(K, std::move(edges), capacities);
        const std::vector<Count> x = bb.run();
        for (std::size_t e = 0; e < kept.size(); ++e)
        {
            F[kept[e].pair] = x[e];
        }
        return F;
    }

    Count matching_weight(const SymMatrix<Count>& weights, const SymMatrix<Count>& F)
    {
        Count s = 0;
        for (std::size_t p = 0; p < F.size(); ++p)
        {
            s += weights[p] * F[p];
        }
        return s;
    }

    SchedulerDecision maxweight_decide(MaxWeightState& state, const QueueState& observed, Count t)
    {
        const int K = observed.nodes();
        SchedulerDecision d;
        if (state.U_snapshot.nodes() != K)
        {
            state.U_snapshot = SymMatrix<Count>(K);
        }
        if (!is_period_end(t, state.T0))
        {
            d.F = SymMatrix<Count>(K);
            d.weight = d.F;
            return d;
        }
        d.F = solve_mw(state.U_snapshot, observed.E0);
        d.weight = state.U_snapshot;
        state.U_snapshot = observed.U;
        return d;
    }

    MaxWeightScheduler::MaxWeightScheduler(int nodes, Count T0, bool discard)
        : state_{T0, SymMatrix<Count>(nodes)}, discard_(discard)
    {
        if (T0 < 1)
        {
            throw ValidationError("T0 must be a positive integer");
        }
    }

    Protocol MaxWeightScheduler::protocol() const
    {
        return discard_ ? Protocol::maxweight_discard : Protocol::maxweight;
    }

    SchedulerDecision MaxWeightScheduler::decide(const QueueState& observed, const LinkMemory&, Count t)
    {
        SchedulerDecision d = maxweight_decide(state_, observed, t);
        d.discard_now = discard_at(t);
        return d;
    }

    bool MaxWeightScheduler::discard_at(Count t) const
    {
        return discard_ && is_period_end(t, state_.T0);
    }

    // On-demand ------------------------------------------------------------------

    SymMatrix<Count> on_demand_decide(const QueueState& observed, const std::vector<NodePair>& visit_order)
    {
        const int K = observed.nodes();
        const std::vector<NodePair> order = visit_order.empty() ? all_pairs(K) : visit_order;
        std::vector<Count> rem = observed.E0;
        SymMatrix<Count> F(K);
        for (const NodePair& p : order)
        {
            const auto i = static_cast<std::size_t>(p.i);
            const auto j = static_cast<std::size_t>(p.j);
            const Count f = std::min({observed.U(p.i, p.j), rem[i], rem[j]});
            if (f <= 0)
            {
                continue;
            }
            F.at(p.i, p.j) = f;
            rem[i] -= f;
            rem[j] -= f;
        }
        return F;
    }

    OnDemandScheduler::OnDemandScheduler(std::vector<NodePair> visit_order) : visit_order_(std::move(visit_order)) {}

    SchedulerDecision OnDemandScheduler::decide(const QueueState& observed, const LinkMemory&, Count)
    {
        SchedulerDecision d;
        d.F = on_demand_decide(observed, visit_order_);
        d.weight = observed.U;
        return d;
    }

    std::vector<std::string> on_demand_violations(const QueueState& s, const SymMatrix<Count>& F)
    {
        std::vector<std::string> out;
        const int K = s.nodes();
        for (int i = 0; i < K; ++i)
        {
            if (F.row_sum(i) > s.E0[static_cast<std::size_t>(i)])
            {
                out.push_back("interface " + std::to_string(i + 1) + " schedules more swaps than stored pairs");
            }
        }
        for (int i = 0; i < K; ++i)
        {
            for (int j = i + 1; j < K; ++j)
            {
                const Count f = F(i, j);
                const std::string tag = pair_label({i, j});
                if (f < 0 || f != F(j, i))
                {
                    out.push_back(tag + ": attempts must be symmetric nonnegative integers");
                }
                if (f > s.U(i, j))
                {
                    out.push_back(tag + ": more attempts than pending requests");
                }
                const Count slack_i = s.E0[static_cast<std::size_t>(i)] - F.row_sum(i);
                const Count slack_j = s.E0[static_cast<std::size_t>(j)] - F.row_sum(j);
                if (slack_i * slack_j * (s.U(i, j) - f) != 0)
                {
                    out.push_back(tag + ": requests, pairs on both interfaces all left over");
                }
            }
        }
        return out;
    }

    // Policies -------------------------------------------------------------------

    std::vector<PairId> select_qubits(QubitPolicy policy, const std::vector<EprPair>& candidates, std::size_t n)
    {
        if (n > candidates.size())
        {
            throw ContractViolation("asked for " + std::to_string(n) + " qubits but only " +
                                    std::to_string(candidates.size()) + " are stored");
        }
        std::vector<const EprPair*> order;
        order.reserve(candidates.size());
        for (const EprPair& e : candidates)
        {
            order.push_back(&e);
        }
        const bool young = policy == QubitPolicy::yqf;
        std::stable_sort(order.begin(), order.end(), [young](const EprPair* a, const EprPair* b) {
            const double ba = a->qubit_birth_ns[0];
            const double bb = b->qubit_birth_ns[0];
            if (ba != bb)
            {
                return young ? ba > bb : ba < bb;
            }
            return a->id < b->id;
        });
        std::vector<PairId> out;
        out.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            out.push_back(order[k]->id);
        }
        return out;
    }

    std::vector<Request> select_requests(const std::vector<Request>& queue, std::size_t n)
    {
        std::vector<Request> sorted = queue;
        std::stable_sort(sorted.begin(), sorted.end(), [](const Request& a, const Request& b) {
            return a.arrival_ns != b.arrival_ns ? a.arrival_ns < b.arrival_ns : a.id < b.id;
        });
        sorted.resize(std::min(n, sorted.size()));
        return sorted;
    }

    SymMatrix<Count> truncate_to_budget(const SymMatrix<Count>& F, const SymMatrix<Count>& weight, Count W)
    {
        if (F.total() <= W)
        {
            return F;
        }
        std::vector<std::size_t> order(F.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });
        SymMatrix<Count> out(F.nodes());
        Count left = W;
        for (std::size_t p : order)
        {
            const Count take = std::min(F[p], left);
            out[p] = take;
            left -= take;
        }
        return out;
    }

    std::vector<std::vector<SwapPair>> realize(SchedulerDecision& decision, LinkMemory& memory, QubitPolicy policy,
                                               bool tagged)
    {
        const int K = decision.F.nodes();
        std::vector<std::vector<SwapPair>> out(decision.F.size());
        decision.chosen.assign(decision.F.size(), {});
        for (int i = 0; i < K; ++i)
        {
            for (int j = i + 1; j < K; ++j)
            {
                const std::size_t p = pair_index(K, i, j);
                const auto n = static_cast<std::size_t>(decision.F[p]);
                if (n == 0)
                {
                    continue;
                }
                std::optional<int> tag_i = tagged ? std::optional<int>(j) : std::nullopt;
                std::optional<int> tag_j = tagged ? std::optional<int>(i) : std::nullopt;
                if (memory.size(i, tag_i) < n || memory.size(j, tag_j) < n)
                {
                    throw ContractViolation("decision for " + pair_label({i, j}) + " needs more stored pairs than exist");
                }
                std::vector<EprPair> left = memory.take(i, tag_i, n, policy);
                std::vector<EprPair> right = memory.take(j, tag_j, n, policy);
                out[p].reserve(n);
                for (std::size_t k = 0; k < n; ++k)
                {
                    decision.chosen[p].push_back({left[k].id, right[k].id});
                    out[p].push_back({std::move(left[k]), std::move(right[k])});
                }
            }
        }
        return out;
    }

    std::unique_ptr<Scheduler> make_scheduler(const ProtocolConfig& cfg, const RateMatrix& rates,
                                              const std::vector<ArrivalSpec>& arrivals, const SwitchParams& params)
    {
        cfg.validate(params.K);
        const auto plan_for = [&](std::optional<Count> T0) {
            const RateMatrix& base = cfg.plan_rates ? *cfg.plan_rates : rates;
            double eps = 0.0;
            if (cfg.epsilon)
            {
                eps = *cfg.epsilon;
            }
            else
            {
                const Membership m = region_membership(base, params);
                if (m.verdict != Verdict::inside || !(m.max_uniform_epsilon > 0.0))
                {
                    throw InfeasibleEpsilon("stationary plan needs rates strictly inside the capacity region (margin " +
                                            std::to_string(m.margin) + ")");
                }
                eps = 0.5 * m.max_uniform_epsilon;
            }
            PlanOptions opts;
            opts.arrivals = arrivals;
            opts.T0 = T0;
            opts.T0_cap = cfg.T0_cap;
            return build_stationary_plan(base, params, eps, opts);
        };

        switch (cfg.kind)
        {
        case Protocol::stationary:
            // Without periodic discards the period plays no role.
            return std::make_unique<StationaryScheduler>(plan_for(cfg.T0.value_or(1)), false);
        case Protocol::stationary_discard:
            return std::make_unique<StationaryScheduler>(plan_for(cfg.T0_auto ? std::nullopt : cfg.T0), true);
        case Protocol::maxweight:
        case Protocol::maxweight_discard:
        {
            const Count T0 = cfg.T0 && !cfg.T0_auto ? *cfg.T0 : plan_for(std::nullopt).T0;
            return std::make_unique<MaxWeightScheduler>(params.K, T0, cfg.kind == Protocol::maxweight_discard);
        }
        case Protocol::on_demand:
            return std::make_unique<OnDemandScheduler>(cfg.visit_order);
        }
        throw ContractViolation("unhandled protocol");
    }
}
