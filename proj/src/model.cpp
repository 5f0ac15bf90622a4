#include "qswitch/model.hpp"
#include "qswitch/physics.hpp"

#include <algorithm>
#include <cmath>

namespace qswitch
{
    std::vector<NodePair> all_pairs(int nodes)
    {
        std::vector<NodePair> out;
        out.reserve(pair_count(nodes));
        for (int i = 0; i < nodes; ++i)
        {
            for (int j = i + 1; j < nodes; ++j)
            {
                out.push_back({i, j});
            }
        }
        return out;
    }

    std::string pair_label(NodePair p)
    {
        return std::to_string(p.i + 1) + "-" + std::to_string(p.j + 1);
    }

    void RateMatrix::validate() const
    {
        for (double v : values())
        {
            if (!std::isfinite(v) || v < 0.0)
            {
                throw ValidationError("request rates must be finite and nonnegative");
            }
        }
    }

    RateMatrix RateMatrix::scaled(double factor) const
    {
        RateMatrix out = *this;
        for (double& v : out.values())
        {
            v *= factor;
        }
        return out;
    }

    SwitchParams SwitchParams::uniform(int nodes, double p, double q)
    {
        SwitchParams s;
        s.K = nodes;
        s.p.assign(static_cast<std::size_t>(nodes), p);
        s.q = q;
        return s;
    }

    void SwitchParams::validate() const
    {
        if (K < 2)
        {
            throw ValidationError("switch needs at least two end nodes (K >= 2)");
        }
        if (p.size() != static_cast<std::size_t>(K))
        {
            throw ValidationError("p must have one entry per interface");
        }
        for (double pk : p)
        {
            if (!(pk >= 0.0 && pk <= 1.0))
            {
                throw ValidationError("link generation probabilities must lie in [0, 1]");
            }
        }
        if (!(q > 0.0 && q <= 1.0))
        {
            throw ValidationError("swap success probability q must lie in (0, 1]");
        }
        if (max_swaps && *max_swaps < 1)
        {
            throw ValidationError("W must be a positive integer when bounded");
        }
        if (mem_per_interface && *mem_per_interface < 1)
        {
            throw ValidationError("memory per interface must be a positive integer when bounded");
        }
        if (!(T2_ns > 0.0))
        {
            throw ValidationError("T2 must be positive (or infinite)");
        }
        if (!(slot_ns > 0.0) || !std::isfinite(slot_ns))
        {
            throw ValidationError("slot length must be positive and finite");
        }
        if (!(fidelity_threshold >= 0.5 && fidelity_threshold <= 1.0))
        {
            throw ValidationError("fidelity threshold must lie in [0.5, 1]");
        }
    }

    QueueState QueueState::zero(int nodes)
    {
        return QueueState{SymMatrix<Count>(nodes), SymMatrix<Count>(nodes),
                          std::vector<Count>(static_cast<std::size_t>(nodes), 0)};
    }

    void QueueState::validate(std::optional<Count> mem_per_interface) const
    {
        const auto neg = [](Count c) { return c < 0; };
        if (std::any_of(U.values().begin(), U.values().end(), neg) ||
            std::any_of(E.values().begin(), E.values().end(), neg) ||
            std::any_of(E0.begin(), E0.end(), neg))
        {
            throw ContractViolation("queue counts must be nonnegative");
        }
        if (mem_per_interface)
        {
            for (Count c : E0)
            {
                if (c > *mem_per_interface)
                {
                    throw ContractViolation("link pairs exceed memory capacity");
                }
            }
        }
    }

    SlotEvents SlotEvents::zero(int nodes)
    {
        const auto k = static_cast<std::size_t>(nodes);
        return SlotEvents{SymMatrix<Count>(nodes), std::vector<Count>(k, 0), SymMatrix<Count>(nodes),
                          SymMatrix<Count>(nodes), SymMatrix<Count>(nodes), std::vector<Count>(k, 0),
                          SymMatrix<Count>(nodes)};
    }

    bool SlotEvents::plain() const
    {
        const auto zero = [](Count c) { return c == 0; };
        return std::all_of(I.values().begin(), I.values().end(), zero) &&
               std::all_of(D0.begin(), D0.end(), zero) &&
               std::all_of(De.values().begin(), De.values().end(), zero);
    }

    EprPair EprPair::link(PairId id, int interface, double born_ns)
    {
        EprPair e;
        e.id = id;
        e.kind = PairKind::link;
        e.a = interface;
        e.b = -1;
        e.qubit_birth_ns = {born_ns, born_ns};
        return e;
    }

    std::vector<double> EprPair::dwell_times(double now_ns) const
    {
        std::vector<double> out{now_ns - qubit_birth_ns[0], now_ns - qubit_birth_ns[1]};
        if (switch_dwell_ns > 0.0)
        {
            out.push_back(switch_dwell_ns);
        }
        return out;
    }

    double EprPair::total_dwell(double now_ns) const
    {
        return (now_ns - qubit_birth_ns[0]) + (now_ns - qubit_birth_ns[1]) + switch_dwell_ns;
    }

    double EprPair::dwell_key() const noexcept
    {
        return switch_dwell_ns - qubit_birth_ns[0] - qubit_birth_ns[1];
    }

    QueueState step_queues(const QueueState& s, const SlotEvents& ev)
    {
        const int k = s.nodes();
        if (ev.A.nodes() != k || ev.F.nodes() != k || ev.R.nodes() != k ||
            ev.C0.size() != static_cast<std::size_t>(k) || s.E0.size() != static_cast<std::size_t>(k))
        {
            throw ContractViolation("state and events disagree on node count");
        }
        for (std::size_t p = 0; p < ev.F.size(); ++p)
        {
            if (ev.R[p] < 0 || ev.F[p] < 0 || ev.A[p] < 0)
            {
                throw ContractViolation("event counts must be nonnegative");
            }
            if (ev.R[p] > ev.F[p])
            {
                throw ContractViolation("more swap successes than attempts");
            }
        }
        QueueState out = QueueState::zero(k);
        for (std::size_t p = 0; p < s.U.size(); ++p)
        {
            out.U[p] = std::max<Count>(s.U[p] - s.E[p] - ev.R[p], 0) + ev.A[p];
            out.E[p] = std::max<Count>(s.E[p] + ev.R[p] - s.U[p], 0);
        }
        for (int i = 0; i < k; ++i)
        {
            const Count used = ev.F.row_sum(i);
            const auto ii = static_cast<std::size_t>(i);
            if (used > s.E0[ii])
            {
                throw ContractViolation("swap attempts on interface " + std::to_string(i + 1) +
                                        " exceed stored link pairs");
            }
            out.E0[ii] = s.E0[ii] - used + ev.C0[ii];
        }
        return out;
    }

    Count total_backlog(const QueueState& state)
    {
        return state.U.total();
    }

    // LinkMemory ----------------------------------------------------------------

    LinkMemory::LinkMemory(int nodes)
        : nodes_(nodes),
          buckets_(static_cast<std::size_t>(nodes),
                   std::vector<std::deque<EprPair>>(static_cast<std::size_t>(nodes) + 1)),
          sizes_(static_cast<std::size_t>(nodes), 0)
    {
    }

    std::size_t LinkMemory::bucket_index(int iface, std::optional<int> tag) const
    {
        if (iface < 0 || iface >= nodes_)
        {
            throw ContractViolation("interface out of range");
        }
        if (!tag)
        {
            return static_cast<std::size_t>(nodes_);
        }
        if (*tag < 0 || *tag >= nodes_ || *tag == iface)
        {
            throw ContractViolation("stationary tag out of range");
        }
        return static_cast<std::size_t>(*tag);
    }

    std::size_t LinkMemory::size(int iface, std::optional<int> tag) const
    {
        return buckets_[static_cast<std::size_t>(iface)][bucket_index(iface, tag)].size();
    }

    std::vector<Count> LinkMemory::occupancy() const
    {
        return {sizes_.begin(), sizes_.end()};
    }

    void LinkMemory::push(EprPair pair)
    {
        if (pair.kind != PairKind::link)
        {
            throw ContractViolation("only link pairs live in switch memory");
        }
        auto& bucket = buckets_[static_cast<std::size_t>(pair.a)][bucket_index(pair.a, pair.label)];
        if (!bucket.empty() && bucket.back().qubit_birth_ns[0] > pair.qubit_birth_ns[0])
        {
            throw ContractViolation("link pairs must be pushed in birth order");
        }
        bucket.push_back(std::move(pair));
        ++sizes_[static_cast<std::size_t>(bucket.back().a)];
    }

    std::optional<EprPair> LinkMemory::pop_oldest(int iface)
    {
        auto& row = buckets_.at(static_cast<std::size_t>(iface));
        std::deque<EprPair>* best = nullptr;
        for (auto& b : row)
        {
            if (b.empty())
            {
                continue;
            }
            if (best == nullptr || b.front().qubit_birth_ns[0] < best->front().qubit_birth_ns[0] ||
                (b.front().qubit_birth_ns[0] == best->front().qubit_birth_ns[0] && b.front().id < best->front().id))
            {
                best = &b;
            }
        }
        if (best == nullptr)
        {
            return std::nullopt;
        }
        EprPair out = std::move(best->front());
        best->pop_front();
        --sizes_[static_cast<std::size_t>(iface)];
        return out;
    }

    std::vector<EprPair> LinkMemory::take(int iface, std::optional<int> tag, std::size_t n, QubitPolicy policy)
    {
        auto& bucket = buckets_[static_cast<std::size_t>(iface)][bucket_index(iface, tag)];
        if (n > bucket.size())
        {
            throw ContractViolation("insufficient link pairs on interface " + std::to_string(iface + 1));
        }
        std::vector<EprPair> out;
        out.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            if (policy == QubitPolicy::yqf)
            {
                out.push_back(std::move(bucket.back()));
                bucket.pop_back();
            }
            else
            {
                out.push_back(std::move(bucket.front()));
                bucket.pop_front();
            }
        }
        sizes_[static_cast<std::size_t>(iface)] -= n;
        return out;
    }

    std::vector<EprPair> LinkMemory::bucket(int iface, std::optional<int> tag) const
    {
        const auto& b = buckets_[static_cast<std::size_t>(iface)][bucket_index(iface, tag)];
        return {b.begin(), b.end()};
    }

    Count LinkMemory::expire_interface(int iface, double now_ns, const SwitchParams& params)
    {
        Count dropped = 0;
        for (auto& b : buckets_[static_cast<std::size_t>(iface)])
        {
            // Oldest pairs sit at the front; fidelity only decreases with age.
            while (!b.empty() && should_discard(b.front(), now_ns, params))
            {
                b.pop_front();
                ++dropped;
            }
        }
        sizes_[static_cast<std::size_t>(iface)] -= static_cast<std::size_t>(dropped);
        return dropped;
    }

    std::vector<Count> LinkMemory::expire(double now_ns, const SwitchParams& params)
    {
        std::vector<Count> out(static_cast<std::size_t>(nodes_), 0);
        if (params.fidelity_threshold <= 0.5)
        {
            return out;
        }
        for (int i = 0; i < nodes_; ++i)
        {
            out[static_cast<std::size_t>(i)] = expire_interface(i, now_ns, params);
        }
        return out;
    }

    std::vector<PairId> LinkMemory::clear()
    {
        std::vector<PairId> ids;
        for (auto& row : buckets_)
        {
            for (auto& b : row)
            {
                for (const auto& e : b)
                {
                    ids.push_back(e.id);
                }
                b.clear();
            }
        }
        std::fill(sizes_.begin(), sizes_.end(), 0);
        return ids;
    }

    // PairStore -----------------------------------------------------------------

    PairStore::PairStore(int nodes) : pools_(pair_count(nodes)) {}

    std::vector<Count> PairStore::occupancy() const
    {
        std::vector<Count> out;
        out.reserve(pools_.size());
        for (const auto& p : pools_)
        {
            out.push_back(static_cast<Count>(p.size()));
        }
        return out;
    }

    void PairStore::add(std::size_t pair, EprPair e)
    {
        if (e.kind != PairKind::end_to_end)
        {
            throw ContractViolation("only end-to-end pairs are stored at end nodes");
        }
        pools_.at(pair).insert(std::move(e));
    }

    std::optional<EprPair> PairStore::take(std::size_t pair, QubitPolicy policy)
    {
        auto& pool = pools_.at(pair);
        if (pool.empty())
        {
            return std::nullopt;
        }
        auto it = policy == QubitPolicy::yqf ? pool.begin() : std::prev(pool.end());
        EprPair out = *it;
        pool.erase(it);
        return out;
    }

    Count PairStore::expire_pair(std::size_t pair, double now_ns, const SwitchParams& params)
    {
        auto& pool = pools_.at(pair);
        Count dropped = 0;
        while (!pool.empty() && should_discard(*std::prev(pool.end()), now_ns, params))
        {
            pool.erase(std::prev(pool.end()));
            ++dropped;
        }
        return dropped;
    }

    std::vector<Count> PairStore::expire(double now_ns, const SwitchParams& params)
    {
        std::vector<Count> out(pools_.size(), 0);
        if (params.fidelity_threshold <= 0.5)
        {
            return out;
        }
        for (std::size_t p = 0; p < pools_.size(); ++p)
        {
            out[p] = expire_pair(p, now_ns, params);
        }
        return out;
    }

    std::vector<PairId> PairStore::clear()
    {
        std::vector<PairId> ids;
        for (auto& pool : pools_)
        {
            for (const auto& e : pool)
            {
                ids.push_back(e.id);
            }
            pool.clear();
        }
        return ids;
    }
}
