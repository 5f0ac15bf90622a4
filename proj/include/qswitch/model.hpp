#pragma once

// Core domain types of the star-topology switch and the exact slot update
// of the queue state. Node indices are 0-based here; file outputs print them
// 1-based because node 0 is the switch itself in the usual notation.

#include "qswitch/errors.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace qswitch
{
    using Count = std::int64_t;
    using PairId = std::uint64_t; // EprPair::id
    using RequestId = std::uint64_t;

    inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

    // Unordered end-node pair, always stored with i < j.
    struct NodePair
    {
        int i = 0;
        int j = 0;
        bool operator==(const NodePair&) const = default;
    };

    // Number of unordered pairs among `nodes` end nodes.
    constexpr std::size_t pair_count(int nodes) noexcept
    {
        return nodes < 2 ? 0 : static_cast<std::size_t>(nodes) * static_cast<std::size_t>(nodes - 1) / 2;
    }

    // Row-major position of {i, j} in the strict upper triangle.
    constexpr std::size_t pair_index(int nodes, int i, int j) noexcept
    {
        if (i > j)
        {
            const int t = i;
            i = j;
            j = t;
        }
        const auto n = static_cast<std::size_t>(nodes);
        const auto a = static_cast<std::size_t>(i);
        return a * n - a * (a + 1) / 2 + static_cast<std::size_t>(j - i - 1);
    }

    // All unordered pairs in lexicographic order; position p matches pair_index.
    std::vector<NodePair> all_pairs(int nodes);

    std::string pair_label(NodePair p); // "1-2" for {0, 1}

    // Symmetric K x K matrix with an implicit zero diagonal. Only the strict
    // upper triangle is stored, so symmetry cannot be broken through the API.
    template <class T>
    class SymMatrix
    {
    public:
        SymMatrix() = default;
        explicit SymMatrix(int nodes, T fill = T{}) : nodes_(nodes), data_(pair_count(nodes), fill) {}

        int nodes() const noexcept { return nodes_; }
        std::size_t size() const noexcept { return data_.size(); }

        T operator()(int i, int j) const
        {
            check(i, j);
            return i == j ? T{} : data_[pair_index(nodes_, i, j)];
        }

        T& at(int i, int j)
        {
            check(i, j);
            if (i == j)
            {
                throw ContractViolation("diagonal entries of a pair matrix are fixed at zero");
            }
            return data_[pair_index(nodes_, i, j)];
        }

        T& operator[](std::size_t p) { return data_[p]; }
        const T& operator[](std::size_t p) const { return data_[p]; }

        std::span<const T> values() const noexcept { return data_; }
        std::span<T> values() noexcept { return data_; }

        // Sum over partners j of entry (i, j).
        T row_sum(int i) const
        {
            T s{};
            for (int j = 0; j < nodes_; ++j)
            {
                if (j != i)
                {
                    s += data_[pair_index(nodes_, i, j)];
                }
            }
            return s;
        }

        // Sum over unordered pairs.
        T total() const
        {
            T s{};
            for (const T& v : data_)
            {
                s += v;
            }
            return s;
        }

        bool operator==(const SymMatrix&) const = default;

    private:
        void check(int i, int j) const
        {
            if (i < 0 || j < 0 || i >= nodes_ || j >= nodes_)
            {
                throw ContractViolation("pair index out of range");
            }
        }

        int nodes_ = 0;
        std::vector<T> data_;
    };

    // Request rates per slot, one entry per unordered pair.
    class RateMatrix : public SymMatrix<double>
    {
    public:
        RateMatrix() = default;
        explicit RateMatrix(int nodes, double fill = 0.0) : SymMatrix<double>(nodes, fill) {}
        static RateMatrix uniform(int nodes, double rate) { return RateMatrix(nodes, rate); }

        void validate() const; // finite, nonnegative
        RateMatrix scaled(double factor) const;
    };

    enum class MemoryFullPolicy : std::uint8_t
    {
        drop_newest,
        drop_oldest,
    };

    enum class QubitPolicy : std::uint8_t
    {
        yqf, // youngest qubit first
        oqf, // oldest qubit first
    };

    // Physical and scheduling parameters of the switch.
    struct SwitchParams
    {
        int K = 0;
        std::vector<double> p;                  // link generation probability per interface
        double q = 1.0;                         // swap success probability
        std::optional<Count> max_swaps;         // W; empty means unbounded
        std::optional<Count> mem_per_interface; // empty means unbounded
        double T2_ns = kInfinity;
        double slot_ns = 1000.0;
        double fidelity_threshold = 0.5; // 0.5 never discards
        MemoryFullPolicy memory_full = MemoryFullPolicy::drop_newest;

        static SwitchParams uniform(int nodes, double p, double q);
        void validate() const;
        bool operator==(const SwitchParams&) const = default;
    };

    // Queue counts at the start of a slot.
    struct QueueState
    {
        SymMatrix<Count> U;   // pending requests
        SymMatrix<Count> E;   // stored end-to-end pairs
        std::vector<Count> E0; // stored link pairs per interface

        static QueueState zero(int nodes);
        int nodes() const noexcept { return U.nodes(); }
        void validate(std::optional<Count> mem_per_interface = std::nullopt) const;
        bool operator==(const QueueState&) const = default;
    };

    // Everything that happened during one slot.
    struct SlotEvents
    {
        SymMatrix<Count> A;  // request arrivals
        std::vector<Count> C0; // link pairs generated and admitted to memory
        SymMatrix<Count> F;  // swap attempts
        SymMatrix<Count> R;  // swap successes
        SymMatrix<Count> I;  // requests served mid-slot on arrival
        std::vector<Count> D0; // link pairs discarded (any cause)
        SymMatrix<Count> De; // end-to-end pairs discarded (any cause)

        static SlotEvents zero(int nodes);
        // True when no mid-slot service and no discard happened, i.e. the slot
        // is described completely by the textbook update.
        bool plain() const;
        bool operator==(const SlotEvents&) const = default;
    };

    enum class PairKind : std::uint8_t
    {
        link,
        end_to_end,
    };

    // A live EPR pair. A link pair joins interface `a` to the switch; both of
    // its qubits are born at the same instant. An end-to-end pair joins nodes
    // (a, b) and remembers how long the two consumed switch-side qubits dwelt
    // before the Bell measurement.
    struct EprPair
    {
        PairId id = 0;
        PairKind kind = PairKind::link;
        int a = 0;
        int b = -1;
        std::array<double, 2> qubit_birth_ns{0.0, 0.0};
        double switch_dwell_ns = 0.0;
        std::optional<int> label; // stationary tag (a, *label)

        static EprPair link(PairId id, int interface, double born_ns);

        // Dwell times of every qubit whose dephasing affects this pair.
        std::vector<double> dwell_times(double now_ns) const;
        double total_dwell(double now_ns) const;
        // total_dwell(now) - 2 * now; constant over the pair's lifetime.
        double dwell_key() const noexcept;
    };

    struct Request
    {
        RequestId id = 0;
        NodePair pair;
        double arrival_ns = 0.0;
        Count arrival_slot = 0;
        std::optional<double> served_ns;
        std::optional<Count> served_slot;
        std::optional<double> served_fidelity;
        bool served_on_arrival = false;
    };

    // One slot of the textbook dynamics:
    //   U' = [U - E - R]^+ + A,  E' = [E + R - U]^+,  E0' = E0 - sum_j F + C0.
    // Memory clamping is the caller's job (C0 is the admitted count).
    QueueState step_queues(const QueueState& state, const SlotEvents& ev);

    // Sum of pending requests over unordered pairs.
    Count total_backlog(const QueueState& state);

    // Per-interface store of link pairs, bucketed by stationary tag. Bucket j
    // on interface i holds pairs tagged (i, j); bucket K holds untagged pairs.
    // Buckets are kept in birth order.
    class LinkMemory
    {
    public:
        LinkMemory() = default;
        explicit LinkMemory(int nodes);

        int nodes() const noexcept { return nodes_; }
        std::size_t size(int iface) const { return sizes_.at(static_cast<std::size_t>(iface)); }
        std::size_t size(int iface, std::optional<int> tag) const;
        std::vector<Count> occupancy() const;

        void push(EprPair pair);
        // Removes and returns the oldest pair on the interface across buckets.
        std::optional<EprPair> pop_oldest(int iface);
        // Removes n pairs from one bucket, youngest or oldest first.
        std::vector<EprPair> take(int iface, std::optional<int> tag, std::size_t n, QubitPolicy policy);
        // Live pairs of one bucket, oldest first.
        std::vector<EprPair> bucket(int iface, std::optional<int> tag) const;

        // Drops every pair whose fidelity at now_ns is below the threshold.
        // Returns the number dropped per interface.
        std::vector<Count> expire(double now_ns, const SwitchParams& params);
        Count expire_interface(int iface, double now_ns, const SwitchParams& params);
        std::vector<PairId> clear();

    private:
        std::size_t bucket_index(int iface, std::optional<int> tag) const;

        int nodes_ = 0;
        std::vector<std::vector<std::deque<EprPair>>> buckets_; // [iface][tag], birth order
        std::vector<std::size_t> sizes_;
    };

    // End-to-end pairs waiting at the end nodes, one ordered pool per node pair.
    class PairStore
    {
    public:
        PairStore() = default;
        explicit PairStore(int nodes);

        std::size_t size(std::size_t pair) const { return pools_.at(pair).size(); }
        std::vector<Count> occupancy() const;

        void add(std::size_t pair, EprPair e);
        // Least decohered pair for yqf, most decohered for oqf.
        std::optional<EprPair> take(std::size_t pair, QubitPolicy policy);
        Count expire_pair(std::size_t pair, double now_ns, const SwitchParams& params);
        std::vector<Count> expire(double now_ns, const SwitchParams& params);
        std::vector<PairId> clear();

    private:
        struct ByDwell
        {
            bool operator()(const EprPair& x, const EprPair& y) const noexcept
            {
                const double kx = x.dwell_key();
                const double ky = y.dwell_key();
                return kx != ky ? kx < ky : x.id < y.id;
            }
        };
        // The first element is the least decohered pair.
        std::vector<std::set<EprPair, ByDwell>> pools_;
    };
}
