#pragma once

// The slot loop. Slot t covers [t S, (t + 1) S) with S = slot_ns:
//   1. record U(t), E(t), E0(t)
//   2. serve queued requests from stored end-to-end pairs
//   3. decide F, cap it at W, take the link pairs out of memory
//   4. swap, hand successes to the oldest requests, store the surplus
//   5. periodic protocol discard
//   6. requests arrive mid-slot; stationary and on-demand switches try to
//      serve each one on the spot (stored pair first, then a fresh swap)
//   7. link pairs generated at (t + 1) S are labeled and admitted
//   8. pairs that fell below the fidelity threshold are dropped
// Without mid-slot service or discards the counts obey step_queues exactly,
// and the loop checks that they do.

#include "qswitch/model.hpp"
#include "qswitch/protocols.hpp"
#include "qswitch/stochastic.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qswitch
{
    enum class TraceDetail : std::uint8_t
    {
        summary, // U and A per slot
        served,  // plus every served request
        full,    // plus E, E0, F, R, I per slot
    };

    std::string to_string(TraceDetail d);
    TraceDetail trace_detail_from_string(const std::string& s);

    enum class DiscardCause : std::uint8_t
    {
        memory_full,
        fidelity,
        protocol,
    };

    std::string to_string(DiscardCause c);

    struct RunConfig
    {
        SwitchParams params;
        std::vector<ArrivalSpec> arrivals; // one per node pair, pair_index order
        ProtocolConfig protocol;
        Count horizon_slots = 0;
        std::optional<Count> warmup_slots; // default: 10% of the horizon
        std::uint64_t seed = 1;
        TraceDetail trace_detail = TraceDetail::summary;

        RateMatrix rates() const;
        Count warmup() const;
        void validate() const;
        bool operator==(const RunConfig&) const = default;
    };

    // Row-per-slot table of small counts.
    class Series
    {
    public:
        Series() = default;
        explicit Series(std::size_t width) : width_(width) {}

        std::size_t width() const noexcept { return width_; }
        std::size_t rows() const noexcept { return width_ == 0 ? 0 : data_.size() / width_; }
        std::span<const std::uint32_t> row(std::size_t t) const { return {data_.data() + t * width_, width_}; }
        std::uint32_t at(std::size_t t, std::size_t c) const { return data_[t * width_ + c]; }
        void push(std::span<const Count> values);
        void reserve(std::size_t rows) { data_.reserve(rows * width_); }

    private:
        std::size_t width_ = 0;
        std::vector<std::uint32_t> data_;
    };

    struct DiscardRecord
    {
        Count slot = 0;
        DiscardCause cause = DiscardCause::fidelity;
        Count count = 0;
    };

    struct RunTotals
    {
        Count arrivals = 0;
        Count served = 0;
        Count served_on_arrival = 0;
        Count attempts = 0;
        Count successes = 0;
        Count generated = 0;
        Count discard_memory_full = 0;
        Count discard_fidelity = 0;
        Count discard_protocol = 0;
    };

    // Averages over requests that arrived at or after the warm-up and were served.
    struct RunAggregates
    {
        Count counted = 0;
        double mean_fidelity = 0.0;
        double mean_latency_ns = 0.0;
        double mean_latency_slots = 0.0;
        double mean_backlog = 0.0;               // sum of U over pairs, averaged over slots
        std::vector<double> mean_backlog_pair;   // per pair
        bool has_served() const noexcept { return counted > 0; }
    };

    struct RunResult
    {
        int K = 0;
        Count horizon = 0;
        Count warmup = 0;
        std::uint64_t seed = 0;
        double slot_ns = 1000.0;

        Series U;                 // U(t), t = 0 .. horizon - 1
        Series A;                 // A(t)
        std::vector<Count> backlog; // sum of U(t), t = 0 .. horizon
        Series E, E0, F, R, I;    // full detail only
        std::vector<Request> served;
        std::vector<DiscardRecord> discards;
        QueueState final_state;
        RunTotals totals;
        RunAggregates aggregates;
        std::vector<Count> served_per_pair;
        std::vector<Count> arrivals_per_pair;
        Count plain_slots_checked = 0;
    };

    struct Admission
    {
        bool admitted = false;
        std::optional<EprPair> evicted; // drop-oldest
    };

    // Stores a fresh link pair unless the interface is full. drop_newest
    // rejects the newcomer, drop_oldest evicts the oldest stored pair.
    Admission admit_pair(LinkMemory& memory, EprPair pair, const SwitchParams& params);

    // Hands successes to the oldest waiting requests of each pair; the
    // surplus goes to the store. Returns the requests served.
    std::vector<Request> serve_matches(std::vector<std::vector<EprPair>>& successes,
                                       std::vector<std::deque<Request>>& queues, PairStore& store,
                                       const SwitchParams& params, double now_ns, Count slot);

    // Called with the observed state and the (budget-capped) decision of every slot.
    using DecisionProbe = std::function<void(Count t, const QueueState& observed, const SymMatrix<Count>& F)>;

    RunResult run(const RunConfig& config, const DecisionProbe& probe = {});
}
