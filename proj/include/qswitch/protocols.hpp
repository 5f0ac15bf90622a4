#pragma once

// Swap schedulers. Every scheduler turns the observable queue state and the
// switch memory into an attempt matrix F; realize() then pulls the concrete
// link pairs out of memory with the active qubit policy.

#include "qswitch/capacity.hpp"
#include "qswitch/model.hpp"
#include "qswitch/stochastic.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qswitch
{
    enum class Protocol : std::uint8_t
    {
        stationary,
        stationary_discard,
        maxweight,
        maxweight_discard,
        on_demand,
    };

    std::string to_string(Protocol p);
    Protocol protocol_from_string(const std::string& s);
    std::string to_string(QubitPolicy p);
    QubitPolicy qubit_policy_from_string(const std::string& s);

    bool is_stationary(Protocol p);
    bool is_maxweight(Protocol p);
    bool discards_periodically(Protocol p);
    // Stationary and on-demand switches try to serve a request the moment it arrives.
    bool serves_on_arrival(Protocol p);

    struct SwapPair
    {
        EprPair left;  // on interface i
        EprPair right; // on interface j > i
    };

    struct SchedulerDecision
    {
        SymMatrix<Count> F;
        SymMatrix<Count> weight; // priority used when W forces truncation
        std::vector<std::vector<std::array<PairId, 2>>> chosen; // filled by realize
        bool discard_now = false;
    };

    // Protocol settings as read from the config.
    struct ProtocolConfig
    {
        Protocol kind = Protocol::on_demand;
        QubitPolicy qubit_policy = QubitPolicy::yqf;
        std::string request_policy = "fifo";
        std::optional<Count> T0; // maxweight: required unless T0_auto
        bool T0_auto = false;
        Count T0_cap = 10'000'000;
        std::optional<double> epsilon;          // stationary slack; default half the largest
        std::optional<RateMatrix> plan_rates;   // stationary: rates the plan is built for
        std::vector<NodePair> visit_order;      // on-demand; empty = lexicographic
        bool immediate_service = true;          // only honoured where the protocol allows it

        void validate(int nodes) const;
        bool operator==(const ProtocolConfig&) const = default;
    };

    class Scheduler
    {
    public:
        virtual ~Scheduler() = default;
        virtual Protocol protocol() const = 0;

        // Whether fresh link pairs carry stationary tags.
        virtual bool labels_pairs() const { return false; }
        virtual std::optional<int> label(int iface, Count slot, const RngStreams& streams) const;

        virtual SchedulerDecision decide(const QueueState& observed, const LinkMemory& memory, Count t) = 0;

        // True at the slots after whose swaps every stored pair is dropped.
        virtual bool discard_at(Count t) const { (void)t; return false; }
        virtual Count period() const { return 1; }
    };

    // Stationary ---------------------------------------------------------------

    // Draws the tag of a fresh pair on interface i: j with probability
    // label_prob[i][j], nothing with the residual mass.
    std::optional<int> stationary_label(int iface, const StationaryPlan& plan, const RngStreams& streams, Count slot);

    // F_ij = min(|M^i_ij|, |M^j_ij|) over the tagged buckets.
    SymMatrix<Count> stationary_decide(const LinkMemory& memory);

    // Drops all stored pairs at a period boundary. Returns the dropped ids,
    // link pairs first.
    std::vector<PairId> discard_sweep(LinkMemory& memory, PairStore& store, Count t, Count T0);

    inline bool is_period_end(Count t, Count T0) { return T0 > 0 && t % T0 == T0 - 1; }

    class StationaryScheduler final : public Scheduler
    {
    public:
        StationaryScheduler(StationaryPlan plan, bool discard);
        Protocol protocol() const override;
        bool labels_pairs() const override { return true; }
        std::optional<int> label(int iface, Count slot, const RngStreams& streams) const override;
        SchedulerDecision decide(const QueueState& observed, const LinkMemory& memory, Count t) override;
        bool discard_at(Count t) const override;
        Count period() const override { return plan_.T0; }
        const StationaryPlan& plan() const noexcept { return plan_; }

    private:
        StationaryPlan plan_;
        bool discard_;
    };

    // Max-weight ---------------------------------------------------------------

    // Exact maximum-weight integer b-matching on the complete graph: maximize
    // sum U_ij F_ij subject to sum_i F_ij <= E0_j. Among optimal matrices the
    // one with the largest lexicographically weighted preference is returned.
    SymMatrix<Count> solve_mw(const SymMatrix<Count>& weights, const std::vector<Count>& capacities);

    Count matching_weight(const SymMatrix<Count>& weights, const SymMatrix<Count>& F);

    struct MaxWeightState
    {
        Count T0 = 1;
        SymMatrix<Count> U_snapshot; // U at the previous decision slot
    };

    SchedulerDecision maxweight_decide(MaxWeightState& state, const QueueState& observed, Count t);

    class MaxWeightScheduler final : public Scheduler
    {
    public:
        MaxWeightScheduler(int nodes, Count T0, bool discard);
        Protocol protocol() const override;
        SchedulerDecision decide(const QueueState& observed, const LinkMemory& memory, Count t) override;
        bool discard_at(Count t) const override;
        Count period() const override { return state_.T0; }

    private:
        MaxWeightState state_;
        bool discard_;
    };

    // On-demand ----------------------------------------------------------------

    // Greedy maximal schedule: visit pairs in order and set
    // F_ij = min(U_ij, remaining E0_i, remaining E0_j).
    SymMatrix<Count> on_demand_decide(const QueueState& observed, const std::vector<NodePair>& visit_order = {});

    class OnDemandScheduler final : public Scheduler
    {
    public:
        explicit OnDemandScheduler(std::vector<NodePair> visit_order = {});
        Protocol protocol() const override { return Protocol::on_demand; }
        SchedulerDecision decide(const QueueState& observed, const LinkMemory& memory, Count t) override;

    private:
        std::vector<NodePair> visit_order_;
    };

    // Policies -----------------------------------------------------------------

    // The n youngest (yqf) or oldest (oqf) candidates by switch-side birth, ties by id.
    std::vector<PairId> select_qubits(QubitPolicy policy, const std::vector<EprPair>& candidates, std::size_t n);

    // The n earliest arrivals, ties by id.
    std::vector<Request> select_requests(const std::vector<Request>& queue, std::size_t n);

    // Keeps at most W attempts, favouring pairs of larger weight, then lower index.
    SymMatrix<Count> truncate_to_budget(const SymMatrix<Count>& F, const SymMatrix<Count>& weight, Count W);

    // Removes the link pairs consumed by F from memory. Stationary decisions
    // draw from the tag buckets (i, j) and (j, i), the others from untagged ones.
    std::vector<std::vector<SwapPair>> realize(SchedulerDecision& decision, LinkMemory& memory, QubitPolicy policy,
                                               bool tagged);

    // Violations of the on-demand constraints for decision F at state s; empty when all hold.
    std::vector<std::string> on_demand_violations(const QueueState& s, const SymMatrix<Count>& F);

    std::unique_ptr<Scheduler> make_scheduler(const ProtocolConfig& cfg, const RateMatrix& rates,
                                              const std::vector<ArrivalSpec>& arrivals, const SwitchParams& params);
}
