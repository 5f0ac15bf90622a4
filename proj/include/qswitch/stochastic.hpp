#pragma once

// Randomness on named, seeded substreams. Every draw is keyed by
// (kind, index, slot), so the arrival and channel sequences do not depend on
// which protocol consumes them; two runs that differ only in protocol see
// the same arrivals and link generations (common random numbers).

#include "qswitch/model.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace qswitch
{
    std::uint64_t splitmix64(std::uint64_t x) noexcept;

    // SplitMix64 sequence; satisfies UniformRandomBitGenerator.
    class CounterRng
    {
    public:
        using result_type = std::uint64_t;

        explicit CounterRng(std::uint64_t key) noexcept : state_(key) {}

        static constexpr result_type min() noexcept { return 0; }
        static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

        result_type operator()() noexcept
        {
            state_ += 0x9e3779b97f4a7c15ULL;
            return splitmix64(state_);
        }

        double uniform() noexcept; // [0, 1)
        bool bernoulli(double p) noexcept;
        Count poisson(double mean);

    private:
        std::uint64_t state_;
    };

    enum class StreamKind : std::uint8_t
    {
        arrivals = 1,
        timestamps = 2,
        channel = 3,
        swap = 4,
        labeling = 5,
        immediate_swap = 6,
        test = 7,
    };

    class RngStreams
    {
    public:
        explicit RngStreams(std::uint64_t seed) noexcept : seed_(seed) {}
        std::uint64_t seed() const noexcept { return seed_; }
        CounterRng stream(StreamKind kind, std::uint64_t index, std::uint64_t slot) const noexcept;

    private:
        std::uint64_t seed_;
    };

    enum class ArrivalFamily : std::uint8_t
    {
        bernoulli,
        mixed_poisson,
        constant,
    };

    std::string to_string(ArrivalFamily f);
    ArrivalFamily arrival_family_from_string(const std::string& s);

    // Per-slot request count law for one node pair.
    struct ArrivalSpec
    {
        ArrivalFamily family = ArrivalFamily::bernoulli;
        double p = 0.0;       // bernoulli
        double lambda1 = 0.0; // mixed_poisson, weight 1/2 each
        double lambda2 = 0.0;
        Count constant = 0;   // constant

        static ArrivalSpec bernoulli(double p);
        static ArrivalSpec mixed_poisson(double lambda1, double lambda2);
        static ArrivalSpec constant_count(Count c);

        double rate() const;
        double variance() const;
        double second_moment() const;
        // Bound with a_max()^2 >= E[A^2].
        double a_max() const;
        void validate() const;
        bool operator==(const ArrivalSpec&) const = default;
    };

    struct ArrivalSample
    {
        Count count = 0;
        std::vector<double> offsets_ns; // sorted, each in [0, slot_ns)
    };

    Count draw_arrival_count(const ArrivalSpec& spec, CounterRng& rng);

    ArrivalSample sample_arrivals(const ArrivalSpec& spec, std::size_t pair, Count slot, const RngStreams& streams,
                                  double slot_ns);

    // C0[k] ~ Bernoulli(p_k), independent across interfaces and slots.
    std::vector<Count> sample_link_generation(const SwitchParams& params, const RngStreams& streams, Count slot);

    struct SwapOutcomes
    {
        SymMatrix<Count> R;
        std::vector<std::vector<bool>> per_attempt; // [pair][attempt]
    };

    // Independent Bernoulli(q) outcome for every attempt in F.
    SwapOutcomes sample_swap_outcomes(double q, const SymMatrix<Count>& F, const RngStreams& streams, Count slot);
}
