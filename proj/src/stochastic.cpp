#include "qswitch/stochastic.hpp"

#include <algorithm>
#include <cmath>

namespace qswitch
{
    std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double CounterRng::uniform() noexcept
    {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    bool CounterRng::bernoulli(double p) noexcept
    {
        return uniform() < p;
    }

    Count CounterRng::poisson(double mean)
    {
        if (!(mean >= 0.0) || mean > 700.0)
        {
            throw ContractViolation("poisson mean must lie in [0, 700]");
        }
        if (mean == 0.0)
        {
            return 0;
        }
        // Sequential inversion; the means used here are small.
        const double u = uniform();
        double term = std::exp(-mean);
        double cdf = term;
        Count k = 0;
        const Count guard = static_cast<Count>(20.0 * mean) + 200;
        while (u >= cdf && k < guard)
        {
            ++k;
            term *= mean / static_cast<double>(k);
            cdf += term;
        }
        return k;
    }

    CounterRng RngStreams::stream(StreamKind kind, std::uint64_t index, std::uint64_t slot) const noexcept
    {
        std::uint64_t h = splitmix64(seed_);
        h = splitmix64(h ^ (static_cast<std::uint64_t>(kind) << 56));
        h = splitmix64(h ^ index);
        h = splitmix64(h ^ slot);
        return CounterRng(h);
    }

    std::string to_string(ArrivalFamily f)
    {
        switch (f)
        {
        case ArrivalFamily::bernoulli:
            return "bernoulli";
        case ArrivalFamily::mixed_poisson:
            return "mixed_poisson";
        case ArrivalFamily::constant:
            return "constant";
        }
        return "?";
    }

    ArrivalFamily arrival_family_from_string(const std::string& s)
    {
        if (s == "bernoulli")
        {
            return ArrivalFamily::bernoulli;
        }
        if (s == "mixed_poisson")
        {
            return ArrivalFamily::mixed_poisson;
        }
        if (s == "constant")
        {
            return ArrivalFamily::constant;
        }
        throw ValidationError("unknown arrival family '" + s + "' (bernoulli | mixed_poisson | constant)");
    }

    ArrivalSpec ArrivalSpec::bernoulli(double p)
    {
        ArrivalSpec s;
        s.family = ArrivalFamily::bernoulli;
        s.p = p;
        return s;
    }

    ArrivalSpec ArrivalSpec::mixed_poisson(double lambda1, double lambda2)
    {
        ArrivalSpec s;
        s.family = ArrivalFamily::mixed_poisson;
        s.lambda1 = lambda1;
        s.lambda2 = lambda2;
        return s;
    }

    ArrivalSpec ArrivalSpec::constant_count(Count c)
    {
        ArrivalSpec s;
        s.family = ArrivalFamily::constant;
        s.constant = c;
        return s;
    }

    double ArrivalSpec::rate() const
    {
        switch (family)
        {
        case ArrivalFamily::bernoulli:
            return p;
        case ArrivalFamily::mixed_poisson:
            return 0.5 * (lambda1 + lambda2);
        case ArrivalFamily::constant:
            return static_cast<double>(constant);
        }
        return 0.0;
    }

    double ArrivalSpec::variance() const
    {
        switch (family)
        {
        case ArrivalFamily::bernoulli:
            return p * (1.0 - p);
        case ArrivalFamily::mixed_poisson:
        {
            // E[Var | Z] + Var(E | Z)
            const double d = lambda1 - lambda2;
            return 0.5 * (lambda1 + lambda2) + 0.25 * d * d;
        }
        case ArrivalFamily::constant:
            return 0.0;
        }
        return 0.0;
    }

    double ArrivalSpec::second_moment() const
    {
        const double m = rate();
        return variance() + m * m;
    }

    double ArrivalSpec::a_max() const
    {
        switch (family)
        {
        case ArrivalFamily::bernoulli:
            return p > 0.0 ? 1.0 : 0.0;
        case ArrivalFamily::mixed_poisson:
            return std::sqrt(second_moment());
        case ArrivalFamily::constant:
            return static_cast<double>(constant);
        }
        return 0.0;
    }

    void ArrivalSpec::validate() const
    {
        switch (family)
        {
        case ArrivalFamily::bernoulli:
            if (!(p >= 0.0 && p <= 1.0))
            {
                throw ValidationError("bernoulli arrival rate must lie in [0, 1]");
            }
            break;
        case ArrivalFamily::mixed_poisson:
            if (!(lambda1 >= 0.0 && lambda2 >= 0.0) || lambda1 > 700.0 || lambda2 > 700.0)
            {
                throw ValidationError("mixed poisson means must lie in [0, 700]");
            }
            break;
        case ArrivalFamily::constant:
            if (constant < 0)
            {
                throw ValidationError("constant arrival count must be nonnegative");
            }
            break;
        }
    }

    Count draw_arrival_count(const ArrivalSpec& spec, CounterRng& rng)
    {
        switch (spec.family)
        {
        case ArrivalFamily::bernoulli:
            return rng.bernoulli(spec.p) ? 1 : 0;
        case ArrivalFamily::mixed_poisson:
        {
            const bool first = rng.bernoulli(0.5);
            return rng.poisson(first ? spec.lambda1 : spec.lambda2);
        }
        case ArrivalFamily::constant:
            return spec.constant;
        }
        return 0;
    }

    ArrivalSample sample_arrivals(const ArrivalSpec& spec, std::size_t pair, Count slot, const RngStreams& streams,
                                  double slot_ns)
    {
        ArrivalSample out;
        auto counts = streams.stream(StreamKind::arrivals, pair, static_cast<std::uint64_t>(slot));
        out.count = draw_arrival_count(spec, counts);
        if (out.count == 0)
        {
            return out;
        }
        auto times = streams.stream(StreamKind::timestamps, pair, static_cast<std::uint64_t>(slot));
        out.offsets_ns.reserve(static_cast<std::size_t>(out.count));
        for (Count k = 0; k < out.count; ++k)
        {
            out.offsets_ns.push_back(times.uniform() * slot_ns);
        }
        std::sort(out.offsets_ns.begin(), out.offsets_ns.end());
        return out;
    }

    std::vector<Count> sample_link_generation(const SwitchParams& params, const RngStreams& streams, Count slot)
    {
        std::vector<Count> out(static_cast<std::size_t>(params.K), 0);
        for (int k = 0; k < params.K; ++k)
        {
            auto rng = streams.stream(StreamKind::channel, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(slot));
            out[static_cast<std::size_t>(k)] = rng.bernoulli(params.p[static_cast<std::size_t>(k)]) ? 1 : 0;
        }
        return out;
    }

    SwapOutcomes sample_swap_outcomes(double q, const SymMatrix<Count>& F, const RngStreams& streams, Count slot)
    {
        SwapOutcomes out{SymMatrix<Count>(F.nodes()), std::vector<std::vector<bool>>(F.size())};
        for (std::size_t p = 0; p < F.size(); ++p)
        {
            if (F[p] < 0)
            {
                throw ContractViolation("negative swap attempt count");
            }
            auto rng = streams.stream(StreamKind::swap, p, static_cast<std::uint64_t>(slot));
            auto& flags = out.per_attempt[p];
            flags.reserve(static_cast<std::size_t>(F[p]));
            for (Count a = 0; a < F[p]; ++a)
            {
                const bool ok = rng.bernoulli(q);
                flags.push_back(ok);
                out.R[p] += ok ? 1 : 0;
            }
        }
        return out;
    }
}
