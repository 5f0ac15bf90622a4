#include "qswitch/stochastic.hpp"

#include <doctest.h>

#include <cmath>

using namespace qswitch;

TEST_CASE("streams are deterministic and keyed")
{
    const RngStreams a(77);
    const RngStreams b(77);
    CounterRng x = a.stream(StreamKind::arrivals, 3, 10);
    CounterRng y = b.stream(StreamKind::arrivals, 3, 10);
    for (int k = 0; k < 100; ++k)
    {
        REQUIRE(x() == y());
    }
    CHECK(a.stream(StreamKind::arrivals, 3, 10)() != a.stream(StreamKind::arrivals, 3, 11)());
    CHECK(a.stream(StreamKind::arrivals, 3, 10)() != a.stream(StreamKind::channel, 3, 10)());
    CHECK(a.stream(StreamKind::arrivals, 3, 10)() != RngStreams(78).stream(StreamKind::arrivals, 3, 10)());
}

TEST_CASE("consuming one stream leaves the others untouched")
{
    const RngStreams s(5);
    SwitchParams sp = SwitchParams::uniform(4, 0.5, 0.9);
    const auto before = sample_link_generation(sp, s, 12);
    // Heavy use of unrelated streams in between.
    for (int k = 0; k < 1000; ++k)
    {
        (void)sample_arrivals(ArrivalSpec::mixed_poisson(0.1, 0.3), 2, 12, s, 1000.0);
        CounterRng r = s.stream(StreamKind::swap, 0, 12);
        (void)r();
    }
    CHECK(sample_link_generation(sp, s, 12) == before);
}

TEST_CASE("uniform draws lie in [0, 1)")
{
    CounterRng r(1);
    double lo = 1.0;
    double hi = 0.0;
    for (int k = 0; k < 100000; ++k)
    {
        const double u = r.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(lo < 1e-3);
    CHECK(hi > 1.0 - 1e-3);
}

TEST_CASE("arrival families")
{
    const RngStreams s(9);
    SUBCASE("constant zero")
    {
        const auto a = sample_arrivals(ArrivalSpec::constant_count(0), 0, 4, s, 1000.0);
        CHECK(a.count == 0);
        CHECK(a.offsets_ns.empty());
    }
    SUBCASE("offsets are sorted and inside the slot")
    {
        for (Count t = 0; t < 2000; ++t)
        {
            const auto a = sample_arrivals(ArrivalSpec::mixed_poisson(1.0, 3.0), 1, t, s, 1000.0);
            REQUIRE(static_cast<Count>(a.offsets_ns.size()) == a.count);
            REQUIRE(std::is_sorted(a.offsets_ns.begin(), a.offsets_ns.end()));
            for (double o : a.offsets_ns)
            {
                REQUIRE(o >= 0.0);
                REQUIRE(o < 1000.0);
            }
        }
    }
    SUBCASE("mixed Poisson mean over a million draws")
    {
        const ArrivalSpec m = ArrivalSpec::mixed_poisson(0.1, 0.3);
        CHECK(m.rate() == doctest::Approx(0.2));
        CHECK(m.variance() == doctest::Approx(0.2 + 0.01));
        const int n = 1'000'000;
        double sum = 0.0;
        double sq = 0.0;
        CounterRng r = s.stream(StreamKind::test, 0, 0);
        for (int k = 0; k < n; ++k)
        {
            const auto c = static_cast<double>(draw_arrival_count(m, r));
            sum += c;
            sq += c * c;
        }
        const double sigma = std::sqrt(m.variance());
        CHECK(std::abs(sum / n - 0.2) <= 3.0 * sigma / 1000.0);
        CHECK(std::abs(sq / n - m.second_moment()) < 0.005);
        CHECK(m.a_max() * m.a_max() >= m.second_moment() - 1e-12);
    }
    SUBCASE("Bernoulli second moment is bounded by one")
    {
        const ArrivalSpec b = ArrivalSpec::bernoulli(0.2);
        CounterRng r = s.stream(StreamKind::test, 1, 0);
        double sq = 0.0;
        const int n = 200'000;
        for (int k = 0; k < n; ++k)
        {
            const auto c = static_cast<double>(draw_arrival_count(b, r));
            sq += c * c;
        }
        CHECK(std::abs(sq / n - 0.2) < 0.005);
        CHECK(b.a_max() == 1.0);
        CHECK(sq / n <= b.a_max() * b.a_max());
    }
    SUBCASE("validation")
    {
        CHECK_THROWS_AS(ArrivalSpec::bernoulli(1.5).validate(), ValidationError);
        CHECK_THROWS_AS(ArrivalSpec::mixed_poisson(-0.1, 0.2).validate(), ValidationError);
        CHECK_THROWS_AS(ArrivalSpec::constant_count(-1).validate(), ValidationError);
        CHECK_THROWS_AS(arrival_family_from_string("geometric"), ValidationError);
        CHECK(arrival_family_from_string(to_string(ArrivalFamily::mixed_poisson)) == ArrivalFamily::mixed_poisson);
    }
}

TEST_CASE("poisson sampler matches its pmf")
{
    CounterRng r(2024);
    const double mean = 2.5;
    const int n = 400'000;
    std::vector<int> hist(12, 0);
    for (int k = 0; k < n; ++k)
    {
        const Count c = r.poisson(mean);
        if (c < 12)
        {
            ++hist[static_cast<std::size_t>(c)];
        }
    }
    double pmf = std::exp(-mean);
    for (int k = 0; k < 12; ++k)
    {
        const double se = std::sqrt(pmf * (1.0 - pmf) / n);
        CHECK(std::abs(hist[static_cast<std::size_t>(k)] / static_cast<double>(n) - pmf) < 5.0 * se + 1e-6);
        pmf *= mean / (k + 1);
    }
    CHECK_THROWS_AS(r.poisson(-1.0), ContractViolation);
}

TEST_CASE("link generation")
{
    const RngStreams s(31);
    SwitchParams sp = SwitchParams::uniform(3, 0.0, 0.9);
    sp.p = {0.0, 1.0, 0.9};
    Count ones = 0;
    const int n = 100'000;
    for (Count t = 0; t < n; ++t)
    {
        const auto c = sample_link_generation(sp, s, t);
        REQUIRE(c[0] == 0);
        REQUIRE(c[1] == 1);
        ones += c[2];
    }
    CHECK(std::abs(static_cast<double>(ones) / n - 0.9) < 0.01);
}

TEST_CASE("swap outcomes")
{
    const RngStreams s(8);
    SymMatrix<Count> F(3);
    F.at(0, 1) = 7;
    F.at(1, 2) = 3;
    const auto all = sample_swap_outcomes(1.0, F, s, 0);
    CHECK(all.R == F);
    const auto none = sample_swap_outcomes(0.0, F, s, 0);
    CHECK(none.R == SymMatrix<Count>(3));
    REQUIRE(all.per_attempt.size() == F.size());
    CHECK(all.per_attempt[pair_index(3, 0, 1)].size() == 7);

    SymMatrix<Count> big(2);
    big.at(0, 1) = 1000;
    Count succ = 0;
    for (Count t = 0; t < 100; ++t)
    {
        succ += sample_swap_outcomes(0.9, big, s, t).R(0, 1);
    }
    const double frac = static_cast<double>(succ) / 1e5;
    CHECK(frac >= 0.897);
    CHECK(frac <= 0.903);
}
