#include "oracles.hpp"

#include "qswitch/capacity.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>

using namespace qswitch;

namespace
{
    SwitchParams table_params()
    {
        return SwitchParams::uniform(5, 0.9, 0.9);
    }

    double lp_margin(const RateMatrix& r, const SwitchParams& sp)
    {
        const auto res = oracle::capacity_lp(r, sp);
        REQUIRE(res.status == oracle::LpResult::optimal);
        return res.value;
    }
}

TEST_CASE("membership on the table settings")
{
    const SwitchParams sp = table_params();
    const auto heavy = region_membership(RateMatrix::uniform(5, 0.2), sp);
    CHECK(heavy.verdict == Verdict::inside);
    CHECK(std::abs(heavy.margin - (0.9 - 4.0 * 0.2 / 0.9)) < 1e-12);
    CHECK(std::abs(heavy.margin - lp_margin(RateMatrix::uniform(5, 0.2), sp)) < 1e-12);

    const auto light = region_membership(RateMatrix::uniform(5, 0.12), sp);
    CHECK(std::abs(light.margin - (0.9 - 4.0 * 0.12 / 0.9)) < 1e-12);

    const auto out = region_membership(RateMatrix::uniform(5, 0.25), sp);
    CHECK(out.verdict == Verdict::outside);
    CHECK(out.max_uniform_epsilon == 0.0);
}

TEST_CASE("zero rates sit inside with the smallest budget as margin")
{
    SwitchParams sp = SwitchParams::uniform(4, 0.7, 0.5);
    sp.p[2] = 0.4;
    const auto m = region_membership(RateMatrix(4), sp);
    CHECK(m.verdict == Verdict::inside);
    CHECK(m.margin == doctest::Approx(0.4));
    sp.max_swaps = 1;
    sp.p = {0.9, 0.9, 1.0, 1.0};
    CHECK(region_membership(RateMatrix(4), sp).margin == doctest::Approx(0.9));
}

TEST_CASE("boundary verdict within tolerance")
{
    const SwitchParams sp = SwitchParams::uniform(3, 0.9, 0.9);
    // Row sum 2 lambda / q = 0.9.
    const double lambda = 0.9 * 0.9 / 2.0;
    CHECK(region_membership(RateMatrix::uniform(3, lambda), sp).verdict == Verdict::boundary);
}

TEST_CASE("membership agrees with the LP oracle on random instances")
{
    CounterRng rng(17);
    for (int trial = 0; trial < 300; ++trial)
    {
        const int K = 2 + static_cast<int>(rng() % 5);
        SwitchParams sp = SwitchParams::uniform(K, 0.0, 0.2 + 0.8 * rng.uniform());
        for (double& p : sp.p)
        {
            p = rng.uniform();
        }
        if (rng() % 3 == 0)
        {
            sp.max_swaps = 1 + static_cast<Count>(rng() % 3);
        }
        RateMatrix r(K);
        for (std::size_t p = 0; p < r.size(); ++p)
        {
            r[p] = 0.3 * rng.uniform();
        }
        const auto m = region_membership(r, sp);
        const double lp = lp_margin(r, sp);
        REQUIRE(std::abs(m.margin - lp) < 1e-9);
        if (lp > 1e-9)
        {
            REQUIRE(m.verdict == Verdict::inside);
        }
        else if (lp < -1e-9)
        {
            REQUIRE(m.verdict == Verdict::outside);
        }
    }
}

TEST_CASE("largest uniform slack lands on the boundary")
{
    const SwitchParams sp = table_params();
    const RateMatrix r = RateMatrix::uniform(5, 0.2);
    const double e = region_membership(r, sp).max_uniform_epsilon;
    CHECK(e > 0.0);
    RateMatrix shifted = r;
    for (double& v : shifted.values())
    {
        v += e;
    }
    CHECK(std::abs(region_membership(shifted, sp).margin) < 1e-12);
}

TEST_CASE("membership is monotone in the rates")
{
    CounterRng rng(4);
    const SwitchParams sp = SwitchParams::uniform(4, 0.8, 0.7);
    for (int trial = 0; trial < 500; ++trial)
    {
        RateMatrix r(4);
        for (double& v : r.values())
        {
            v = 0.3 * rng.uniform();
        }
        RateMatrix bigger = r;
        bigger[rng() % r.size()] += 0.1 * rng.uniform();
        const Verdict a = region_membership(r, sp).verdict;
        const Verdict b = region_membership(bigger, sp).verdict;
        if (a == Verdict::outside)
        {
            REQUIRE(b == Verdict::outside);
        }
        REQUIRE(!(b == Verdict::inside && a != Verdict::inside));
    }
}

TEST_CASE("membership runs well under a millisecond")
{
    const SwitchParams sp = table_params();
    const RateMatrix r = RateMatrix::uniform(5, 0.2);
    const auto t0 = std::chrono::steady_clock::now();
    const int reps = 1000;
    double sink = 0.0;
    for (int k = 0; k < reps; ++k)
    {
        sink += region_membership(r, sp).margin;
    }
    const double per = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
    CHECK(sink > 0.0);
    CHECK(per < 1e-3);
}

TEST_CASE("boundary q")
{
    const SwitchParams sp = SwitchParams::uniform(3, 0.9, 0.5);
    CHECK(std::abs(boundary_q(RateMatrix::uniform(3, 0.1), sp) - 0.2 / 0.9) < 1e-15);
    CHECK(boundary_q(RateMatrix(3), sp) == 0.0);
    SwitchParams dead = sp;
    dead.p[0] = 0.0;
    CHECK(std::isinf(boundary_q(RateMatrix::uniform(3, 0.1), dead)));
    CHECK(boundary_q(RateMatrix::uniform(3, 0.6), sp) > 1.0);

    // Closed form against bisection on the membership verdict.
    CounterRng rng(99);
    for (int trial = 0; trial < 200; ++trial)
    {
        const int K = 2 + static_cast<int>(rng() % 5);
        SwitchParams p = SwitchParams::uniform(K, 0.0, 1.0);
        for (double& v : p.p)
        {
            v = 0.3 + 0.7 * rng.uniform();
        }
        if (rng() % 4 == 0)
        {
            p.max_swaps = 1 + static_cast<Count>(rng() % 2);
        }
        RateMatrix r(K);
        for (double& v : r.values())
        {
            v = 0.2 * rng.uniform();
        }
        const double closed = boundary_q(r, p);
        if (closed > 1.0)
        {
            p.q = 1.0;
            REQUIRE(region_membership(r, p).verdict == Verdict::outside);
            continue;
        }
        double lo = 1e-9;
        double hi = 1.0;
        for (int it = 0; it < 200; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            p.q = mid;
            if (region_membership(r, p).margin >= 0.0)
            {
                hi = mid;
            }
            else
            {
                lo = mid;
            }
        }
        REQUIRE(std::abs(hi - closed) < 1e-9);
    }
}

TEST_CASE("stationary plan construction")
{
    SUBCASE("worked flow value")
    {
        SwitchParams sp = SwitchParams::uniform(2, 0.9, 0.9);
        const auto plan = build_stationary_plan(RateMatrix::uniform(2, 0.2), sp, 0.01, PlanOptions{{}, 1, 100});
        CHECK(std::abs(plan.f_tilde(0, 1) - 0.21 / 0.9) < 1e-15);
        CHECK(std::abs(plan.label_prob[0][1] - 0.21 / 0.81) < 1e-15);
    }
    SUBCASE("slack past the margin is refused")
    {
        const SwitchParams sp = table_params();
        const RateMatrix r = RateMatrix::uniform(5, 0.2);
        const double e = region_membership(r, sp).max_uniform_epsilon;
        CHECK_THROWS_AS(build_stationary_plan(r, sp, 2.0 * e, PlanOptions{{}, 1, 100}), InfeasibleEpsilon);
    }
    SUBCASE("plan invariants on the table setting")
    {
        const SwitchParams sp = table_params();
        const RateMatrix r = RateMatrix::uniform(5, 0.2);
        const double e = 0.5 * region_membership(r, sp).max_uniform_epsilon;
        PlanOptions o;
        o.T0 = 1;
        const auto plan = build_stationary_plan(r, sp, e, o);
        CHECK_NOTHROW(plan.check(r, sp));
        for (int j = 0; j < 5; ++j)
        {
            CHECK(plan.f_tilde.row_sum(j) <= sp.p[static_cast<std::size_t>(j)] + 1e-12);
            double s = 0.0;
            for (double v : plan.label_prob[static_cast<std::size_t>(j)])
            {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                s += v;
            }
            CHECK(s <= 1.0 + 1e-12);
            CHECK(std::abs(plan.idle_prob[static_cast<std::size_t>(j)] - (1.0 - s)) < 1e-12);
        }
        for (std::size_t p = 0; p < r.size(); ++p)
        {
            CHECK(r[p] + e <= sp.q * plan.f_tilde[p] + 1e-12);
            CHECK(r[p] - plan.delta + e / 4.0 <= sp.q * (plan.f_tilde[p] - e / 2.0) * (1.0 - plan.delta) + 1e-12);
        }
        // delta is the first grid point that fits.
        const double grid0 = e / 4.0;
        const double ratio = std::log2(grid0 / plan.delta);
        CHECK(std::abs(ratio - std::round(ratio)) < 1e-9);
    }
}

TEST_CASE("period selection")
{
    const double D = 0.4 * std::log(0.8) + 0.6 * std::log(1.2);
    CHECK(std::abs(kl_divergence(0.4, 0.5) - D) < 1e-15);
    CHECK(std::abs(D - 0.02014) < 1e-5);
    CHECK(chernoff_period(0.5, 0.2, 0.1) == static_cast<Count>(std::ceil(std::log(20.0) / D)));
    CHECK(chernoff_period(0.5, 0.2, 0.1) == 149);
    CHECK(arrival_period(ArrivalSpec::bernoulli(0.3), 0.1) == 150);
    CHECK(arrival_period(ArrivalSpec::constant_count(2), 0.1) == 1);

    FlowMatrix f(2);
    f.at(0, 1) = 0.5;
    CHECK(select_T0(f, 0.2, {ArrivalSpec::bernoulli(0.3)}, 0.1) == 150);
    CHECK(select_T0(f, 0.2, {ArrivalSpec::bernoulli(0.3)}, 1.0) == 1);
    CHECK_THROWS_AS(select_T0(f, 0.2, {ArrivalSpec::bernoulli(0.3)}, 0.1, 100), PeriodCapExceeded);
    try
    {
        (void)select_T0(f, 0.2, {ArrivalSpec::bernoulli(0.3)}, 0.1, 100);
    }
    catch (const PeriodCapExceeded& e)
    {
        CHECK(e.required() == 150);
        CHECK(e.cap() == 100);
    }
}

TEST_CASE("period bounds hold in Monte Carlo")
{
    CounterRng rng(123);
    const int trials = 20000;
    // Labeled stream: Binomial(149, 0.5) below 149 * 0.4.
    int low = 0;
    for (int k = 0; k < trials; ++k)
    {
        int x = 0;
        for (int t = 0; t < 149; ++t)
        {
            x += rng.bernoulli(0.5) ? 1 : 0;
        }
        low += x < 149 * 0.4 ? 1 : 0;
    }
    CHECK(static_cast<double>(low) / trials <= 0.05);
    // Arrival means over 150 slots stay within delta = 0.1.
    int far = 0;
    for (int k = 0; k < trials; ++k)
    {
        int x = 0;
        for (int t = 0; t < 150; ++t)
        {
            x += rng.bernoulli(0.5) ? 1 : 0;
        }
        far += std::abs(x / 150.0 - 0.5) > 0.1 ? 1 : 0;
    }
    CHECK(static_cast<double>(far) / trials <= 0.1);
}
