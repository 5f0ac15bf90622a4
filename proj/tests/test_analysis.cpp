#include "qswitch/analysis.hpp"
#include "qswitch/capacity.hpp"
#include "qswitch/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace qswitch;

namespace
{
    Series scalar_series(const std::vector<Count>& v)
    {
        Series s(1);
        for (Count x : v)
        {
            const Count row[] = {x};
            s.push(row);
        }
        return s;
    }

    // On-demand over K = 4 at `fraction` of the capacity boundary.
    RunConfig loaded(double fraction, Count horizon, std::uint64_t seed)
    {
        RunConfig c = figure_setting(4, horizon);
        c.seed = seed;
        const double boundary = 1.0 / region_membership(c.rates(), c.params).flow.row_sum(0) * c.params.p[0];
        for (ArrivalSpec& a : c.arrivals)
        {
            a = scale_arrival(a, fraction * boundary);
        }
        return c;
    }
}

TEST_CASE("empirical g")
{
    const std::vector<double> zeros(50, 0.0);
    for (double V : {0.0, 1.0, 10.0})
    {
        CHECK(empirical_g(zeros, V) == 0.0);
    }
    const std::vector<double> t{0, 5, 0, 5};
    CHECK(empirical_g(t, 3.0) == 0.5);
    CHECK(empirical_g(t, 5.0) == 0.0);
    CHECK(empirical_g(std::vector<double>{}, 1.0) == 0.0);

    CounterRng rng(5);
    Series U(3);
    for (int k = 0; k < 500; ++k)
    {
        const Count row[] = {static_cast<Count>(rng() % 20), static_cast<Count>(rng() % 3), 0};
        U.push(row);
    }
    const std::vector<double> V{0, 1, 2, 5, 10, 19, 20};
    const auto g = empirical_g(U, V);
    for (const auto& curve : g)
    {
        CHECK(curve[0] <= 1.0);
        for (std::size_t k = 1; k < curve.size(); ++k)
        {
            CHECK(curve[k] <= curve[k - 1]);
        }
    }
    CHECK(g[0].back() == 0.0);
    CHECK(g[2][0] == 0.0);
    // Window restriction.
    const auto w = empirical_g(scalar_series({9, 9, 0, 0}), std::vector<double>{1.0}, 2, 4);
    CHECK(w[0][0] == 0.0);
}

TEST_CASE("drift estimates")
{
    const std::vector<double> flat(30, 4.0);
    for (double s : drift_estimate(flat, 3, LyapunovKind::quadratic).samples)
    {
        CHECK(s == 0.0);
    }
    std::vector<double> ramp(41);
    for (std::size_t t = 0; t < ramp.size(); ++t)
    {
        ramp[t] = static_cast<double>(t);
    }
    const DriftReport q = drift_estimate(ramp, 2, LyapunovKind::quadratic);
    REQUIRE(q.samples.size() == 20);
    for (std::size_t m = 0; m < q.samples.size(); ++m)
    {
        const double t = 2.0 * static_cast<double>(m);
        CHECK(q.samples[m] == 4.0 * t + 4.0);
    }
    // The affine fit is exact here: samples = 4 + 4 u.
    CHECK(q.C == doctest::Approx(4.0));
    CHECK(q.theta == doctest::Approx(-4.0));
    const DriftReport l = drift_estimate(ramp, 5, LyapunovKind::linear);
    CHECK(l.mean == 5.0);

    CHECK_THROWS_AS(drift_estimate(std::vector<double>{1, 2}, 2, LyapunovKind::linear), InsufficientTrace);
    CHECK_THROWS_AS(drift_estimate(std::vector<double>{1, 2}, 2, LyapunovKind::linear), ValidationError);

    // Series form sums over pairs.
    Series U(2);
    for (Count t = 0; t < 10; ++t)
    {
        const Count row[] = {t, 2 * t};
        U.push(row);
    }
    const DriftReport s = drift_estimate(U, 1, LyapunovKind::quadratic);
    CHECK(s.samples[0] == 5.0);
    CHECK(s.backlog[1] == 3.0);
}

TEST_CASE("drift is negative at high backlog on a stable run")
{
    // Without mid-slot service the queues stay busy enough for the upper
    // decile of backlog to be informative.
    RunConfig c = loaded(0.9, 100'000, 3);
    c.protocol.immediate_service = false;
    const RunResult r = run(c);
    CHECK(summarize(r).verdict == Stability::stable);
    const DriftReport d = drift_estimate(r.U, 10, LyapunovKind::linear);
    CHECK(d.mean_high_backlog < 0.0);
    CHECK(d.mean <= c.rates().total() * 10.0);
}

TEST_CASE("Little's law bookkeeping")
{
    const std::vector<Count> backlog{0, 1, 1, 0};
    const LittleReport none = littles_law_check({}, backlog, 0, 4);
    CHECK_FALSE(none.mean_latency_slots.has_value());
    CHECK_FALSE(none.ratio.has_value());
    CHECK_FALSE(littles_law_check({}, {}, 0, 4).rate.has_value());

    // One request waiting two slots in a four-slot window: L = 0.5,
    // rate = 0.25, W = 2.
    Request q;
    q.arrival_slot = 0;
    q.served_slot = 2;
    const LittleReport r = littles_law_check({q}, backlog, 0, 4);
    CHECK(*r.mean_latency_slots == 2.0);
    CHECK(*r.mean_queue == 0.5);
    CHECK(*r.rate == 0.25);
    CHECK(*r.ratio == 1.0);
}

TEST_CASE("batch slope")
{
    std::vector<Count> y(2000);
    for (std::size_t t = 0; t < y.size(); ++t)
    {
        y[t] = static_cast<Count>(3 * t + 7);
    }
    const SlopeFit f = batch_slope(y, 1000, 2000, 20, 0.99);
    CHECK(f.slope == doctest::Approx(3.0));
    CHECK(f.ci_low == doctest::Approx(3.0));
    CHECK(f.ci_high == doctest::Approx(3.0));

    CounterRng rng(8);
    for (Count& v : y)
    {
        v = static_cast<Count>(rng() % 10);
    }
    const SlopeFit n = batch_slope(y, 0, 2000, 20, 0.99);
    CHECK(n.ci_low < n.slope);
    CHECK(n.ci_high > n.slope);
    CHECK(std::abs(n.slope) < 1e-2);
}

TEST_CASE("stability verdicts")
{
    RunConfig idle = figure_setting(3, 20'000);
    idle.arrivals.assign(3, ArrivalSpec::constant_count(0));
    const StabilityReport z = stability_verdict(run(idle));
    CHECK(z.verdict == Stability::stable);
    CHECK(z.window_from == 10'000);
    CHECK(z.g_curves.size() == 3);

    idle.horizon_slots = 5000;
    const StabilityReport s = stability_verdict(run(idle));
    CHECK(s.verdict == Stability::inconclusive);
    CHECK_FALSE(s.note.empty());

    const StabilityReport in = stability_verdict(run(loaded(0.5, 100'000, 1)));
    CHECK(in.verdict == Stability::stable);
    CHECK(in.ci_low <= 0.0);
    CHECK(in.ci_high >= 0.0);

    const RunConfig over = loaded(1.25, 100'000, 1);
    CHECK(region_membership(over.rates(), over.params).verdict == Verdict::outside);
    const StabilityReport out = stability_verdict(run(over));
    CHECK(out.verdict == Stability::unstable);
    CHECK(out.slope > 0.0);
    CHECK(out.g_at_vmax > 0.1);
}

TEST_CASE("verdicts are monotone in load on a shared seed")
{
    auto rank = [](Stability v) { return v == Stability::stable ? 0 : v == Stability::inconclusive ? 1 : 2; };
    for (std::uint64_t seed : {1u, 2u})
    {
        bool seen_unstable = false;
        for (double f : {0.5, 0.9, 1.1, 1.4})
        {
            const int r = rank(summarize(run(loaded(f, 20'000, seed))).verdict);
            CHECK_FALSE((seen_unstable && r == 0));
            seen_unstable = seen_unstable || r == 2;
        }
    }
}

TEST_CASE("summaries carry the verdict and aggregates")
{
    const RunResult r = run(loaded(0.5, 20'000, 4));
    const RunSummary s = summarize(r);
    CHECK(s.seed == 4);
    CHECK(s.totals.served == r.totals.served);
    CHECK(s.aggregates.mean_latency_ns == r.aggregates.mean_latency_ns);
    CHECK(s.verdict == stability_verdict(r).verdict);
    CHECK(to_string(Stability::inconclusive) == "inconclusive");
}
