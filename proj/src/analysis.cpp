#include "qswitch/analysis.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qswitch
{
    std::vector<std::vector<double>> empirical_g(const Series& U, std::span<const double> V, std::size_t from,
                                                 std::size_t to)
    {
        to = std::min(to, U.rows());
        std::vector<std::vector<double>> out(U.width(), std::vector<double>(V.size(), 0.0));
        if (from >= to)
        {
            return out;
        }
        const auto n = static_cast<double>(to - from);
        for (std::size_t p = 0; p < U.width(); ++p)
        {
            for (std::size_t v = 0; v < V.size(); ++v)
            {
                std::size_t above = 0;
                for (std::size_t t = from; t < to; ++t)
                {
                    above += static_cast<double>(U.at(t, p)) > V[v] ? 1 : 0;
                }
                out[p][v] = static_cast<double>(above) / n;
            }
        }
        return out;
    }

    double empirical_g(std::span<const double> trace, double V)
    {
        if (trace.empty())
        {
            return 0.0;
        }
        const auto above = std::count_if(trace.begin(), trace.end(), [V](double u) { return u > V; });
        return static_cast<double>(above) / static_cast<double>(trace.size());
    }

    namespace
    {
        struct Line
        {
            double intercept = 0.0;
            double slope = 0.0;
            double residual_var = 0.0;
            double sxx = 0.0;
        };

        Line ols(std::span<const double> x, std::span<const double> y)
        {
            Line l;
            const auto n = static_cast<double>(x.size());
            if (x.size() < 2)
            {
                l.intercept = x.empty() ? 0.0 : y[0];
                return l;
            }
            const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
            const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
            double sxy = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k)
            {
                l.sxx += (x[k] - mx) * (x[k] - mx);
                sxy += (x[k] - mx) * (y[k] - my);
            }
            l.slope = l.sxx > 0.0 ? sxy / l.sxx : 0.0;
            l.intercept = my - l.slope * mx;
            if (x.size() > 2)
            {
                double ss = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k)
                {
                    const double r = y[k] - (l.intercept + l.slope * x[k]);
                    ss += r * r;
                }
                l.residual_var = ss / (n - 2.0);
            }
            return l;
        }

        DriftReport drift_from_levels(const std::vector<double>& L, const std::vector<double>& total, Count T)
        {
            if (T < 1)
            {
                throw ContractViolation("drift step T must be positive");
            }
            const auto step = static_cast<std::size_t>(T);
            if (L.size() <= step)
            {
                throw InsufficientTrace("drift over " + std::to_string(T) + " slots needs a longer trace (have " +
                                        std::to_string(L.size()) + ")");
            }
            DriftReport r;
            r.T = T;
            for (std::size_t t = 0; t + step < L.size(); t += step)
            {
                r.samples.push_back(L[t + step] - L[t]);
                r.backlog.push_back(total[t]);
            }
            const auto n = static_cast<double>(r.samples.size());
            r.mean = std::accumulate(r.samples.begin(), r.samples.end(), 0.0) / n;
            const Line fit = ols(r.backlog, r.samples);
            r.C = fit.intercept;
            r.theta = -fit.slope;

            std::vector<double> sorted = r.backlog;
            std::sort(sorted.begin(), sorted.end());
            const double p90 = sorted[static_cast<std::size_t>(0.9 * static_cast<double>(sorted.size() - 1))];
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t k = 0; k < r.samples.size(); ++k)
            {
                if (r.backlog[k] > p90)
                {
                    sum += r.samples[k];
                    ++cnt;
                }
            }
            if (cnt == 0)
            {
                for (std::size_t k = 0; k < r.samples.size(); ++k)
                {
                    if (r.backlog[k] >= p90)
                    {
                        sum += r.samples[k];
                        ++cnt;
                    }
                }
            }
            r.mean_high_backlog = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
            return r;
        }

        double lyapunov(double u, LyapunovKind kind)
        {
            return kind == LyapunovKind::quadratic ? u * u : u;
        }
    }

    DriftReport drift_estimate(const Series& U, Count T, LyapunovKind kind)
    {
        std::vector<double> L(U.rows(), 0.0);
        std::vector<double> total(U.rows(), 0.0);
        for (std::size_t t = 0; t < U.rows(); ++t)
        {
            for (std::uint32_t u : U.row(t))
            {
                L[t] += lyapunov(static_cast<double>(u), kind);
                total[t] += static_cast<double>(u);
            }
        }
        return drift_from_levels(L, total, T);
    }

    DriftReport drift_estimate(std::span<const double> trace, Count T, LyapunovKind kind)
    {
        std::vector<double> L(trace.size());
        std::transform(trace.begin(), trace.end(), L.begin(), [kind](double u) { return lyapunov(u, kind); });
        return drift_from_levels(L, {trace.begin(), trace.end()}, T);
    }

    LittleReport littles_law_check(const std::vector<Request>& served, std::span<const Count> backlog, Count from,
                                   Count to)
    {
        LittleReport r;
        to = std::min<Count>(to, static_cast<Count>(backlog.size()));
        if (from >= to)
        {
            return r;
        }
        double latency = 0.0;
        Count n = 0;
        for (const Request& q : served)
        {
            if (q.served_slot && q.arrival_slot >= from && q.arrival_slot < to)
            {
                latency += static_cast<double>(*q.served_slot - q.arrival_slot);
                ++n;
            }
        }
        if (n == 0)
        {
            return r;
        }
        const auto window = static_cast<double>(to - from);
        double queue = 0.0;
        for (Count t = from; t < to; ++t)
        {
            queue += static_cast<double>(backlog[static_cast<std::size_t>(t)]);
        }
        r.mean_latency_slots = latency / static_cast<double>(n);
        r.mean_queue = queue / window;
        r.rate = static_cast<double>(n) / window;
        const double predicted = *r.rate * *r.mean_latency_slots;
        if (predicted > 0.0)
        {
            r.ratio = *r.mean_queue / predicted;
        }
        return r;
    }

    std::string to_string(Stability s)
    {
        switch (s)
        {
        case Stability::stable:
            return "stable";
        case Stability::unstable:
            return "unstable";
        case Stability::inconclusive:
            return "inconclusive";
        }
        return "?";
    }

    SlopeFit batch_slope(std::span<const Count> y, std::size_t from, std::size_t to, int batches, double confidence)
    {
        SlopeFit f;
        to = std::min(to, y.size());
        if (batches < 3 || from >= to)
        {
            return f;
        }
        const std::size_t b = (to - from) / static_cast<std::size_t>(batches);
        if (b == 0)
        {
            return f;
        }
        const std::size_t start = to - b * static_cast<std::size_t>(batches);
        std::vector<double> x;
        std::vector<double> m;
        for (int k = 0; k < batches; ++k)
        {
            const std::size_t lo = start + static_cast<std::size_t>(k) * b;
            double s = 0.0;
            for (std::size_t t = lo; t < lo + b; ++t)
            {
                s += static_cast<double>(y[t]);
            }
            x.push_back(static_cast<double>(lo) + 0.5 * static_cast<double>(b));
            m.push_back(s / static_cast<double>(b));
        }
        const Line l = ols(x, m);
        const boost::math::students_t dist(static_cast<double>(batches - 2));
        const double tq = boost::math::quantile(dist, 1.0 - 0.5 * (1.0 - confidence));
        const double se = l.sxx > 0.0 ? std::sqrt(l.residual_var / l.sxx) : 0.0;
        f.slope = l.slope;
        f.ci_low = l.slope - tq * se;
        f.ci_high = l.slope + tq * se;
        return f;
    }

    StabilityReport stability_verdict(const RunResult& run, const StabilityOptions& o)
    {
        StabilityReport r;
        r.V_grid = {0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
        const Count H = run.horizon;
        r.window_from = H / 2;
        r.window_to = H;
        const auto from = static_cast<std::size_t>(r.window_from);
        const auto to = static_cast<std::size_t>(r.window_to);
        r.g_curves = empirical_g(run.U, r.V_grid, from, to);
        if (H < o.min_horizon)
        {
            r.note = "horizon shorter than " + std::to_string(o.min_horizon) + " slots";
            return r;
        }
        const SlopeFit fit = batch_slope(run.backlog, from, to, o.batches, o.confidence);
        r.slope = fit.slope;
        r.ci_low = fit.ci_low;
        r.ci_high = fit.ci_high;

        const double Vmax[] = {o.V_max};
        const auto gmax = empirical_g(run.U, Vmax, from, to);
        for (std::size_t p = 0; p < run.U.width(); ++p)
        {
            double mean = 0.0;
            for (std::size_t t = from; t < to; ++t)
            {
                mean += static_cast<double>(run.U.at(t, p));
            }
            mean /= static_cast<double>(to - from);
            // Backlogs are integers, so the level is rounded up.
            const double level[] = {std::ceil(o.stable_factor * mean)};
            r.g_at_mean = std::max(r.g_at_mean, empirical_g(run.U, level, from, to)[p][0]);
            r.g_at_vmax = std::max(r.g_at_vmax, gmax[p][0]);
        }

        if (r.ci_low <= 0.0 && r.ci_high >= 0.0 && r.g_at_mean < o.stable_g)
        {
            r.verdict = Stability::stable;
        }
        else if (r.ci_low > 0.0 && r.g_at_vmax > o.unstable_g)
        {
            r.verdict = Stability::unstable;
        }
        else
        {
            r.verdict = Stability::inconclusive;
        }
        return r;
    }

    RunSummary summarize(const RunResult& run, const StabilityOptions& options)
    {
        RunSummary s;
        s.seed = run.seed;
        s.totals = run.totals;
        s.aggregates = run.aggregates;
        const StabilityReport rep = stability_verdict(run, options);
        s.verdict = rep.verdict;
        s.slope = rep.slope;
        return s;
    }
}
