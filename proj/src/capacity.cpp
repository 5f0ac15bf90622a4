#include "qswitch/capacity.hpp"

#include <algorithm>
#include <cmath>

namespace qswitch
{
    std::string to_string(Verdict v)
    {
        switch (v)
        {
        case Verdict::inside:
            return "inside";
        case Verdict::boundary:
            return "boundary";
        case Verdict::outside:
            return "outside";
        }
        return "?";
    }

    namespace
    {
        void check_shapes(const RateMatrix& rates, const SwitchParams& params)
        {
            params.validate();
            rates.validate();
            if (rates.nodes() != params.K)
            {
                throw ValidationError("rate matrix has " + std::to_string(rates.nodes()) + " nodes but the switch has " +
                                      std::to_string(params.K));
            }
        }
    }

    Membership region_membership(const RateMatrix& rates, const SwitchParams& params)
    {
        check_shapes(rates, params);
        const int K = params.K;
        Membership m;
        m.flow = FlowMatrix(K);
        for (std::size_t p = 0; p < rates.size(); ++p)
        {
            m.flow[p] = rates[p] / params.q;
        }

        double margin = kInfinity;
        double eps = kInfinity;
        for (int j = 0; j < K; ++j)
        {
            const double pj = params.p[static_cast<std::size_t>(j)];
            margin = std::min(margin, pj - m.flow.row_sum(j));
            // (lambda + e) / q summed over the K - 1 partners of j.
            eps = std::min(eps, (params.q * pj - rates.row_sum(j)) / static_cast<double>(K - 1));
        }
        if (params.max_swaps)
        {
            const auto W = static_cast<double>(*params.max_swaps);
            margin = std::min(margin, W - m.flow.total());
            eps = std::min(eps, (params.q * W - rates.total()) / static_cast<double>(rates.size()));
        }

        m.margin = margin;
        if (margin > kBoundaryTol)
        {
            m.verdict = Verdict::inside;
        }
        else if (margin >= -kBoundaryTol)
        {
            m.verdict = Verdict::boundary;
        }
        else
        {
            m.verdict = Verdict::outside;
        }
        m.max_uniform_epsilon = m.verdict == Verdict::inside ? std::max(eps, 0.0) : 0.0;
        return m;
    }

    double boundary_q(const RateMatrix& rates, const SwitchParams& params)
    {
        check_shapes(rates, params);
        double q = 0.0;
        for (int j = 0; j < params.K; ++j)
        {
            const double demand = rates.row_sum(j);
            if (demand <= 0.0)
            {
                continue;
            }
            const double pj = params.p[static_cast<std::size_t>(j)];
            if (pj <= 0.0)
            {
                return kInfinity;
            }
            q = std::max(q, demand / pj);
        }
        if (params.max_swaps)
        {
            q = std::max(q, rates.total() / static_cast<double>(*params.max_swaps));
        }
        return q;
    }

    double kl_divergence(double x, double y)
    {
        if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
        {
            throw ContractViolation("divergence arguments must be probabilities");
        }
        const auto term = [](double a, double b) {
            if (a == 0.0)
            {
                return 0.0;
            }
            if (b == 0.0)
            {
                return kInfinity;
            }
            return a * std::log(a / b);
        };
        return term(x, y) + term(1.0 - x, 1.0 - y);
    }

    namespace
    {
        Count ceil_count(double v)
        {
            if (!std::isfinite(v) || v > 9.0e18)
            {
                return std::numeric_limits<Count>::max();
            }
            return std::max<Count>(1, static_cast<Count>(std::ceil(v)));
        }
    }

    Count arrival_period(const ArrivalSpec& spec, double delta)
    {
        if (delta >= 1.0)
        {
            return 1;
        }
        switch (spec.family)
        {
        case ArrivalFamily::bernoulli:
            // Hoeffding: 2 exp(-2 T d^2) <= d.
            return ceil_count(std::log(2.0 / delta) / (2.0 * delta * delta));
        case ArrivalFamily::mixed_poisson:
            // Chebyshev: Var / (T d^2) <= d.
            return ceil_count(spec.variance() / (delta * delta * delta));
        case ArrivalFamily::constant:
            return 1;
        }
        return 1;
    }

    Count chernoff_period(double f_tilde, double epsilon, double delta)
    {
        if (delta >= 1.0)
        {
            return 1;
        }
        const double target = f_tilde - epsilon / 2.0;
        if (target <= 0.0)
        {
            return 1;
        }
        const double d = kl_divergence(target, std::min(f_tilde, 1.0));
        if (d <= 0.0)
        {
            return std::numeric_limits<Count>::max();
        }
        // exp(-T D) <= d / 2 for each of the two labeled streams.
        return ceil_count(std::log(2.0 / delta) / d);
    }

    Count select_T0(const FlowMatrix& f_tilde, double epsilon, const std::vector<ArrivalSpec>& arrivals,
                    double delta, Count cap)
    {
        if (!(delta > 0.0))
        {
            throw ContractViolation("delta must be positive");
        }
        if (delta >= 1.0)
        {
            return 1;
        }
        if (arrivals.size() != f_tilde.size())
        {
            throw ContractViolation("one arrival law per node pair is required");
        }
        Count T0 = 1;
        for (std::size_t p = 0; p < f_tilde.size(); ++p)
        {
            T0 = std::max(T0, arrival_period(arrivals[p], delta));
            T0 = std::max(T0, chernoff_period(f_tilde[p], epsilon, delta));
        }
        if (T0 > cap)
        {
            throw PeriodCapExceeded(T0, cap);
        }
        return T0;
    }

    void StationaryPlan::check(const RateMatrix& rates, const SwitchParams& params) const
    {
        const int K = params.K;
        for (int j = 0; j < K; ++j)
        {
            if (f_tilde.row_sum(j) > params.p[static_cast<std::size_t>(j)] + kBoundaryTol)
            {
                throw ContractViolation("plan flow exceeds the generation rate of interface " + std::to_string(j + 1));
            }
        }
        for (std::size_t p = 0; p < rates.size(); ++p)
        {
            if (rates[p] + epsilon > params.q * f_tilde[p] + kBoundaryTol)
            {
                throw ContractViolation("plan flow does not cover rate plus slack");
            }
            const double rhs = params.q * (f_tilde[p] - epsilon / 2.0) * (1.0 - delta);
            if (rates[p] - delta + epsilon / 4.0 > rhs + kBoundaryTol)
            {
                throw ContractViolation("delta too large for the plan");
            }
        }
        for (int i = 0; i < K; ++i)
        {
            double s = 0.0;
            for (int j = 0; j < K; ++j)
            {
                const double v = label_prob[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (v < 0.0 || v > 1.0 + kBoundaryTol)
                {
                    throw ContractViolation("label probability out of range");
                }
                s += v;
            }
            const double idle = idle_prob[static_cast<std::size_t>(i)];
            if (s > 1.0 + kBoundaryTol || idle < -kBoundaryTol || idle > 1.0)
            {
                throw ContractViolation("label probabilities on interface " + std::to_string(i + 1) +
                                        " do not form a distribution");
            }
        }
        if (T0 < 1)
        {
            throw ContractViolation("period must be positive");
        }
    }

    StationaryPlan build_stationary_plan(const RateMatrix& rates, const SwitchParams& params, double epsilon,
                                         const PlanOptions& options)
    {
        check_shapes(rates, params);
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        {
            throw ValidationError("stationary slack epsilon must be positive");
        }
        const int K = params.K;
        StationaryPlan plan;
        plan.epsilon = epsilon;
        plan.f_tilde = FlowMatrix(K);
        for (std::size_t p = 0; p < rates.size(); ++p)
        {
            plan.f_tilde[p] = (rates[p] + epsilon) / params.q;
        }
        for (int j = 0; j < K; ++j)
        {
            const double pj = params.p[static_cast<std::size_t>(j)];
            if (plan.f_tilde.row_sum(j) > pj + kBoundaryTol)
            {
                throw InfeasibleEpsilon("epsilon = " + std::to_string(epsilon) + " pushes interface " +
                                        std::to_string(j + 1) + " past its generation rate");
            }
        }
        if (params.max_swaps && plan.f_tilde.total() > static_cast<double>(*params.max_swaps) + kBoundaryTol)
        {
            throw InfeasibleEpsilon("epsilon = " + std::to_string(epsilon) + " pushes the swap budget past W");
        }

        plan.label_prob.assign(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(K), 0.0));
        plan.idle_prob.assign(static_cast<std::size_t>(K), 1.0);
        for (int i = 0; i < K; ++i)
        {
            const auto ii = static_cast<std::size_t>(i);
            const double pi = params.p[ii];
            double s = 0.0;
            for (int j = 0; j < K; ++j)
            {
                if (j == i)
                {
                    continue;
                }
                const double f = plan.f_tilde(i, j);
                const double v = pi > 0.0 ? std::min(f / pi, 1.0) : 0.0;
                plan.label_prob[ii][static_cast<std::size_t>(j)] = v;
                s += v;
            }
            plan.idle_prob[ii] = std::max(0.0, 1.0 - s);
        }

        // Largest delta on the grid e/4 * 2^-m that satisfies
        // lambda - delta + e/4 <= q (f - e/2)(1 - delta) for every pair.
        const auto fits = [&](double delta) {
            for (std::size_t p = 0; p < rates.size(); ++p)
            {
                const double lhs = rates[p] - delta + epsilon / 4.0;
                const double rhs = params.q * (plan.f_tilde[p] - epsilon / 2.0) * (1.0 - delta);
                if (lhs > rhs)
                {
                    return false;
                }
            }
            return true;
        };
        double delta = epsilon / 4.0;
        int m = 0;
        while (!fits(delta))
        {
            if (++m > 200)
            {
                throw InfeasibleEpsilon("no admissible delta for epsilon = " + std::to_string(epsilon));
            }
            delta *= 0.5;
        }
        plan.delta = delta;

        if (options.T0)
        {
            if (*options.T0 < 1)
            {
                throw ValidationError("T0 must be a positive integer");
            }
            plan.T0 = *options.T0;
        }
        else
        {
            std::vector<ArrivalSpec> laws = options.arrivals;
            if (laws.empty())
            {
                for (double r : rates.values())
                {
                    if (r > 1.0)
                    {
                        throw ValidationError("rates above 1 need explicit arrival laws to size T0");
                    }
                    laws.push_back(ArrivalSpec::bernoulli(r));
                }
            }
            plan.T0 = select_T0(plan.f_tilde, epsilon, laws, delta, options.T0_cap);
        }
        plan.check(rates, params);
        return plan;
    }
}
