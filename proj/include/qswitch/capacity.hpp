#pragma once

// Capacity region of the switch and the constants of the stationary
// protocol. Because a swap attempt on (i, j) succeeds with probability q,
// f = lambda / q is the cheapest flow that carries lambda, so membership
// reduces to checking that flow against the interface and swap budgets.

#include "qswitch/model.hpp"
#include "qswitch/stochastic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qswitch
{
    using FlowMatrix = SymMatrix<double>;

    inline constexpr double kBoundaryTol = 1e-12;

    enum class Verdict : std::uint8_t
    {
        inside,
        boundary,
        outside,
    };

    std::string to_string(Verdict v);

    struct Membership
    {
        double margin = 0.0;
        Verdict verdict = Verdict::outside;
        double max_uniform_epsilon = 0.0; // largest e with lambda + e inside
        FlowMatrix flow;                  // lambda / q
    };

    Membership region_membership(const RateMatrix& rates, const SwitchParams& params);

    // Smallest q that keeps the rates inside or on the boundary. Values above 1
    // mean no q works; infinity when an interface with demand never generates.
    double boundary_q(const RateMatrix& rates, const SwitchParams& params);

    // Relative entropy between Bernoulli(x) and Bernoulli(y).
    double kl_divergence(double x, double y);

    struct StationaryPlan
    {
        FlowMatrix f_tilde;
        double epsilon = 0.0;
        std::vector<std::vector<double>> label_prob; // [i][j] = f_tilde(i, j) / p_i
        std::vector<double> idle_prob;
        double delta = 0.0;
        Count T0 = 1;

        // Throws ContractViolation when a stated inequality fails.
        void check(const RateMatrix& rates, const SwitchParams& params) const;
    };

    struct PlanOptions
    {
        // Per-pair arrival laws used to size T0. Empty = Bernoulli(lambda).
        std::vector<ArrivalSpec> arrivals;
        std::optional<Count> T0;  // skip selection and use this period
        Count T0_cap = 10'000'000;
    };

    StationaryPlan build_stationary_plan(const RateMatrix& rates, const SwitchParams& params, double epsilon,
                                         const PlanOptions& options = {});

    // Smallest period such that empirical arrival means stay within delta of
    // their rates and each labeled stream delivers at least T0 (f - e/2)
    // pairs, each with failure probability at most delta.
    Count select_T0(const FlowMatrix& f_tilde, double epsilon, const std::vector<ArrivalSpec>& arrivals,
                    double delta, Count cap = 10'000'000);

    // Period needed for the arrival concentration part alone.
    Count arrival_period(const ArrivalSpec& spec, double delta);
    // Period needed for one labeled stream of rate f_tilde.
    Count chernoff_period(double f_tilde, double epsilon, double delta);
}
