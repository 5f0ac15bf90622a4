#include "qswitch/physics.hpp"

#include <algorithm>
#include <cmath>

namespace qswitch
{
    double coherence_factor(double dt_ns, double T2_ns)
    {
        if (dt_ns < 0.0)
        {
            throw ContractViolation("dwell time must be nonnegative");
        }
        if (std::isinf(T2_ns) || dt_ns == 0.0)
        {
            return 1.0;
        }
        return std::exp(-dt_ns / T2_ns);
    }

    double dephase_prob(double dt_ns, double T2_ns)
    {
        return 0.5 * (1.0 - coherence_factor(dt_ns, T2_ns));
    }

    double pair_fidelity(std::span<const double> dwell_ns, double T2_ns)
    {
        double c = 1.0;
        for (double dt : dwell_ns)
        {
            c *= coherence_factor(dt, T2_ns);
        }
        return 0.5 * (1.0 + c);
    }

    double swap_fidelity(std::span<const double> left_dwell_ns, std::span<const double> right_dwell_ns,
                         double T2_ns)
    {
        double c = 1.0;
        for (double dt : left_dwell_ns)
        {
            c *= coherence_factor(dt, T2_ns);
        }
        for (double dt : right_dwell_ns)
        {
            c *= coherence_factor(dt, T2_ns);
        }
        return 0.5 * (1.0 + c);
    }

    double fidelity_now(const EprPair& pair, double now_ns, double T2_ns)
    {
        const auto dwell = pair.dwell_times(now_ns);
        return pair_fidelity(dwell, T2_ns);
    }

    double dwell_cutoff_ns(double threshold, double T2_ns)
    {
        if (threshold <= 0.5 || std::isinf(T2_ns))
        {
            return kInfinity;
        }
        return -T2_ns * std::log(2.0 * threshold - 1.0);
    }

    bool should_discard(const EprPair& pair, double now_ns, const SwitchParams& params)
    {
        if (params.fidelity_threshold <= 0.5)
        {
            return false;
        }
        return fidelity_now(pair, now_ns, params.T2_ns) < params.fidelity_threshold;
    }

    EprPair swapped_pair(PairId id, const EprPair& left, const EprPair& right, double now_ns)
    {
        if (left.kind != PairKind::link || right.kind != PairKind::link || left.a == right.a)
        {
            throw ContractViolation("a swap needs link pairs on two distinct interfaces");
        }
        const EprPair& lo = left.a < right.a ? left : right;
        const EprPair& hi = left.a < right.a ? right : left;
        EprPair e;
        e.id = id;
        e.kind = PairKind::end_to_end;
        e.a = lo.a;
        e.b = hi.a;
        // qubit 0 of a link pair sits in the switch, qubit 1 at the end node.
        e.qubit_birth_ns = {lo.qubit_birth_ns[1], hi.qubit_birth_ns[1]};
        e.switch_dwell_ns = (now_ns - lo.qubit_birth_ns[0]) + (now_ns - hi.qubit_birth_ns[0]) +
                            lo.switch_dwell_ns + hi.switch_dwell_ns;
        return e;
    }
}
