#pragma once

// Dephasing-only memory noise. A qubit that idles for dt under a Z-dephasing
// channel keeps coherence factor exp(-dt / T2). For a Bell pair the
// off-diagonal term is the product of the factors of every qubit that has
// dephased, including switch-side qubits consumed by an ideal Bell
// measurement, so fidelity = (1 + product) / 2.

#include "qswitch/model.hpp"

#include <span>

namespace qswitch
{
    double coherence_factor(double dt_ns, double T2_ns);

    // Z-flip probability of the dephasing channel after idling dt_ns.
    double dephase_prob(double dt_ns, double T2_ns);

    double pair_fidelity(std::span<const double> dwell_ns, double T2_ns);

    // Fidelity of the pair produced by swapping two pairs whose qubits have
    // dwelt for the given times at the moment of the Bell measurement.
    double swap_fidelity(std::span<const double> left_dwell_ns, std::span<const double> right_dwell_ns,
                         double T2_ns);

    double fidelity_now(const EprPair& pair, double now_ns, double T2_ns);

    // Largest total dwell a pair may accumulate and still meet the threshold:
    // -T2 ln(2 threshold - 1). Infinite when nothing is ever discarded.
    double dwell_cutoff_ns(double threshold, double T2_ns);

    bool should_discard(const EprPair& pair, double now_ns, const SwitchParams& params);

    // Result of a successful Bell measurement on link pairs `left` (interface
    // i) and `right` (interface j) at time now_ns. End-node qubits keep their
    // birth times; the switch-side dwell is folded into switch_dwell_ns.
    EprPair swapped_pair(PairId id, const EprPair& left, const EprPair& right, double now_ns);
}
