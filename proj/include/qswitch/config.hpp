#pragma once

// JSON run configuration. One document with four sections:
//
//   switch:    K, p (number or list), q, W, memory, T2_ns ("inf" allowed),
//              slot_ns, fidelity_threshold, memory_full
//   arrivals:  family plus one of rate | rates {"1-2": r, ...} | total_rate,
//              or an explicit per_pair list; spread for mixed_poisson
//   protocol:  name, qubit_policy, request_policy, T0 (integer or "auto"),
//              T0_cap, epsilon, plan_rates, visit_order, immediate_service
//   run:       horizon_slots, warmup_slots, seed, trace_detail
//
// serialize() always writes the explicit per_pair form, so parsing its
// output reproduces the same RunConfig.

#include "qswitch/engine.hpp"

#include <filesystem>
#include <string>

namespace qswitch
{
    RunConfig parse_config(const std::string& text);
    RunConfig load_config(const std::filesystem::path& path);
    std::string serialize_config(const RunConfig& cfg);

    // "1-2" -> {0, 1}
    NodePair parse_pair_label(const std::string& s, int nodes);
}
