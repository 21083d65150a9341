// Formal verification of a vector barrier: every condition objective is
// minimized over its domain, exactly for quadratic bases and by branch and
// bound otherwise.
#pragma once

#include <vector>

#include "nbf/bab.hpp"
#include "nbf/condition.hpp"

namespace nbf {

struct VerifierConfig {
    BabConfig bab;
    double kappa_strict = 1e-6;  // margin required of B_{i*} on the unsafe set
    uint64_t seed = 0;

    json to_json() const;
    static VerifierConfig from_json(const json& j);
};

struct VerificationReport {
    std::vector<ConditionStatus> conditions;  // report order: unsafe, init rows, decrease rows
    double wall_seconds = 0.0;
    size_t total_nodes = 0;

    bool certified() const;
    // First condition that is not certified, or -1.
    int first_violation() const;

    json to_json() const;
    static VerificationReport from_json(const json& j);
};

VerificationReport verify_barrier(const VectorBarrier& bf, const ClosedLoop& sys,
                                  const SafetySpec& spec, const VerifierConfig& cfg);

// Verify a single condition (used by the cutting-plane loop to re-check only
// the conditions that were falsified).
ConditionStatus verify_condition(const VectorBarrier& bf, const ClosedLoop& sys,
                                 const SafetySpec& spec, const ConditionId& cond,
                                 const VerifierConfig& cfg);

}  // namespace nbf
