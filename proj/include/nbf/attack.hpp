// Gradient-based counterexample search over states: multi-start projected
// gradient descent on a condition objective, and local augmentation around
// found counterexamples.
#pragma once

#include <optional>
#include <vector>

#include "nbf/bounds.hpp"
#include "nbf/graph.hpp"

namespace nbf {

struct AttackConfig {
    int restarts = 50;
    int steps = 100;
    double step_frac = 0.1;    // step size as a fraction of the per-dim box width
    int batch = 32;            // augmentation batch per counterexample
    double radius_frac = 0.05; // augmentation box radius as a fraction of domain width
    uint64_t seed = 0;

    json to_json() const;
    static AttackConfig from_json(const json& j);
};

struct AttackResult {
    Eigen::VectorXd x;
    double value;  // re-evaluated through the graph, not trusted from the descent
};

// Best point found by multi-start PGD (half uniform starts, half corners and
// center). Deterministic given the generator state; ties break on value then
// lexicographic state.
AttackResult pgd_minimize(const CompGraph& g, const Box& domain, int restarts, int steps,
                          double step_frac, Rng& rng);

// A counterexample (value < 0) if one is found.
std::optional<AttackResult> pgd_falsify(const CompGraph& g, const Box& domain,
                                        const AttackConfig& cfg);

// For each counterexample: sample a batch in a small box around it (clipped to
// the domain) and refine each sample by PGD. Returns all refined states.
std::vector<Eigen::VectorXd> augment(const std::vector<Eigen::VectorXd>& ces, const Box& domain,
                                     const CompGraph& g, const AttackConfig& cfg);

}  // namespace nbf
