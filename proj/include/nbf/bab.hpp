// Branch and bound over an input box: certify a graph's minimum against a
// threshold, refine the global minimum to a gap tolerance, and a small-scale
// exact oracle by ReLU activation-pattern enumeration.
#pragma once

#include <string>
#include <utility>

#include "nbf/attack.hpp"
#include "nbf/bounds.hpp"

namespace nbf {

struct BabConfig {
    double kappa = 0.0;          // certify: min over the box must be >= kappa
    size_t max_nodes = 200000;   // explored-node budget
    int probe_steps = 12;        // descent steps per popped node
    int probe_restarts = 4;      // multi-start probes at the root / on cadence
    size_t probe_every = 256;    // full multi-start probe every this many pops
    double boundary_gap = 1e-12; // nodes pinned this tightly below kappa stop splitting
    double boundary_width = 1e-12;
    uint64_t seed = 0;

    json to_json() const;
    static BabConfig from_json(const json& j);
};

struct ConditionStatus {
    enum class Verdict { Certified, Falsified, Unknown };
    Verdict verdict = Verdict::Unknown;
    // Certified: proven min over the domain (>= kappa).
    // Unknown: best proven lower bound. Falsified: equals value.
    double lower_bound = 0.0;
    // Best value actually found (+inf if nothing was evaluated).
    double value = std::numeric_limits<double>::infinity();
    // Falsified: the counterexample. Otherwise the best minimizer found (may be empty).
    Eigen::VectorXd witness;
    size_t nodes = 0;
    std::string condition;  // filled in by the verifier

    json to_json() const;
    static ConditionStatus from_json(const json& j);
};

// Certify min_{x in domain} g(x) >= cfg.kappa, or produce a counterexample with
// a strictly negative exact value, or report Unknown with the best bracket.
ConditionStatus bab_min(const CompGraph& g, const Box& domain, const BabConfig& cfg);

struct GlobalMin {
    double lower_bound;
    double value;  // best found; converged means value - lower_bound <= gap_tol
    Eigen::VectorXd argmin;
    size_t nodes = 0;
    bool converged = false;
};

// Refine the global minimum until value - lower_bound <= gap_tol.
GlobalMin bab_global_min(const CompGraph& g, const Box& domain, double gap_tol,
                         size_t max_nodes = 2000000, uint64_t seed = 0);

// Exact minimum by enumerating ReLU activation patterns and the vertices of
// each pattern's polytope. Only for small graphs (<= 16 unstable units,
// input dimension <= 4). Returns (min value, argmin).
std::pair<double, Eigen::VectorXd> brute_force_min(const CompGraph& g, const Box& domain);

}  // namespace nbf
