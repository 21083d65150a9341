// Cutting-plane fine-tuning of the output layer (C, b) with the basis, A and
// i* frozen. Sampled condition constraints are linear in w = vec(C, b), so
// the feasible output layers form a polyhedron: query its analytic center,
// verify, and cut on counterexamples until verified feasible or provably empty.
#pragma once

#include <limits>

#include "nbf/attack.hpp"
#include "nbf/train.hpp"
#include "nbf/verifier.hpp"

namespace nbf {

// One linear constraint g'w >= h on the stacked output layer, normalized to
// |g| = 1 at construction.
struct CutConstraint {
    Eigen::VectorXd g;
    double h = 0.0;
    std::string origin;      // condition that generated it
    Eigen::VectorXd state;   // sample the condition was evaluated at

    double slack(const Eigen::VectorXd& w) const { return g.dot(w) - h; }
};

// Cuts plus the bounding box |w_i| <= radius.
struct LocalizationSet {
    Eigen::Index dim = 0;
    double radius = 10.0;
    std::vector<CutConstraint> cuts;

    LocalizationSet(Eigen::Index d, double r) : dim(d), radius(r) {}

    // Normalize, drop vacuous all-zero cuts, drop duplicates. Returns whether
    // the cut was installed.
    bool add(CutConstraint cut);
};

// w layout: C row-major, then b.
Eigen::VectorXd extract_weights(const VectorBarrier& bf);
void install_weights(VectorBarrier& bf, const Eigen::VectorXd& w);

// Linear constraints induced by the current samples:
//   su sample:          B_{i*}(x) >= eps_u
//   s0 sample, row i:  -B_i(x)    >= 0
//   sx sample, row i:   a_i'B(x) - B_i(f(x)) >= 0
std::vector<CutConstraint> cuts_from_samples(const VectorBarrier& bf, const ClosedLoop& sys,
                                             const SampleSet& samples, double eps_u);

struct PhaseOneResult {
    Eigen::VectorXd w;   // maximizer of the worst-case slack
    double s_star;       // max over w of min slack (cuts and box)
};

// Interior-point solve of max_w min_k slack_k; s_star <= tolerance means the
// localization set has (numerically) empty interior.
PhaseOneResult phase_one(const LocalizationSet& loc);

// Minimizer of the log-barrier potential of all cuts and the box, from a
// strictly feasible start. Polishes until the potential gradient norm is
// <= 1e-6 or, on sets whose potential is too large for that to be resolvable
// in doubles, until the Newton decrement certifies the potential is within
// its floating-point resolution of the center's.
Eigen::VectorXd analytic_center(const LocalizationSet& loc, const Eigen::VectorXd& w0);

struct AccpmConfig {
    int max_iters = 200;
    double eps_u = 1e-6;        // margin demanded of B_{i*} on unsafe samples
    double radius = 10.0;
    double empty_tol = 1e-8;    // phase-one s* at or below this reports Empty
    double budget_seconds = std::numeric_limits<double>::infinity();
    VerifierConfig verifier;
    AttackConfig attack;
    uint64_t seed = 0;

    json to_json() const;
    static AccpmConfig from_json(const json& j);
};

struct AccpmResult {
    enum class Status { Feasible, Empty, Budget };
    Status status = Status::Budget;
    VectorBarrier barrier;        // Feasible: the verified barrier
    VerificationReport report;    // Feasible: the all-certified report
    int iterations = 0;
    double s_star = 0.0;          // last phase-one value
    std::string stop_reason;
    SampleSet samples;            // input samples plus accumulated counterexamples
    json trace = json::array();   // one record per iteration

    json to_json() const;
};

// The barrier's C and b are re-synthesized from scratch; phi, A and i* are
// taken from `bf` and stay fixed.
AccpmResult accpm_finetune(const VectorBarrier& bf, const ClosedLoop& sys, const SafetySpec& spec,
                           SampleSet samples, const AccpmConfig& cfg);

}  // namespace nbf
