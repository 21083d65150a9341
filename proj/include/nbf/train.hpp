// Empirical-risk training of a vector barrier on sampled states: hinge losses
// for the three conditions, analytic gradients, Adam, and the restart
// perturbation used between synthesis rounds.
#pragma once

#include "nbf/barrier.hpp"
#include "nbf/box.hpp"
#include "nbf/system.hpp"

namespace nbf {

struct TrainConfig {
    int epochs = 2000;
    int minibatch = 1024;          // used only when the sample count exceeds full_batch_limit
    int full_batch_limit = 4096;
    double lr = 1e-3;
    double margin_init = 0.01;     // hinge margin on initial-set samples
    double margin_unsafe = 0.01;   // hinge margin on unsafe-set samples
    double margin_decrease = 0.01; // hinge margin on workspace samples
    bool train_a = true;           // keep A fixed when false
    uint64_t seed = 0;

    json to_json() const;
    static TrainConfig from_json(const json& j);
};

// Mean hinge violation of the three conditions over the sample set:
//   init:     1' relu(B(x) + margin)          over s0
//   unsafe:   e_{i*}' relu(margin - B(x))     over su
//   decrease: 1' relu(B(f(x)) - A B(x) + margin)  over sx
double barrier_loss(const VectorBarrier& bf, const SampleSet& samples, const ClosedLoop& sys,
                    const TrainConfig& cfg);

// Parameter gradients of barrier_loss, shaped like the parameters themselves.
struct BarrierGrads {
    std::vector<AffineMap> phi;  // per-layer weight/bias gradients (MlpNet basis)
    Eigen::MatrixXd C;
    Eigen::VectorXd b;
    Eigen::MatrixXd A;
};

std::pair<double, BarrierGrads> barrier_loss_grads(const VectorBarrier& bf,
                                                   const SampleSet& samples, const ClosedLoop& sys,
                                                   const TrainConfig& cfg);

// Adam on (phi weights, C, b, A) against barrier_loss. A is projected onto the
// nonnegative orthant after every step. Full-batch when the sample set is
// small, minibatched otherwise. Throws on non-finite loss.
VectorBarrier train_barrier(VectorBarrier bf, const SampleSet& samples, const ClosedLoop& sys,
                            const TrainConfig& cfg);

// Blend every learnable parameter with a fresh random network of identical
// architecture: p <- lambda p + sigma p_fresh; A is re-projected afterwards.
VectorBarrier shrink_and_perturb(const VectorBarrier& bf, double lambda, double sigma, Rng& rng);

// Fresh barrier: random phi (for network bases), random (C, b), A = I + U[0, 0.1].
VectorBarrier random_barrier(Basis basis, const std::vector<Eigen::Index>& phi_sizes,
                             Eigen::Index m, Eigen::Index state_dim, Rng& rng);

}  // namespace nbf
