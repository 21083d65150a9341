// Sound output bounds for a CompGraph over a box: interval propagation and a
// backward linear relaxation that carries affine lower/upper envelopes from
// the output back to the input.
#pragma once

#include <vector>

#include "nbf/box.hpp"
#include "nbf/graph.hpp"

namespace nbf {

struct Interval {
    double lo, hi;
};

// Per-unit value bounds for one graph node.
struct NodeBounds {
    Eigen::VectorXd lo, hi;
};

struct LinearBounds {
    Eigen::VectorXd lower_coef;
    double lower_off = 0.0;
    Eigen::VectorXd upper_coef;
    double upper_off = 0.0;

    Interval concretize(const Box& domain) const;
};

// Interval arithmetic through every node; index = node id.
std::vector<NodeBounds> ibp_all(const CompGraph& g, const Box& domain);

// Output-node interval by interval propagation.
Interval ibp(const CompGraph& g, const Box& domain);

// Backward affine relaxation using precomputed per-node intervals (for the
// ReLU pre-activations). Returns the affine envelopes and their concretization.
std::pair<LinearBounds, Interval> backward_linear(const CompGraph& g, const Box& domain,
                                                  const std::vector<NodeBounds>& pre);

// Best-of-both convenience: max of lower bounds, min of upper bounds.
Interval best_bounds(const CompGraph& g, const Box& domain);

}  // namespace nbf
