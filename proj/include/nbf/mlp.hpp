// ReLU multi-layer perceptrons: evaluation, layer access, JSON weights.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nbf/jsonio.hpp"
#include "nbf/rng.hpp"

namespace nbf {

struct AffineMap {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return weight * x + bias; }
};

// Affine layers with ReLU between consecutive layers and none after the last.
struct Mlp {
    std::vector<AffineMap> layers;

    Eigen::Index in_dim() const { return layers.front().weight.cols(); }
    Eigen::Index out_dim() const { return layers.back().weight.rows(); }
    // Hidden ReLU unit count (activations after all but the final layer).
    Eigen::Index relu_count() const;

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    // Post-activation values per layer (index 0 is the input itself); the last
    // entry is the network output. Used by training backprop.
    std::vector<Eigen::VectorXd> forward_trace(const Eigen::VectorXd& x) const;

    void validate() const;
    json to_json() const;
    static Mlp from_json(const json& j);
};

// Uniform fan-in scaled initialization for ReLU layers.
Mlp random_mlp(const std::vector<Eigen::Index>& sizes, Rng& rng);

}  // namespace nbf
