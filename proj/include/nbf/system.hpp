// Affine dynamics closed under a ReLU network policy, trajectory rollout, and
// the bundled benchmark instances.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "nbf/box.hpp"
#include "nbf/mlp.hpp"

namespace nbf {

struct AffineDynamics {
    Eigen::MatrixXd a_d;  // n_x x n_x
    Eigen::MatrixXd b_d;  // n_x x n_u
    Eigen::VectorXd c_d;  // n_x

    Eigen::Index state_dim() const { return a_d.rows(); }
    Eigen::Index input_dim() const { return b_d.cols(); }
};

struct ClosedLoop {
    AffineDynamics dynamics;
    std::optional<Mlp> controller;  // absent means u = 0

    Eigen::VectorXd step(const Eigen::VectorXd& x) const;
    void validate() const;
    json to_json() const;
    static ClosedLoop from_json(const json& j);
};

struct RolloutResult {
    std::vector<Eigen::VectorXd> trajectory;
    bool unsafe = false;  // some visited in-workspace state lay in Xu
};

// Iterate the closed loop from x0 until leaving X or reaching k_max steps.
RolloutResult rollout(const ClosedLoop& sys, const SafetySpec& spec, const Eigen::VectorXd& x0,
                      size_t k_max);

// Default barrier architecture shipped with each benchmark.
struct BenchmarkDef {
    ClosedLoop system;
    SafetySpec spec;
    std::vector<Eigen::Index> barrier_arch;  // phi layer sizes, empty = identity basis
    Eigen::Index barrier_m = 1;
};

// name in {example1, double_integrator, quadrotor6d}
BenchmarkDef builtin(const std::string& name);

// Bundled controller weights (compiled into the library).
Mlp bundled_controller(const std::string& name);

}  // namespace nbf
