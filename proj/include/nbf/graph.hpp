// Scalar-output computation DAGs over composed networks and affine dynamics.
// Nodes are appended in topological order; evaluation, input gradients, and
// the bound propagators all walk the same node list.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nbf/mlp.hpp"

namespace nbf {

enum class NodeKind { Input, Affine, Relu, Sum, Negate, ConstAffinePre };

struct GraphNode {
    NodeKind kind;
    std::vector<int> in;   // predecessor ids
    Eigen::MatrixXd W;     // Affine / ConstAffinePre weight
    Eigen::VectorXd c;     // Affine / ConstAffinePre bias
    Eigen::Index dim = 0;  // output dimension
};

struct CompGraph {
    std::vector<GraphNode> nodes;
    int input = -1;   // the unique Input node
    int output = -1;  // scalar output node

    int add_input(Eigen::Index dim);
    // Learnable affine layer (barrier or controller weights).
    int add_affine(int src, Eigen::MatrixXd W, Eigen::VectorXd b);
    // Fixed affine map applied ahead of a subgraph (dynamics matrices).
    int add_const_affine(int src, Eigen::MatrixXd P, Eigen::VectorXd q);
    int add_relu(int src);
    int add_sum(int a, int b);  // elementwise
    int add_negate(int src);
    // Append all layers of a network fed by src; returns its output node.
    int add_mlp(int src, const Mlp& net);
    void set_output(int id);

    Eigen::Index input_dim() const { return nodes[input].dim; }
    Eigen::Index relu_count() const;

    // Values of every node at x (index = node id).
    std::vector<Eigen::VectorXd> forward_all(const Eigen::VectorXd& x) const;
    double eval(const Eigen::VectorXd& x) const;
    // Reverse-mode d(output)/dx; ReLU uses slope 0 on the inactive side and at 0.
    Eigen::VectorXd grad_input(const Eigen::VectorXd& x) const;

    void validate() const;

private:
    int push(GraphNode n);
};

}  // namespace nbf
