#include "nbf/graph.hpp"

#include <stdexcept>

namespace nbf {

int CompGraph::push(GraphNode n) {
    for (int p : n.in)
        if (p < 0 || p >= int(nodes.size()))
            throw std::invalid_argument("graph node references a later or missing node");
    nodes.push_back(std::move(n));
    return int(nodes.size()) - 1;
}

int CompGraph::add_input(Eigen::Index dim) {
    if (input != -1) throw std::logic_error("graph already has an input node");
    input = push({NodeKind::Input, {}, {}, {}, dim});
    return input;
}

int CompGraph::add_affine(int src, Eigen::MatrixXd W, Eigen::VectorXd b) {
    if (W.cols() != nodes[src].dim || W.rows() != b.size())
        throw std::invalid_argument("affine node dimension mismatch");
    const Eigen::Index d = W.rows();
    return push({NodeKind::Affine, {src}, std::move(W), std::move(b), d});
}

int CompGraph::add_const_affine(int src, Eigen::MatrixXd P, Eigen::VectorXd q) {
    if (P.cols() != nodes[src].dim || P.rows() != q.size())
        throw std::invalid_argument("const affine node dimension mismatch");
    const Eigen::Index d = P.rows();
    return push({NodeKind::ConstAffinePre, {src}, std::move(P), std::move(q), d});
}

int CompGraph::add_relu(int src) {
    return push({NodeKind::Relu, {src}, {}, {}, nodes[src].dim});
}

int CompGraph::add_sum(int a, int b) {
    if (nodes[a].dim != nodes[b].dim) throw std::invalid_argument("sum node dimension mismatch");
    return push({NodeKind::Sum, {a, b}, {}, {}, nodes[a].dim});
}

int CompGraph::add_negate(int src) {
    return push({NodeKind::Negate, {src}, {}, {}, nodes[src].dim});
}

int CompGraph::add_mlp(int src, const Mlp& net) {
    int cur = src;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        cur = add_affine(cur, net.layers[i].weight, net.layers[i].bias);
        if (i + 1 < net.layers.size()) cur = add_relu(cur);
    }
    return cur;
}

void CompGraph::set_output(int id) {
    if (nodes[id].dim != 1) throw std::invalid_argument("output node must be scalar");
    output = id;
}

Eigen::Index CompGraph::relu_count() const {
    Eigen::Index n = 0;
    for (auto& nd : nodes)
        if (nd.kind == NodeKind::Relu) n += nd.dim;
    return n;
}

void CompGraph::validate() const {
    if (input < 0 || output < 0) throw std::logic_error("graph missing input or output");
    if (nodes[output].dim != 1) throw std::logic_error("graph output is not scalar");
}

std::vector<Eigen::VectorXd> CompGraph::forward_all(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("graph eval: dimension mismatch");
    std::vector<Eigen::VectorXd> val(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        const GraphNode& n = nodes[i];
        switch (n.kind) {
            case NodeKind::Input: val[i] = x; break;
            case NodeKind::Affine:
            case NodeKind::ConstAffinePre: val[i] = n.W * val[n.in[0]] + n.c; break;
            case NodeKind::Relu: val[i] = val[n.in[0]].cwiseMax(0.0); break;
            case NodeKind::Sum: val[i] = val[n.in[0]] + val[n.in[1]]; break;
            case NodeKind::Negate: val[i] = -val[n.in[0]]; break;
        }
    }
    return val;
}

double CompGraph::eval(const Eigen::VectorXd& x) const {
    return forward_all(x)[output][0];
}

Eigen::VectorXd CompGraph::grad_input(const Eigen::VectorXd& x) const {
    const auto val = forward_all(x);
    std::vector<Eigen::VectorXd> adj(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) adj[i] = Eigen::VectorXd::Zero(nodes[i].dim);
    adj[output][0] = 1.0;
    for (int i = int(nodes.size()) - 1; i >= 0; --i) {
        const GraphNode& n = nodes[i];
        if (adj[i].isZero(0.0)) continue;
        switch (n.kind) {
            case NodeKind::Input: break;
            case NodeKind::Affine:
            case NodeKind::ConstAffinePre: adj[n.in[0]] += n.W.transpose() * adj[i]; break;
            case NodeKind::Relu:
                adj[n.in[0]] +=
                    ((val[n.in[0]].array() > 0.0).cast<double>() * adj[i].array()).matrix();
                break;
            case NodeKind::Sum:
                adj[n.in[0]] += adj[i];
                adj[n.in[1]] += adj[i];
                break;
            case NodeKind::Negate: adj[n.in[0]] -= adj[i]; break;
        }
    }
    return adj[input];
}

}  // namespace nbf
