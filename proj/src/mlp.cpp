#include "nbf/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace nbf {

Eigen::Index Mlp::relu_count() const {
    Eigen::Index n = 0;
    for (size_t i = 0; i + 1 < layers.size(); ++i) n += layers[i].weight.rows();
    return n;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
    if (x.size() != in_dim()) throw std::invalid_argument("mlp forward: dimension mismatch");
    Eigen::VectorXd h = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        h = layers[i].apply(h);
        if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
    }
    return h;
}

std::vector<Eigen::VectorXd> Mlp::forward_trace(const Eigen::VectorXd& x) const {
    std::vector<Eigen::VectorXd> acts;
    acts.reserve(layers.size() + 1);
    acts.push_back(x);
    Eigen::VectorXd h = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        h = layers[i].apply(h);
        if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
        acts.push_back(h);
    }
    return acts;
}

void Mlp::validate() const {
    if (layers.empty()) throw std::invalid_argument("mlp has no layers");
    for (auto& l : layers)
        if (l.bias.size() != l.weight.rows())
            throw std::invalid_argument("mlp layer bias/weight row mismatch");
    for (size_t i = 0; i + 1 < layers.size(); ++i)
        if (layers[i + 1].weight.cols() != layers[i].weight.rows())
            throw std::invalid_argument("mlp adjacent layer dimension mismatch");
}

json Mlp::to_json() const {
    json ls = json::array();
    for (auto& l : layers) ls.push_back({{"weight", nbf::to_json(l.weight)}, {"bias", nbf::to_json(l.bias)}});
    return {{"layers", ls}};
}

Mlp Mlp::from_json(const json& j) {
    Mlp net;
    for (auto& l : j.at("layers"))
        net.layers.push_back({matrix_from_json(l.at("weight")), vector_from_json(l.at("bias"))});
    net.validate();
    return net;
}

Mlp random_mlp(const std::vector<Eigen::Index>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("random_mlp needs at least input and output sizes");
    Mlp net;
    for (size_t i = 0; i + 1 < sizes.size(); ++i) {
        const Eigen::Index nin = sizes[i], nout = sizes[i + 1];
        const double wb = std::sqrt(6.0 / double(nin)), bb = 1.0 / std::sqrt(double(nin));
        AffineMap l;
        l.weight.resize(nout, nin);
        l.bias.resize(nout);
        for (Eigen::Index r = 0; r < nout; ++r)
            for (Eigen::Index c = 0; c < nin; ++c) l.weight(r, c) = rng.uniform(-wb, wb);
        for (Eigen::Index r = 0; r < nout; ++r) l.bias[r] = rng.uniform(-bb, bb);
        net.layers.push_back(std::move(l));
    }
    return net;
}

}  // namespace nbf
