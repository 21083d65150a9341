// The synthesized object: B(x) = C·phi(x) + b with a nonnegative matrix A and
// a distinguished component i*. The basis phi is either a ReLU network, the
// identity, or a fixed quadratic monomial map.
#pragma once

#include <Eigen/Dense>

#include "nbf/mlp.hpp"

namespace nbf {

enum class Basis { Identity, MlpNet, Quadratic };

struct VectorBarrier {
    Basis basis = Basis::MlpNet;
    Mlp phi;               // used when basis == MlpNet
    Eigen::Index state_dim = 0;  // used by Identity and Quadratic bases
    Eigen::MatrixXd C;     // m x M
    Eigen::VectorXd b;     // m
    Eigen::MatrixXd A;     // m x m, elementwise >= 0
    Eigen::Index i_star = 0;  // 0-based

    Eigen::Index m() const { return C.rows(); }
    Eigen::Index M() const { return C.cols(); }
    Eigen::Index input_dim() const;

    // phi(x): network output, x itself, or (x_1..x_n, x_1^2, x_1 x_2, ..., x_n^2).
    Eigen::VectorXd features(const Eigen::VectorXd& x) const;
    Eigen::VectorXd eval(const Eigen::VectorXd& x) const;  // C*features(x) + b

    void validate() const;
    json to_json() const;
    static VectorBarrier from_json(const json& j);
};

// Quadratic monomial feature count for an n-dimensional state.
inline Eigen::Index quadratic_feature_dim(Eigen::Index n) { return n + n * (n + 1) / 2; }

}  // namespace nbf
