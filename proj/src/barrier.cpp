#include "nbf/barrier.hpp"

#include <stdexcept>

namespace nbf {

Eigen::Index VectorBarrier::input_dim() const {
    return basis == Basis::MlpNet ? phi.in_dim() : state_dim;
}

Eigen::VectorXd VectorBarrier::features(const Eigen::VectorXd& x) const {
    switch (basis) {
        case Basis::Identity:
            return x;
        case Basis::MlpNet:
            return phi.forward(x);
        case Basis::Quadratic: {
            const Eigen::Index n = x.size();
            Eigen::VectorXd f(quadratic_feature_dim(n));
            f.head(n) = x;
            Eigen::Index k = n;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = i; j < n; ++j) f[k++] = x[i] * x[j];
            return f;
        }
    }
    throw std::logic_error("unreachable basis");
}

Eigen::VectorXd VectorBarrier::eval(const Eigen::VectorXd& x) const {
    return C * features(x) + b;
}

void VectorBarrier::validate() const {
    const Eigen::Index expected_M =
        basis == Basis::Identity    ? state_dim
        : basis == Basis::Quadratic ? quadratic_feature_dim(state_dim)
                                    : phi.out_dim();
    if (basis == Basis::MlpNet) phi.validate();
    else if (state_dim <= 0) throw std::invalid_argument("barrier basis needs a positive state dimension");
    if (C.cols() != expected_M) throw std::invalid_argument("barrier C columns do not match basis output");
    if (b.size() != C.rows()) throw std::invalid_argument("barrier b length does not match C rows");
    if (A.rows() != C.rows() || A.cols() != C.rows())
        throw std::invalid_argument("barrier A must be m x m");
    if ((A.array() < 0.0).any()) throw std::invalid_argument("barrier A has a negative entry");
    if (i_star < 0 || i_star >= C.rows()) throw std::invalid_argument("barrier i_star out of range");
}

json VectorBarrier::to_json() const {
    json j{{"C", nbf::to_json(C)},
           {"b", nbf::to_json(b)},
           {"A", nbf::to_json(A)},
           {"i_star", i_star + 1}};  // 1-based on disk
    switch (basis) {
        case Basis::Identity:
            j["basis"] = {{"type", "identity"}, {"dim", state_dim}};
            break;
        case Basis::Quadratic:
            j["basis"] = {{"type", "quadratic"}, {"dim", state_dim}};
            break;
        case Basis::MlpNet:
            j["phi"] = phi.to_json();
            break;
    }
    return j;
}

VectorBarrier VectorBarrier::from_json(const json& j) {
    VectorBarrier bf;
    bf.C = matrix_from_json(j.at("C"));
    bf.b = vector_from_json(j.at("b"));
    bf.A = matrix_from_json(j.at("A"));
    bf.i_star = j.at("i_star").get<Eigen::Index>() - 1;
    if (j.contains("basis")) {
        const std::string type = j.at("basis").at("type").get<std::string>();
        bf.state_dim = j.at("basis").at("dim").get<Eigen::Index>();
        if (type == "identity") bf.basis = Basis::Identity;
        else if (type == "quadratic") bf.basis = Basis::Quadratic;
        else throw std::invalid_argument("unknown barrier basis type: " + type);
    } else {
        bf.basis = Basis::MlpNet;
        bf.phi = Mlp::from_json(j.at("phi"));
    }
    bf.validate();
    return bf;
}

}  // namespace nbf
