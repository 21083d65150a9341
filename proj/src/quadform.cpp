#include "nbf/quadform.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace nbf {

QuadMin box_quadratic_min(const BoxQuadratic& q, const Box& domain) {
    const Eigen::Index n = q.dim();
    if (domain.dim() != n) throw std::invalid_argument("box_quadratic_min: dimension mismatch");
    if (n > 12) throw std::invalid_argument("box_quadratic_min: dimension too large for face enumeration");

    QuadMin best{std::numeric_limits<double>::infinity(), Eigen::VectorXd()};
    auto consider = [&](const Eigen::VectorXd& x) {
        const double v = q.eval(x);
        if (v < best.value) best = {v, x};
    };

    // face code per dimension: 0 = at lo, 1 = at hi, 2 = free
    std::vector<int> code(n, 0);
    size_t total = 1;
    for (Eigen::Index i = 0; i < n; ++i) total *= 3;
    for (size_t face = 0; face < total; ++face) {
        size_t f = face;
        std::vector<Eigen::Index> free_dims;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i, f /= 3) {
            code[i] = int(f % 3);
            if (code[i] == 0) x[i] = domain.lo[i];
            else if (code[i] == 1) x[i] = domain.hi[i];
            else free_dims.push_back(i);
        }
        if (free_dims.empty()) {
            consider(x);  // vertex
            continue;
        }
        // interior stationary point of the face, valid only if the restricted
        // Hessian is positive definite (otherwise sub-faces hold the minimum)
        const Eigen::Index k = Eigen::Index(free_dims.size());
        Eigen::MatrixXd Qf(k, k);
        Eigen::VectorXd rf(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            rf[a] = q.r[free_dims[size_t(a)]];
            for (Eigen::Index b = 0; b < k; ++b)
                Qf(a, b) = q.Q(free_dims[size_t(a)], free_dims[size_t(b)]);
            for (Eigen::Index i = 0; i < n; ++i)
                if (code[i] != 2) rf[a] += 2.0 * q.Q(free_dims[size_t(a)], i) * x[i];
        }
        Eigen::LLT<Eigen::MatrixXd> llt(Qf);
        if (llt.info() != Eigen::Success) continue;
        Eigen::VectorXd y = llt.solve(-0.5 * rf);
        bool inside = true;
        for (Eigen::Index a = 0; a < k; ++a) {
            const Eigen::Index d = free_dims[size_t(a)];
            if (y[a] < domain.lo[d] || y[a] > domain.hi[d]) { inside = false; break; }
        }
        if (!inside) continue;
        for (Eigen::Index a = 0; a < k; ++a) x[free_dims[size_t(a)]] = y[a];
        consider(x);
    }
    return best;
}

}  // namespace nbf
