// Exact global minimization of a quadratic x'Qx + r'x + c over a box by face
// enumeration: every face contributes its interior stationary point (when the
// restricted Hessian is positive definite) and the vertices cover the rest.
#pragma once

#include <Eigen/Dense>

#include "nbf/box.hpp"

namespace nbf {

struct BoxQuadratic {
    Eigen::MatrixXd Q;  // symmetric n x n
    Eigen::VectorXd r;
    double c = 0.0;

    double eval(const Eigen::VectorXd& x) const { return x.dot(Q * x) + r.dot(x) + c; }
    Eigen::Index dim() const { return r.size(); }
};

struct QuadMin {
    double value;
    Eigen::VectorXd argmin;
};

// Exact (up to roundoff) global minimum over the box. dim must be small; the
// face count is 3^dim.
QuadMin box_quadratic_min(const BoxQuadratic& q, const Box& domain);

}  // namespace nbf
