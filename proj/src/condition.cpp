#include "nbf/condition.hpp"

#include <stdexcept>

namespace nbf {

std::string ConditionId::name() const {
    switch (kind) {
        case UnsafePositivity: return "unsafe_positivity";
        case InitNonpositivity: return "init_nonpositivity_" + std::to_string(row + 1);
        case Decrease: return "decrease_" + std::to_string(row + 1);
    }
    return "?";
}

std::vector<ConditionId> all_conditions(Eigen::Index m) {
    std::vector<ConditionId> out;
    out.push_back({ConditionId::UnsafePositivity, 0});
    for (Eigen::Index i = 0; i < m; ++i) out.push_back({ConditionId::InitNonpositivity, i});
    for (Eigen::Index i = 0; i < m; ++i) out.push_back({ConditionId::Decrease, i});
    return out;
}

const Box& condition_domain(const ConditionId& cond, const SafetySpec& spec) {
    switch (cond.kind) {
        case ConditionId::UnsafePositivity: return spec.unsafe;
        case ConditionId::InitNonpositivity: return spec.initial;
        case ConditionId::Decrease: return spec.workspace;
    }
    throw std::logic_error("unreachable condition kind");
}

namespace {

// Appends the basis subgraph fed by src; returns the feature node.
int add_features(CompGraph& g, int src, const VectorBarrier& bf) {
    switch (bf.basis) {
        case Basis::Identity: return src;
        case Basis::MlpNet: return g.add_mlp(src, bf.phi);
        case Basis::Quadratic:
            throw std::invalid_argument("quadratic basis has no graph form; use build_condition_quad");
    }
    throw std::logic_error("unreachable basis");
}

// Appends nodes computing f_pi(x) from the input node.
int add_closed_loop(CompGraph& g, int x_node, const ClosedLoop& sys) {
    const int drift = g.add_const_affine(x_node, sys.dynamics.a_d, sys.dynamics.c_d);
    if (!sys.controller) return drift;
    const int u = g.add_mlp(x_node, *sys.controller);
    const int forced = g.add_const_affine(u, sys.dynamics.b_d,
                                          Eigen::VectorXd::Zero(sys.dynamics.state_dim()));
    return g.add_sum(drift, forced);
}

Eigen::MatrixXd row_of(const Eigen::MatrixXd& C, Eigen::Index i) { return C.row(i); }

Eigen::VectorXd scalar1(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

CompGraph build_condition_graph(const VectorBarrier& bf, const ClosedLoop& sys,
                                const ConditionId& cond) {
    bf.validate();
    if (cond.row < 0 || cond.row >= bf.m()) throw std::out_of_range("condition row out of range");
    CompGraph g;
    const int x = g.add_input(bf.input_dim());
    switch (cond.kind) {
        case ConditionId::UnsafePositivity: {
            const int feat = add_features(g, x, bf);
            g.set_output(g.add_affine(feat, row_of(bf.C, bf.i_star), scalar1(bf.b[bf.i_star])));
            break;
        }
        case ConditionId::InitNonpositivity: {
            const int feat = add_features(g, x, bf);
            g.set_output(g.add_affine(feat, -row_of(bf.C, cond.row), scalar1(-bf.b[cond.row])));
            break;
        }
        case ConditionId::Decrease: {
            // a_i'B(x), with the same feature subgraph weights reused for B_i(f(x))
            const Eigen::VectorXd a_i = bf.A.row(cond.row).transpose();
            const int feat_now = add_features(g, x, bf);
            const int lhs = g.add_affine(feat_now, (a_i.transpose() * bf.C).eval(),
                                         scalar1(a_i.dot(bf.b)));
            const int fx = add_closed_loop(g, x, sys);
            const int feat_next = add_features(g, fx, bf);
            const int rhs = g.add_affine(feat_next, row_of(bf.C, cond.row), scalar1(bf.b[cond.row]));
            g.set_output(g.add_sum(lhs, g.add_negate(rhs)));
            break;
        }
    }
    g.validate();
    return g;
}

namespace {

// {Q, r, c} of B_i(x) for the quadratic monomial basis, from row i of (C, b).
BoxQuadratic row_quadratic(const VectorBarrier& bf, Eigen::Index i) {
    const Eigen::Index n = bf.state_dim;
    BoxQuadratic q;
    q.Q = Eigen::MatrixXd::Zero(n, n);
    q.r = bf.C.row(i).head(n).transpose();
    q.c = bf.b[i];
    Eigen::Index k = n;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b2 = a; b2 < n; ++b2, ++k) {
            const double coef = bf.C(i, k);
            if (a == b2) q.Q(a, a) = coef;
            else {
                q.Q(a, b2) = 0.5 * coef;
                q.Q(b2, a) = 0.5 * coef;
            }
        }
    return q;
}

// B(Sx + t) for quadratic B: exact composition with an affine map.
BoxQuadratic compose_affine(const BoxQuadratic& q, const Eigen::MatrixXd& S,
                            const Eigen::VectorXd& t) {
    BoxQuadratic out;
    out.Q = S.transpose() * q.Q * S;
    out.r = S.transpose() * (q.r + 2.0 * (q.Q * t));
    out.c = q.c + q.r.dot(t) + t.dot(q.Q * t);
    return out;
}

}  // namespace

BoxQuadratic build_condition_quad(const VectorBarrier& bf, const ClosedLoop& sys,
                                  const ConditionId& cond) {
    bf.validate();
    if (bf.basis != Basis::Quadratic)
        throw std::invalid_argument("build_condition_quad requires the quadratic basis");
    if (cond.row < 0 || cond.row >= bf.m()) throw std::out_of_range("condition row out of range");
    switch (cond.kind) {
        case ConditionId::UnsafePositivity:
            return row_quadratic(bf, bf.i_star);
        case ConditionId::InitNonpositivity: {
            BoxQuadratic q = row_quadratic(bf, cond.row);
            q.Q = -q.Q;
            q.r = -q.r;
            q.c = -q.c;
            return q;
        }
        case ConditionId::Decrease: {
            if (sys.controller)
                throw std::invalid_argument(
                    "quadratic basis requires a controller-free affine loop");
            // sum_j a_ij B_j(x) - B_i(Ax + c)
            const Eigen::Index n = bf.state_dim;
            BoxQuadratic acc{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), 0.0};
            for (Eigen::Index j = 0; j < bf.m(); ++j) {
                const double a_ij = bf.A(cond.row, j);
                const BoxQuadratic qj = row_quadratic(bf, j);
                acc.Q += a_ij * qj.Q;
                acc.r += a_ij * qj.r;
                acc.c += a_ij * qj.c;
            }
            const BoxQuadratic next =
                compose_affine(row_quadratic(bf, cond.row), sys.dynamics.a_d, sys.dynamics.c_d);
            acc.Q -= next.Q;
            acc.r -= next.r;
            acc.c -= next.c;
            return acc;
        }
    }
    throw std::logic_error("unreachable condition kind");
}

double eval_condition(const VectorBarrier& bf, const ClosedLoop& sys, const ConditionId& cond,
                      const Eigen::VectorXd& x) {
    switch (cond.kind) {
        case ConditionId::UnsafePositivity: return bf.eval(x)[bf.i_star];
        case ConditionId::InitNonpositivity: return -bf.eval(x)[cond.row];
        case ConditionId::Decrease: {
            const Eigen::VectorXd bx = bf.eval(x), bnext = bf.eval(sys.step(x));
            return bf.A.row(cond.row).dot(bx) - bnext[cond.row];
        }
    }
    throw std::logic_error("unreachable condition kind");
}

}  // namespace nbf
